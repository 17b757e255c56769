"""Bayesian logistic regression with an independent (diagonal) Gaussian belief.

The belief over the weight vector is kept as a per-coordinate Gaussian
``N(mean_j, 1/precision_j)``.  One binary observation updates the belief by
moving the mean to the regularized MAP of the single-datum problem and adding
the local curvature of the log-likelihood to the precision.  Predictions
marginalize the sigmoid over the Gaussian via the probit approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Alternative",
    "BeliefState",
    "Observation",
    "PriorConfig",
    "ConvergenceError",
    "sigmoid",
    "kappa",
    "predictive_prob",
    "predictive_prob_pool",
    "map_update_single",
    "psi",
    "batch_map_fit",
]


class ConvergenceError(RuntimeError):
    """Raised when an iterative fit stops before meeting its tolerance.

    Carries the last iterate so callers can inspect or salvage it.
    """

    def __init__(self, message: str, last_weights: np.ndarray, grad_norm: float):
        super().__init__(message)
        self.last_weights = last_weights
        self.grad_norm = grad_norm


def _as_readonly(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Alternative:
    """A candidate design: an integer id plus its feature vector.

    When intercept augmentation is on, ``features[0]`` is the constant 1.0.
    """

    id: int
    features: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", _as_readonly(self.features, "features"))

    @property
    def dim(self) -> int:
        return self.features.size


@dataclass(frozen=True)
class BeliefState:
    """Per-coordinate Gaussian over logistic weights: mean and precision."""

    mean: np.ndarray
    precision: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _as_readonly(self.mean, "mean"))
        object.__setattr__(self, "precision", _as_readonly(self.precision, "precision"))
        if self.mean.size != self.precision.size:
            raise ValueError("mean and precision must have the same length")
        if not np.all(self.precision > 0):
            raise ValueError("precision must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class Observation:
    """A measured alternative together with its binary outcome."""

    alternative: Alternative
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label!r}")
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True)
class PriorConfig:
    """Independent zero-mean Gaussian prior with common precision ``lam``.

    ``d`` is the full weight dimension (including the intercept coordinate
    when ``intercept`` is set).
    """

    lam: float
    d: int
    intercept: bool = True

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("prior precision lam must be positive and finite")
        if self.d < 1:
            raise ValueError("dimension d must be >= 1")

    def initial_state(self) -> BeliefState:
        return BeliefState(np.zeros(self.d), np.full(self.d, float(self.lam)))


def sigmoid(a):
    """Logistic function 1/(1+exp(-a)), stable for arguments of any sign.

    Accepts a scalar or an ndarray; the negative branch is computed as
    exp(a)/(1+exp(a)) so exp never sees a large positive argument.
    """
    arr = np.atleast_1d(np.asarray(a, dtype=float))
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ea = np.exp(arr[~pos])
    out[~pos] = ea / (1.0 + ea)
    if np.ndim(a) == 0:
        return float(out[0])
    return out.reshape(np.shape(a))


def kappa(sigma2):
    """Probit-matching shrink factor (1 + pi*sigma2/8)^(-1/2).

    Equals 1 at zero variance and decreases strictly as variance grows.
    """
    arr = np.asarray(sigma2, dtype=float)
    if np.any(arr < 0):
        raise ValueError("variance must be non-negative")
    out = 1.0 / np.sqrt(1.0 + (np.pi / 8.0) * arr)
    if np.ndim(sigma2) == 0:
        return float(out)
    return out


def _predictive_arrays(mean: np.ndarray, precision: np.ndarray, feats: np.ndarray) -> np.ndarray:
    """Marginal P(y=+1) for each row of ``feats`` under (mean, precision)."""
    mu = feats @ mean
    s2 = (feats * feats) @ (1.0 / precision)
    return sigmoid(kappa(s2) * mu)


def predictive_prob(state: BeliefState, x: Alternative) -> float:
    """Marginal probability of a +1 outcome for ``x`` under the belief.

    Computes mu = mean.x and sigma2 = sum_j features_j^2 / precision_j, then
    applies the probit approximation sigmoid(kappa(sigma2) * mu).
    """
    if x.dim != state.dim:
        raise ValueError(f"feature dimension {x.dim} != belief dimension {state.dim}")
    return float(_predictive_arrays(state.mean, state.precision, x.features[None, :])[0])


def predictive_prob_pool(state: BeliefState, pool: Sequence[Alternative]) -> np.ndarray:
    """Vectorized :func:`predictive_prob` over a pool of alternatives."""
    feats = features_matrix(pool)
    if feats.shape[1] != state.dim:
        raise ValueError(f"feature dimension {feats.shape[1]} != belief dimension {state.dim}")
    return _predictive_arrays(state.mean, state.precision, feats)


def features_matrix(pool: Sequence[Alternative]) -> np.ndarray:
    """Stack pool features into an (M, d) matrix, validating a common dim."""
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    dims = {alt.dim for alt in pool}
    if len(dims) != 1:
        raise ValueError(f"pool mixes feature dimensions: {sorted(dims)}")
    return np.stack([alt.features for alt in pool])


_RESIDUAL_TOL = 1e-10
_MAX_BISECT = 200


def _fp_residual(p: float, a: float, b: float) -> float:
    """Residual of the scalar fixed point: 1/p - 1 - exp(a + p*b)."""
    z = a + p * b
    ez = math.exp(z) if z < 709.0 else math.inf
    return 1.0 / p - 1.0 - ez


def _solve_p(a: float, b: float) -> float:
    """Root of 1/p = 1 + exp(a + p*b) on (0, 1) by bisection.

    The left side falls from infinity to 1 while the right side rises from
    1 + exp(a), so the root exists and is unique.  Bisection runs until the
    residual drops below 1e-10 or the bracket cannot shrink any further in
    float64; the latter only happens when the root sits so deep in a sigmoid
    tail that the absolute residual target is unrepresentable.
    """
    if b < 0:
        raise ValueError("b = sum x_j^2 / q_j cannot be negative")
    lo, hi = 1e-15, 1.0 - 1e-15
    mid = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECT):
        f = _fp_residual(mid, a, b)
        if abs(f) < _RESIDUAL_TOL:
            return mid
        if f > 0.0:
            lo = mid
        else:
            hi = mid
        nxt = 0.5 * (lo + hi)
        if nxt == lo or nxt == hi:
            return nxt
        mid = nxt
    return mid


def _update_arrays(
    mean: np.ndarray, precision: np.ndarray, x: np.ndarray, y: int
) -> tuple[np.ndarray, np.ndarray]:
    """One-observation belief update on raw arrays (no validation)."""
    a = float(y * (mean @ x))
    x2 = x * x
    b = float(x2 @ (1.0 / precision))
    p = _solve_p(a, b)
    w = mean + (y * p) * (x / precision)
    s = sigmoid(float(w @ x))
    new_precision = precision + (s * (1.0 - s)) * x2
    return w, new_precision


def map_update_single(state: BeliefState, obs: Observation) -> BeliefState:
    """Fold one observation into the belief.

    The new mean is the MAP of the single-datum objective (see :func:`psi`),
    found through the scalar fixed point 1/p = 1 + exp(y*mean.x) *
    exp(p * sum_j x_j^2/precision_j) and w_j = mean_j + y*p*x_j/precision_j.
    The precision gains the diagonal likelihood curvature
    s(1-s) * x_j^2 evaluated at the new mean, so it never decreases.
    """
    x = obs.alternative
    if x.dim != state.dim:
        raise ValueError(f"feature dimension {x.dim} != belief dimension {state.dim}")
    w, q = _update_arrays(state.mean, state.precision, x.features, obs.label)
    return BeliefState(w, q)


def psi(w, state: BeliefState, data: Sequence[Observation]) -> float:
    """Unnormalized log posterior of weights ``w`` given the belief and data.

    -(1/2) sum_j q_j (w_j - m_j)^2 - sum_i log(1 + exp(-y_i w.x_i)).
    Intended for tests and oracles; the update path does not call it.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (state.dim,):
        raise ValueError(f"w must have shape ({state.dim},), got {w.shape}")
    delta = w - state.mean
    val = -0.5 * float(state.precision @ (delta * delta))
    for obs in data:
        if obs.alternative.dim != state.dim:
            raise ValueError("observation dimension does not match belief")
        z = obs.label * float(w @ obs.alternative.features)
        val -= float(np.logaddexp(0.0, -z))
    return val


def batch_map_fit(
    prior: PriorConfig,
    data: Sequence[Observation],
    tol: float = 1e-8,
    max_iter: int = 100,
) -> np.ndarray:
    """MAP weights for the full data set under the zero-mean prior.

    Damped Newton ascent on the strongly concave log posterior; stops when
    the gradient's infinity norm is at most ``tol``.  Raises
    :class:`ConvergenceError` (carrying the last iterate) if ``max_iter``
    passes without meeting the tolerance.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = prior.d
    w = np.zeros(d)
    if len(data) == 0:
        return w

    feats = features_matrix([obs.alternative for obs in data])
    if feats.shape[1] != d:
        raise ValueError(f"data dimension {feats.shape[1]} != prior dimension {d}")
    y = np.array([obs.label for obs in data], dtype=float)
    lam = float(prior.lam)

    def objective(wv: np.ndarray) -> float:
        z = y * (feats @ wv)
        return -0.5 * lam * float(wv @ wv) - float(np.sum(np.logaddexp(0.0, -z)))

    obj = objective(w)
    for _ in range(max_iter):
        z = y * (feats @ w)
        grad = -lam * w + feats.T @ (y * sigmoid(-z))
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= tol:
            return w
        s = sigmoid(feats @ w)
        hess = lam * np.eye(d) + (feats.T * (s * (1.0 - s))) @ feats
        step = np.linalg.solve(hess, grad)
        # Backtracking keeps the ascent monotone far from the optimum.
        t = 1.0
        slope = float(grad @ step)
        for _ in range(60):
            cand = w + t * step
            cand_obj = objective(cand)
            if cand_obj >= obj + 1e-4 * t * slope:
                break
            t *= 0.5
        w = w + t * step
        obj = objective(w)

    z = y * (feats @ w)
    grad = -lam * w + feats.T @ (y * sigmoid(-z))
    gnorm = float(np.max(np.abs(grad)))
    raise ConvergenceError(
        f"MAP fit did not reach gradient tolerance {tol:g} in {max_iter} iterations "
        f"(grad inf-norm {gnorm:.3e})",
        last_weights=w,
        grad_norm=gnorm,
    )
