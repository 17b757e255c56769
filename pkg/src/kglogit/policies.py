"""Measurement-selection policies over a finite pool of alternatives.

The knowledge-gradient score of measuring ``x`` is the expected
post-measurement maximum of the predictive probability: both hypothetical
one-observation updates (outcome +1 and outcome -1) are computed, the pool
maximum of the predictive probability is taken under each, and the two maxima
are mixed with the current predictive probability of the +1 outcome.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .belief import (
    Alternative,
    BeliefState,
    Observation,
    features_matrix,
    map_update_single,
    predictive_prob,
    predictive_prob_pool,
    _predictive_arrays,
    _update_arrays,
)

__all__ = [
    "PolicyKind",
    "KgScoreReport",
    "TIE_TOL",
    "kg_score_one",
    "kg_select",
    "random_select",
    "most_uncertain_select",
    "implementation_decision",
]

TIE_TOL = 1e-12


class PolicyKind(enum.Enum):
    KG = "kg"
    RANDOM = "random"
    MOST_UNCERTAIN = "uncertain"

    @classmethod
    def parse(cls, token: str) -> "PolicyKind":
        token = token.strip().lower()
        for kind in cls:
            if kind.value == token:
                return kind
        known = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown policy {token!r} (known: {known})")


@dataclass(frozen=True)
class KgScoreReport:
    """Scores for one selection round: one KG value and one predictive
    probability per pool position, plus the tie-broken choice."""

    scores: np.ndarray
    chosen: int
    pos_prob: np.ndarray


def hypothetical_posteriors(state: BeliefState, x: Alternative) -> tuple[BeliefState, BeliefState]:
    """Both one-step posteriors for measuring ``x``: (+1 outcome, -1 outcome).

    This is the single place the transition enters the KG computation; the
    precision gain is evaluated at the measured alternative.
    """
    up = map_update_single(state, Observation(x, +1))
    down = map_update_single(state, Observation(x, -1))
    return up, down


def _kg_scores(state: BeliefState, pool: Sequence[Alternative]) -> tuple[np.ndarray, np.ndarray]:
    """KG score and current predictive probability for every pool position."""
    feats = features_matrix(pool)
    if feats.shape[1] != state.dim:
        raise ValueError(f"feature dimension {feats.shape[1]} != belief dimension {state.dim}")
    pos = _predictive_arrays(state.mean, state.precision, feats)
    scores = np.empty(len(pool))
    for i, alt in enumerate(pool):
        m_up, q_up = _update_arrays(state.mean, state.precision, alt.features, +1)
        m_dn, q_dn = _update_arrays(state.mean, state.precision, alt.features, -1)
        best_up = float(np.max(_predictive_arrays(m_up, q_up, feats)))
        best_dn = float(np.max(_predictive_arrays(m_dn, q_dn, feats)))
        scores[i] = pos[i] * best_up + (1.0 - pos[i]) * best_dn
    return scores, pos


def kg_score_one(state: BeliefState, x: Alternative, pool: Sequence[Alternative]) -> float:
    """Knowledge-gradient score of measuring ``x`` against a pool."""
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    p_up = predictive_prob(state, x)
    post_up, post_dn = hypothetical_posteriors(state, x)
    best_up = float(np.max(predictive_prob_pool(post_up, pool)))
    best_dn = float(np.max(predictive_prob_pool(post_dn, pool)))
    return p_up * best_up + (1.0 - p_up) * best_dn


def tie_argmax(scores: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    """Indices whose score is within ``tol`` of the maximum."""
    scores = np.asarray(scores, dtype=float)
    return np.flatnonzero(scores >= scores.max() - tol)


def kg_select(
    state: BeliefState, pool: Sequence[Alternative], rng: np.random.Generator
) -> KgScoreReport:
    """Score the whole pool and pick an argmax, ties broken uniformly.

    Scores are all gathered before a single draw is taken from ``rng``, so
    the result does not depend on evaluation order.
    """
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    scores, pos = _kg_scores(state, pool)
    ties = tie_argmax(scores)
    pick = int(ties[0]) if ties.size == 1 else int(ties[rng.integers(ties.size)])
    return KgScoreReport(scores=scores, chosen=pool[pick].id, pos_prob=pos)


def random_select(pool: Sequence[Alternative], rng: np.random.Generator) -> int:
    """Uniform choice from the pool; returns the alternative id."""
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    return pool[int(rng.integers(len(pool)))].id


def most_uncertain_select(state: BeliefState, pool: Sequence[Alternative]) -> int:
    """Id of the alternative with predictive probability closest to 0.5.

    Exact ties go to the lowest id, keeping the baseline reproducible.
    """
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    probs = predictive_prob_pool(state, pool)
    dist = np.abs(probs - 0.5)
    best = min(range(len(pool)), key=lambda i: (dist[i], pool[i].id))
    return pool[best].id


def implementation_decision(state: BeliefState, pool: Sequence[Alternative]) -> int:
    """Id of the alternative with the highest predictive probability.

    Exact ties go to the lowest id.
    """
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    probs = predictive_prob_pool(state, pool)
    best = min(range(len(pool)), key=lambda i: (-probs[i], pool[i].id))
    return pool[best].id
