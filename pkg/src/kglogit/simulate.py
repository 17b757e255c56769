"""Benchmark harness: shared-label replications scored by opportunity cost.

Each replication draws a hidden weight vector, a pool, a pre-generated label
table, and one initial example per class, then runs every policy from the
same updated prior.  Because a step's label depends only on (step, chosen
alternative), all policies face identical information, and the opportunity
cost of a policy's implementation decision is directly comparable.

Randomness is organized as named substreams derived from (seed, replication,
stream), so replications are independent, reproducible, and safe to run
concurrently.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .belief import Alternative, BeliefState, Observation, map_update_single, sigmoid
from .policies import (
    PolicyKind,
    implementation_decision,
    kg_select,
    most_uncertain_select,
    random_select,
)

__all__ = [
    "ExperimentConfig",
    "GroundTruth",
    "LabelTable",
    "PolicyTrace",
    "ExperimentResult",
    "substream",
    "sample_truth",
    "gen_synthetic_pool",
    "pregenerate_labels",
    "init_examples",
    "opportunity_cost",
    "run_replication",
    "run_experiment",
]

_SEED_MASK = (1 << 64) - 1

# Named substreams; the tie stream is further keyed by policy ordinal.
STREAM_TRUTH = 0
STREAM_POOL = 1
STREAM_LABELS = 2
STREAM_INIT = 3
STREAM_TIE = 4

_POLICY_ORDINAL = {PolicyKind.KG: 0, PolicyKind.RANDOM: 1, PolicyKind.MOST_UNCERTAIN: 2}


def substream(seed: int, rep: int, stream: int, extra: tuple[int, ...] = ()) -> np.random.Generator:
    """Independent generator for one named stream of one replication."""
    key = (int(rep), int(stream)) + tuple(int(v) for v in extra)
    return np.random.default_rng(np.random.SeedSequence(seed & _SEED_MASK, spawn_key=key))


@dataclass(frozen=True)
class GroundTruth:
    """Hidden weight vector that generates labels in simulation."""

    w_star: np.ndarray

    def __post_init__(self):
        arr = np.array(self.w_star, dtype=float)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ValueError("w_star must be a finite 1-d vector")
        arr.setflags(write=False)
        object.__setattr__(self, "w_star", arr)


@dataclass(frozen=True)
class LabelTable:
    """Pre-generated outcomes: ``labels[n, i]`` is what measuring alternative
    ``i`` at step ``n`` returns, shared by every policy in the replication.

    ``init_labels`` holds one spare label per alternative for seeding
    procedures that want table-style sharing; the default initial-example
    routine draws from its own dedicated stream instead.
    """

    labels: np.ndarray
    init_labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        init = np.asarray(self.init_labels)
        if labels.ndim != 2 or init.ndim != 1 or init.size != labels.shape[1]:
            raise ValueError("labels must be (N, M) with init_labels of length M")
        if labels.size and not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")


@dataclass(frozen=True)
class PolicyTrace:
    """Per-step record of one policy in one replication."""

    selected: np.ndarray
    observed: np.ndarray
    implemented: np.ndarray
    oc: np.ndarray

    def __len__(self) -> int:
        return self.selected.size


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a benchmark run depends on, randomness included.

    ``source`` is either ``"synthetic"`` or a path to a labeled CSV data
    set; for a data set, M and d are taken from the file and the hidden
    weights come from a perturbed regularized fit (``fit_lambda``,
    ``perturb_sigma``) instead of a prior draw.
    """

    M: int
    d: int
    N: int
    reps: int
    lam: float
    policies: tuple[PolicyKind, ...]
    seed: int = 0
    source: str = "synthetic"
    intercept: bool = True
    fit_lambda: float = 1.0
    perturb_sigma: float = 0.1
    label_column: Optional[str] = "label"
    scale: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.policies:
            raise ValueError("at least one policy is required")
        if len(set(self.policies)) != len(self.policies):
            raise ValueError("policies must be distinct")
        if self.source == "synthetic":
            if self.M < 2:
                raise ValueError("M must be >= 2")
            if self.d < 1:
                raise ValueError("d must be >= 1")

    @property
    def weight_dim(self) -> int:
        return self.d + 1 if self.intercept else self.d


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated benchmark output: per policy, the per-replication traces
    and the per-step mean opportunity cost (mean over replications)."""

    config: ExperimentConfig
    traces: dict[PolicyKind, list[PolicyTrace]]
    mean_oc: dict[PolicyKind, np.ndarray] = field(default_factory=dict)


def sample_truth(dim: int, lam: float, rng: np.random.Generator) -> GroundTruth:
    """Draw hidden weights coordinate-wise from N(0, 1/lam).

    The variance matches the belief prior (precision lam per weight); pass
    ``1/lam`` to get the opposite reading.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    return GroundTruth(rng.normal(0.0, 1.0 / np.sqrt(lam), size=dim))


def gen_synthetic_pool(
    M: int, d: int, rng: np.random.Generator, intercept: bool = True
) -> list[Alternative]:
    """M alternatives with coordinates i.i.d. uniform on [-3, 3].

    With ``intercept`` a constant 1.0 is prepended, so features have length
    d + 1.  Ids are the pool positions 0..M-1.
    """
    if M < 1 or d < 1:
        raise ValueError("M and d must be >= 1")
    feats = rng.uniform(-3.0, 3.0, size=(M, d))
    if intercept:
        feats = np.hstack([np.ones((M, 1)), feats])
    return [Alternative(i, feats[i]) for i in range(M)]


def _true_probs(truth: GroundTruth, pool: Sequence[Alternative]) -> np.ndarray:
    feats = np.stack([alt.features for alt in pool])
    if feats.shape[1] != truth.w_star.size:
        raise ValueError("pool dimension does not match ground truth")
    return sigmoid(feats @ truth.w_star)


def pregenerate_labels(
    truth: GroundTruth, pool: Sequence[Alternative], N: int, rng: np.random.Generator
) -> LabelTable:
    """Draw the full (N, M) outcome table once, independently per entry.

    Entry (n, i) is +1 with the true success probability of alternative i.
    Repeat measurements of one alternative at different steps can disagree.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    probs = _true_probs(truth, pool)
    draws = rng.random(size=(N, len(pool)))
    labels = np.where(draws < probs, 1, -1).astype(np.int64)
    init = np.where(rng.random(size=len(pool)) < probs, 1, -1).astype(np.int64)
    return LabelTable(labels=labels, init_labels=init)


def init_examples(
    truth: GroundTruth,
    pool: Sequence[Alternative],
    rng: np.random.Generator,
    max_draws: int = 10_000,
) -> list[Observation]:
    """One starting example per class.

    Draws alternatives uniformly with replacement, labeling each draw from
    the true success probability, until both a +1 and a -1 have been seen;
    returns the first of each.  If one class never shows up within
    ``max_draws`` (near-degenerate truth), warns and returns no examples.
    """
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    probs = _true_probs(truth, pool)
    first_pos: Optional[Observation] = None
    first_neg: Optional[Observation] = None
    for _ in range(max_draws):
        idx = int(rng.integers(len(pool)))
        label = 1 if rng.random() < probs[idx] else -1
        if label == 1 and first_pos is None:
            first_pos = Observation(pool[idx], 1)
        elif label == -1 and first_neg is None:
            first_neg = Observation(pool[idx], -1)
        if first_pos is not None and first_neg is not None:
            return [first_pos, first_neg]
    warnings.warn(
        f"could not collect one example per class within {max_draws} draws; "
        "starting from the bare prior",
        RuntimeWarning,
        stacklevel=2,
    )
    return []


def opportunity_cost(truth: GroundTruth, pool: Sequence[Alternative], impl_id: int) -> float:
    """True best success probability minus that of the implemented choice.

    Uses the exact sigmoid under the hidden weights; non-negative, zero iff
    the implementation is a true argmax.
    """
    probs = _true_probs(truth, pool)
    for i, alt in enumerate(pool):
        if alt.id == impl_id:
            return float(np.max(probs) - probs[i])
    raise ValueError(f"unknown alternative id {impl_id}")


def _dataset_for(config: ExperimentConfig):
    from . import dataio

    return dataio.load_csv(
        config.source,
        label_column=config.label_column,
        intercept=config.intercept,
        scale=config.scale,
    )


def _rep_inputs(config: ExperimentConfig, rep: int, dataset=None):
    """Truth, pool, label table, and initial examples for one replication."""
    truth_rng = substream(config.seed, rep, STREAM_TRUTH)
    if config.source == "synthetic":
        pool = gen_synthetic_pool(
            config.M, config.d, substream(config.seed, rep, STREAM_POOL), config.intercept
        )
        truth = sample_truth(config.weight_dim, config.lam, truth_rng)
    else:
        from . import dataio

        if dataset is None:
            dataset = _dataset_for(config)
        pool = dataset.alternatives
        truth = dataio.simulate_truth_from_dataset(
            dataset, config.fit_lambda, config.perturb_sigma, truth_rng
        )
    table = pregenerate_labels(truth, pool, config.N, substream(config.seed, rep, STREAM_LABELS))
    init = init_examples(truth, pool, substream(config.seed, rep, STREAM_INIT))
    return truth, pool, table, init


def run_replication(
    config: ExperimentConfig, rep_index: int, dataset=None
) -> dict[PolicyKind, PolicyTrace]:
    """Run every configured policy once over a shared draw of the world.

    Truth, pool, label table, and initial examples are sampled exactly once
    from replication-specific substreams; each policy then starts from the
    same prior-plus-initial-examples belief and, at step n, receives the
    pre-generated label of whichever alternative it chose.
    """
    truth, pool, table, init = _rep_inputs(config, rep_index, dataset)
    dim = pool[0].dim
    base = BeliefState(np.zeros(dim), np.full(dim, float(config.lam)))
    for obs in init:
        base = map_update_single(base, obs)
    index_of = {alt.id: i for i, alt in enumerate(pool)}

    out: dict[PolicyKind, PolicyTrace] = {}
    for policy in config.policies:
        tie_rng = substream(config.seed, rep_index, STREAM_TIE, (_POLICY_ORDINAL[policy],))
        state = base
        selected = np.empty(config.N, dtype=np.int64)
        observed = np.empty(config.N, dtype=np.int64)
        implemented = np.empty(config.N, dtype=np.int64)
        oc = np.empty(config.N, dtype=float)
        for n in range(config.N):
            if policy is PolicyKind.KG:
                chosen = kg_select(state, pool, tie_rng).chosen
            elif policy is PolicyKind.RANDOM:
                chosen = random_select(pool, tie_rng)
            else:
                chosen = most_uncertain_select(state, pool)
            i = index_of[chosen]
            label = int(table.labels[n, i])
            state = map_update_single(state, Observation(pool[i], label))
            impl = implementation_decision(state, pool)
            selected[n] = chosen
            observed[n] = label
            implemented[n] = impl
            oc[n] = opportunity_cost(truth, pool, impl)
        out[policy] = PolicyTrace(selected, observed, implemented, oc)
    return out


def _replication_task(args) -> dict[PolicyKind, PolicyTrace]:
    config, rep, dataset = args
    return run_replication(config, rep, dataset)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run all replications and average opportunity cost per step.

    Replications are independent; with ``workers`` > 1 they run in a
    process pool.  Aggregation always sums in replication order, so the
    result is bit-identical for any worker count.
    """
    dataset = None if config.source == "synthetic" else _dataset_for(config)
    jobs = [(config, rep, dataset) for rep in range(config.reps)]
    if workers > 1 and config.reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(_replication_task, jobs))
    else:
        per_rep = [_replication_task(job) for job in jobs]

    traces = {policy: [per_rep[r][policy] for r in range(config.reps)] for policy in config.policies}
    mean_oc = {
        policy: (
            np.mean(np.stack([trace.oc for trace in traces[policy]]), axis=0)
            if config.N > 0
            else np.zeros(0)
        )
        for policy in config.policies
    }
    return ExperimentResult(config=config, traces=traces, mean_oc=mean_oc)
