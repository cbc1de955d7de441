"""Ground-set reduction by probe-sampled divergence scores.

Each round samples a batch of probe slots, moves them to the kept pool,
scores every remaining slot by its divergence against the probes, and
drops the lowest-scoring fraction. Divergence of slot d against probe u is

    (influence d adds given u) - (influence u loses when deleted from the
    current remaining set)

and a slot's score is the minimum over this round's probes. Low divergence
marks a slot as redundant: some probe nearly covers it.

The conceptual all-pairs weight graph is never materialized; only
probe-incident weights are computed, batched over a frozen round state.
``build_dense_graph`` exists for small-instance debugging only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import ExposureModel
from .errors import ValidationError
from .influence import ResidualState, deletion_marginal, pair_conditional
from .selection import SelectionResult, greedy, random_k

DENSE_GRAPH_LIMIT = 200


@dataclass
class PsgParams:
    """Knobs for the pruning loop; h scales the probe count, ell the shrink rate."""

    h: float = 8.0
    ell: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.h <= 0:
            raise ValidationError(f"h must be positive, got {self.h}")
        if self.ell <= 1:
            raise ValidationError(f"ell must exceed 1, got {self.ell}")

    @property
    def removal_fraction(self) -> float:
        return 1.0 - 1.0 / math.sqrt(self.ell)


@dataclass
class PsgReduction:
    reduced: set[int]
    rounds: int
    removed_per_round: list[int]
    probe_sets: list[set[int]] = field(default_factory=list)


def divergence(model: ExposureModel, ground_state: ResidualState, d: int, probes) -> float:
    """Min over probes u of I(d | u) - I(u | ground set minus u).

    ``ground_state`` must hold the committed residuals of the full current
    ground set, which includes every probe.
    """
    probes = list(probes)
    if not probes:
        raise ValidationError("probe set is empty")
    if d in probes:
        raise ValidationError(f"slot {d} cannot be scored against itself")
    return min(
        pair_conditional(model, d, u) - deletion_marginal(ground_state, u)
        for u in probes
    )


def build_dense_graph(model: ExposureModel, ground_set) -> tuple[list[int], np.ndarray]:
    """All-pairs weight matrix W[x, y] = I(y | x) - I(x | G minus x).

    Debug/verification helper; quadratic, refuses more than 200 slots.
    Returns (sorted ground list, matrix indexed by position in that list).
    """
    ground = sorted(set(int(b) for b in ground_set))
    n = len(ground)
    if n > DENSE_GRAPH_LIMIT:
        raise ValidationError(f"dense graph limited to {DENSE_GRAPH_LIMIT} slots, got {n}")
    from .influence import commit, init_state

    state = init_state(model)
    for b in ground:
        commit(state, b)
    deletions = np.array([deletion_marginal(state, b) for b in ground])
    w = np.zeros((n, n))
    for i, x in enumerate(ground):
        for j, y in enumerate(ground):
            if i == j:
                continue
            w[i, j] = pair_conditional(model, y, x) - deletions[i]
    return ground, w


def _round_residual(model: ExposureModel, members: np.ndarray) -> np.ndarray:
    r = np.ones(model.n_users)
    for b in members:
        r[model.users(b)] *= 1.0 - model.probs(b)
    return r


def _divergence_batch(model: ExposureModel, remaining: np.ndarray, probes: np.ndarray,
                      residual: np.ndarray) -> np.ndarray:
    """Divergence of every remaining slot against this round's probes.

    Equivalent to calling ``divergence`` per slot; batched so a round costs
    one sparse matvec per probe. ``residual`` holds the round ground set's
    committed products (remaining plus probes).
    """
    sub = model.matrix[remaining]
    best = np.full(remaining.shape, np.inf)
    for u in probes:
        users = model.users(u)
        probs = model.probs(u)
        deletion = float(np.sum(probs * residual[users] / (1.0 - probs)))
        dense_u = np.zeros(model.n_users)
        dense_u[users] = probs
        pair = model.singleton[remaining] - sub @ dense_u
        np.minimum(best, pair - deletion, out=best)
    return best


def prune(model: ExposureModel, ground_set, params: PsgParams) -> PsgReduction:
    """Iteratively shrink the ground set, keeping sampled probes and survivors.

    Zero-influence slots are dropped up front. The loop threshold
    h * log2(n) uses the post-filter size n, fixed across rounds.
    """
    ground = sorted(set(int(b) for b in ground_set))
    if not ground:
        raise ValidationError("empty ground set")
    for b in ground:
        model.check_slot(b)

    remaining = np.array([b for b in ground if model.singleton[b] > 0.0], dtype=np.int64)
    n = remaining.size
    if n == 0:
        return PsgReduction(set(), 0, [])

    threshold = params.h * math.log2(n) if n > 1 else 0.0
    sample_size = max(1, math.ceil(threshold))
    rng = np.random.default_rng(params.seed)

    kept: list[int] = []
    probe_sets: list[set[int]] = []
    removed_per_round: list[int] = []
    rounds = 0
    while remaining.size > threshold:
        rounds += 1
        take = min(sample_size, remaining.size)
        probe_pos = rng.choice(remaining.size, size=take, replace=False)
        probes = remaining[np.sort(probe_pos)]
        residual = _round_residual(model, remaining)  # round state incl. probes
        mask = np.ones(remaining.size, dtype=bool)
        mask[probe_pos] = False
        remaining = remaining[mask]
        kept.extend(int(b) for b in probes)
        probe_sets.append({int(b) for b in probes})
        if remaining.size == 0:
            removed_per_round.append(0)
            break
        div = _divergence_batch(model, remaining, probes, residual)
        cnt = math.floor(params.removal_fraction * remaining.size)
        if cnt == 0:
            cnt = 1  # guarantee progress on tiny remainders
        order = np.lexsort((remaining, div))  # smallest divergence, ties by index
        drop = np.zeros(remaining.size, dtype=bool)
        drop[order[:cnt]] = True
        remaining = remaining[~drop]
        removed_per_round.append(cnt)

    reduced = set(kept) | {int(b) for b in remaining}
    return PsgReduction(reduced, rounds, removed_per_round, probe_sets)


def psg_random_k(model: ExposureModel, ground_set, params: PsgParams, k: int,
                 seed: int) -> SelectionResult:
    """Prune the ground set, then sample k slots from what survives."""
    reduction = prune(model, ground_set, params)
    return random_k(model, reduction.reduced, k, seed)


def psg_greedy(model: ExposureModel, ground_set, params: PsgParams, k: int) -> SelectionResult:
    """Prune the ground set, then run incremental greedy on the survivors."""
    reduction = prune(model, ground_set, params)
    return greedy(model, reduction.reduced, k)
