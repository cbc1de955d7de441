"""Top-k slot selectors: incremental greedy plus the simple baselines.

All selectors break ties by smallest slot index so results are reproducible,
and all report influence re-derived through the residual engine (which
matches the naive formula to 1e-9; tests enforce this).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .corpus import ExposureModel, count_covered_records
from .errors import InternalInvariantError, ValidationError
from .influence import commit, init_state, marginal_gain, naive_influence

BRUTE_FORCE_GUARD = 10**6


@dataclass
class SelectionResult:
    chosen: list[int]
    influence: float
    per_step_gains: list[float]
    elapsed_ms: float
    short: bool = False  # fewer than k slots were available


def _prepare(ground_set, k: int) -> tuple[list[int], int, bool]:
    if k < 1:
        raise ValidationError(f"k must be at least 1, got {k}")
    ground = sorted(set(int(b) for b in ground_set))
    if not ground:
        raise ValidationError("empty ground set")
    take = min(k, len(ground))
    return ground, take, take < k


def _replay(model: ExposureModel, chosen) -> tuple[float, list[float]]:
    """Commit ``chosen`` in order, returning total influence and step gains."""
    state = init_state(model)
    gains = []
    for b in chosen:
        gains.append(marginal_gain(state, b))
        commit(state, b)
    return state.total_influence, gains


def greedy(model: ExposureModel, ground_set, k: int) -> SelectionResult:
    """Pick k slots, each maximizing marginal influence gain."""
    ground, take, short = _prepare(ground_set, k)
    t0 = time.perf_counter()
    state = init_state(model)
    remaining = list(ground)
    chosen: list[int] = []
    gains: list[float] = []
    for _ in range(take):
        best = None
        best_gain = -np.inf
        for b in remaining:  # ascending order: first strict max = smallest index
            g = marginal_gain(state, b)
            if g > best_gain:
                best_gain = g
                best = b
        if gains and best_gain > gains[-1] + 1e-9:
            raise InternalInvariantError(
                f"greedy gain increased from {gains[-1]!r} to {best_gain!r}"
            )
        commit(state, best)
        remaining.remove(best)
        chosen.append(best)
        gains.append(best_gain)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return SelectionResult(chosen, state.total_influence, gains, elapsed, short)


def random_k(model: ExposureModel, ground_set, k: int, seed: int) -> SelectionResult:
    """Uniform sample without replacement (PCG64 generator, 64-bit seed)."""
    ground, take, short = _prepare(ground_set, k)
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(ground), size=take, replace=False)
    chosen = [ground[i] for i in picks]
    influence, gains = _replay(model, chosen)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return SelectionResult(chosen, influence, gains, elapsed, short)


def top_k(model: ExposureModel, ground_set, k: int) -> SelectionResult:
    """Take the k slots with largest individual influence."""
    ground, take, short = _prepare(ground_set, k)
    t0 = time.perf_counter()
    ranked = sorted(ground, key=lambda b: (-model.singleton[b], b))
    chosen = ranked[:take]
    influence, gains = _replay(model, chosen)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return SelectionResult(chosen, influence, gains, elapsed, short)


def max_coverage(model: ExposureModel, trajectories, ground_set, k: int) -> SelectionResult:
    """Take the k slots covering the most trajectory records.

    Coverage uses the raw geo/time predicate and ignores probabilities;
    the reported influence is still the probabilistic one.
    """
    ground, take, short = _prepare(ground_set, k)
    t0 = time.perf_counter()
    counts = count_covered_records(model, trajectories, ground)
    ranked = sorted(ground, key=lambda b: (-counts[b], b))
    chosen = ranked[:take]
    influence, gains = _replay(model, chosen)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return SelectionResult(chosen, influence, gains, elapsed, short)


def brute_force_opt(model: ExposureModel, ground_set, k: int) -> SelectionResult:
    """Exact optimum by exhaustive enumeration (test oracle).

    Refuses instances with more than 10^6 candidate subsets; use sampled
    verification beyond that.
    """
    ground, take, short = _prepare(ground_set, k)
    n_subsets = comb(len(ground), take)
    if n_subsets > BRUTE_FORCE_GUARD:
        raise ValidationError(
            f"C({len(ground)}, {take}) = {n_subsets} exceeds {BRUTE_FORCE_GUARD}; "
            "use sampled verification instead"
        )
    t0 = time.perf_counter()
    base = 1.0 - model.matrix.toarray() if model.n_slots * model.n_users <= 4_000_000 else None
    best = None
    best_val = -np.inf
    for combo in combinations(ground, take):  # lexicographic: first max wins ties
        if base is not None:
            val = float(np.sum(1.0 - np.prod(base[list(combo)], axis=0)))
        else:
            val = naive_influence(model, combo)
        if val > best_val:
            best_val = val
            best = combo
    chosen = list(best)
    influence, gains = _replay(model, chosen)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return SelectionResult(chosen, influence, gains, elapsed, short)
