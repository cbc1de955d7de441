"""Influence evaluation: the naive oracle and the incremental residual engine.

Influence of a slot set C is sum over users of 1 - prod_{b in C} (1 - p(b, u)).
``naive_influence`` evaluates that formula directly and serves as the test
oracle. ``ResidualState`` keeps per-user running products so a marginal gain
costs only the exposure list of the candidate slot.

Reads (naive_influence, marginal_gain, pair_conditional, deletion_marginal)
are safe to run concurrently against a frozen state; ``commit`` requires
exclusive access.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import ExposureModel
from .errors import ValidationError


def naive_influence(model: ExposureModel, slots) -> float:
    """Direct evaluation of the influence formula, no incremental state."""
    r = np.ones(model.n_users)
    for b in set(slots):
        model.check_slot(int(b))
        r[model.users(b)] *= 1.0 - model.probs(b)
    return float(np.sum(1.0 - r))


@dataclass
class ResidualState:
    """Selected slots plus per-user residual products r_u = prod (1 - p)."""

    model: ExposureModel
    selected: list[int] = field(default_factory=list)
    residual: np.ndarray = None
    total_influence: float = 0.0
    _selected_set: set[int] = field(default_factory=set)

    def __contains__(self, b: int) -> bool:
        return b in self._selected_set


def init_state(model: ExposureModel) -> ResidualState:
    """Empty selection: every residual 1, total influence 0."""
    return ResidualState(model=model, residual=np.ones(model.n_users))


def marginal_gain(state: ResidualState, b: int) -> float:
    """Influence gained by adding slot b to the current selection.

    Equals sum over users exposed to b of p(b, u) * r_u, which is exactly
    I(C union {b}) - I(C). Leaves the state unchanged.
    """
    state.model.check_slot(int(b))
    if b in state:
        raise ValidationError(f"slot {b} already selected")
    return float(np.dot(state.model.probs(b), state.residual[state.model.users(b)]))


def commit(state: ResidualState, b: int) -> ResidualState:
    """Add slot b to the selection, updating residuals and the total."""
    gain = marginal_gain(state, b)  # also validates b
    users = state.model.users(b)
    state.residual[users] *= 1.0 - state.model.probs(b)
    state.total_influence += gain
    state.selected.append(int(b))
    state._selected_set.add(int(b))
    return state


def pair_conditional(model: ExposureModel, d: int, u: int) -> float:
    """I({d, u}) - I({u}): influence d adds once u is already selected."""
    if d == u:
        raise ValidationError("pair_conditional needs two distinct slots")
    model.check_slot(int(d))
    model.check_slot(int(u))
    d_users, d_probs = model.users(d), model.probs(d)
    u_users, u_probs = model.users(u), model.probs(u)
    total = float(np.sum(d_probs))
    shared, d_pos, u_pos = np.intersect1d(d_users, u_users, assume_unique=True,
                                          return_indices=True)
    if shared.size:
        total -= float(np.dot(d_probs[d_pos], u_probs[u_pos]))
    return total


def deletion_marginal(state: ResidualState, u: int) -> float:
    """I(G) - I(G without u) for the ground set G committed into ``state``.

    Uses r_u / (1 - p), which is safe because stored probabilities are
    capped strictly below 1. The division-free oracle is two naive
    evaluations; tests compare against it.
    """
    state.model.check_slot(int(u))
    if u not in state:
        raise ValidationError(f"slot {u} is not part of the committed ground set")
    users = state.model.users(u)
    probs = state.model.probs(u)
    return float(np.sum(probs * state.residual[users] / (1.0 - probs)))
