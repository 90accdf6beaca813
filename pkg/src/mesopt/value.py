"""Value-function estimation on a neighborhood.

The value of a state is the discounted accumulated penalty along a
Metropolis walk whose kernel is itself built from the current value
estimate, so the definition is self-consistent and solved by fixed-point
iteration: V_0 = Rhat, kernel from V_j at inverse temperature beta_j,
V_{j+1}(s) = sum_t gamma^t (P^t Rhat)(s).  The infinite sum is truncated at
a tolerance-derived horizon with the remainder closed by its geometric tail,
which keeps every iterate inside [min Rhat, max Rhat] / (1 - gamma) exactly.
A Monte-Carlo estimator of the same truncated sum (no tail) is provided for
cross-checking; matrix powers are exact and cheap at these neighborhood
sizes, so they are the primary evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import ActionSet, GridPoint, Neighborhood
from .metropolis import TransitionModel, transition_matrix

__all__ = [
    "CoolingSchedule",
    "ValueTable",
    "discounted_power_sum",
    "value_fixed_point",
    "fixed_point_iterates",
    "mc_value_estimate",
    "argmin_value",
]


@dataclass(frozen=True)
class CoolingSchedule:
    """Inverse-temperature sequence beta_j for the annealed kernel.

    "standard-log" is log(2 + j) / t0, which cools (grows) with j as in
    conventional annealing.  "inverse-log" is 1 / (t0 * log(2 + j)), which
    heats instead; it is kept selectable so the difference is testable.
    """

    kind: str = "standard-log"
    t0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("standard-log", "inverse-log"):
            raise ValueError(f"unknown cooling schedule kind {self.kind!r}")
        if self.t0 <= 0.0:
            raise ValueError("temperature scale t0 must be positive")

    def beta(self, j: int) -> float:
        if self.kind == "standard-log":
            return math.log(2.0 + j) / self.t0
        return 1.0 / (self.t0 * math.log(2.0 + j))


@dataclass
class ValueTable:
    """Converged (or truncated) value estimates over a neighborhood."""

    values: dict[GridPoint, float]
    gamma: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)

    def as_array(self, states) -> np.ndarray:
        return np.array([self.values[s] for s in states])


def horizon_for(gamma: float, tol: float, r_scale: float) -> int:
    """Truncation index T_h with geometric tail below tol."""
    if gamma == 0.0 or r_scale == 0.0:
        return 0
    t = math.log(tol * (1.0 - gamma) / r_scale) / math.log(gamma)
    return max(0, math.ceil(t))


def discounted_power_sum(
    model: TransitionModel,
    rhat: np.ndarray,
    gamma: float,
    horizon: int,
    tail: bool = True,
) -> np.ndarray:
    """sum_{t=0}^{horizon} gamma^t P^t rhat, optionally closed by the tail.

    The tail term gamma^{horizon+1}/(1-gamma) * P^{horizon+1} rhat completes
    the geometric series as if the walk's reward froze past the horizon; it
    makes constant tables exact and preserves the range bounds exactly.
    """
    acc = rhat.astype(float).copy()
    y = rhat.astype(float)
    g = 1.0
    for _ in range(horizon):
        y = model.matrix @ y
        g *= gamma
        acc += g * y
    if tail and gamma > 0.0:
        y = model.matrix @ y
        acc += g * gamma / (1.0 - gamma) * y
    return acc


def value_fixed_point(
    surrogate_values: dict[GridPoint, float],
    neighborhood: Neighborhood,
    actions: ActionSet,
    gamma: float,
    schedule: CoolingSchedule,
    tol_v: float = 1e-6,
    max_j: int = 60,
) -> ValueTable:
    """Self-consistent value estimate on a neighborhood.

    Starts from V_0 = Rhat, rebuilds the kernel from the current iterate at
    each step's inverse temperature, and stops when the sup-norm change
    drops below tol_v or max_j iterations have run (converged=False then).
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"discount gamma must be in [0, 1) (got {gamma})")
    if tol_v <= 0.0:
        raise ValueError("tol_v must be positive")
    states = neighborhood.members
    if not states:
        raise ValueError("empty neighborhood")
    rhat = np.array([surrogate_values[s] for s in states], dtype=float)

    if gamma == 0.0:
        values = {s: float(r) for s, r in zip(states, rhat)}
        return ValueTable(values=values, gamma=gamma, iterations=1, converged=True, history=[0.0])

    horizon = horizon_for(gamma, tol_v, float(np.max(np.abs(rhat))))
    v = rhat.copy()
    history: list[float] = []
    converged = False
    iterations = 0
    for j in range(max_j):
        model = transition_matrix(
            dict(zip(states, v)), neighborhood, actions, schedule.beta(j)
        )
        v_next = discounted_power_sum(model, rhat, gamma, horizon)
        delta = float(np.max(np.abs(v_next - v)))
        history.append(delta)
        v = v_next
        iterations = j + 1
        if delta < tol_v:
            converged = True
            break
    values = dict(zip(states, (float(x) for x in v)))
    return ValueTable(
        values=values, gamma=gamma, iterations=iterations, converged=converged, history=history
    )


def fixed_point_iterates(
    surrogate_values: dict[GridPoint, float],
    neighborhood: Neighborhood,
    actions: ActionSet,
    gamma: float,
    schedule: CoolingSchedule,
    n_iters: int,
    tol_v: float = 1e-6,
):
    """All iterates V_0 .. V_{n_iters} plus per-step sup deltas and betas.

    Same map as value_fixed_point but runs a fixed number of iterations and
    keeps every iterate, for the 1-d demonstration exports.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"discount gamma must be in [0, 1) (got {gamma})")
    states = neighborhood.members
    rhat = np.array([surrogate_values[s] for s in states], dtype=float)
    horizon = horizon_for(gamma, tol_v, float(np.max(np.abs(rhat))))
    iterates = [rhat.copy()]
    deltas: list[float] = []
    betas: list[float] = []
    v = rhat.copy()
    for j in range(n_iters):
        beta = schedule.beta(j)
        model = transition_matrix(dict(zip(states, v)), neighborhood, actions, beta)
        v_next = discounted_power_sum(model, rhat, gamma, horizon)
        deltas.append(float(np.max(np.abs(v_next - v))))
        betas.append(beta)
        v = v_next
        iterates.append(v.copy())
    return iterates, deltas, betas


def mc_value_estimate(
    surrogate_values: dict[GridPoint, float],
    neighborhood: Neighborhood,
    actions: ActionSet,
    gamma: float,
    beta: float,
    n_walks: int,
    horizon: int,
    seed: int,
    with_stderr: bool = False,
):
    """Monte-Carlo estimate of sum_{t=0}^{horizon} gamma^t Rhat(X_t) per state.

    Walks follow the fixed kernel built from the surrogate values at the
    given inverse temperature.  Deterministic for a fixed seed.  With
    ``with_stderr`` returns (values, standard errors) instead of values.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if n_walks < 1:
        raise ValueError("n_walks must be >= 1")
    states = neighborhood.members
    rhat = np.array([surrogate_values[s] for s in states], dtype=float)

    if gamma == 0.0:
        values = {s: float(r) for s, r in zip(states, rhat)}
        if with_stderr:
            return values, {s: 0.0 for s in states}
        return values

    model = transition_matrix(surrogate_values, neighborhood, actions, beta)
    m = len(states)
    # Rows have at most 2d+1 nonzeros: sample over compressed targets.
    width = max(int((row > 0).sum()) for row in model.matrix)
    targets = np.zeros((m, width), dtype=np.intp)
    cumw = np.ones((m, width))
    for k, row in enumerate(model.matrix):
        idx = np.flatnonzero(row)
        targets[k, : idx.size] = idx
        targets[k, idx.size :] = idx[-1]
        cumw[k, : idx.size] = np.cumsum(row[idx])
        cumw[k, idx.size - 1 :] = 1.0  # guard roundoff so u < 1 never overruns
    rng = np.random.default_rng(seed)

    # All walks for all start states advance in lockstep.
    pos = np.repeat(np.arange(m), n_walks)
    totals = rhat[pos].copy()
    g = 1.0
    for _ in range(horizon):
        u = rng.random(pos.shape[0])
        choice = (cumw[pos] < u[:, None]).sum(axis=1)
        pos = targets[pos, choice]
        g *= gamma
        totals += g * rhat[pos]

    per_state = totals.reshape(m, n_walks)
    means = per_state.mean(axis=1)
    values = dict(zip(states, (float(x) for x in means)))
    if with_stderr:
        se = per_state.std(axis=1, ddof=1) / math.sqrt(n_walks) if n_walks > 1 else np.zeros(m)
        return values, dict(zip(states, (float(x) for x in se)))
    return values


def argmin_value(table: ValueTable) -> GridPoint:
    """Member with the smallest value; ties go to the smallest multi-index."""
    if not table.values:
        raise ValueError("empty value table")
    best_point = None
    best_value = math.inf
    for point in sorted(table.values):
        v = table.values[point]
        if v < best_value:
            best_value = v
            best_point = point
    return best_point
