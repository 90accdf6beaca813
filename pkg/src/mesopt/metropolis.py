"""Metropolis transition kernels on grid neighborhoods and random walks.

A row of the kernel assigns weight ``exp(-beta * max(v(target) - v(here), 0))``
to every reachable target (one grid step along a changeable dimension, or
stay, which always carries weight 1) and normalizes over the targets that lie
inside the neighborhood.  Moves that would exit the neighborhood are simply
excluded from the normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import median

import numpy as np

from .grid import ActionSet, GridError, GridPoint, Neighborhood, ParameterGrid

__all__ = [
    "TransitionModel",
    "transition_matrix",
    "sample_walk",
    "WalkStatistics",
    "hitting_time_experiment",
]


@dataclass(frozen=True)
class TransitionModel:
    """Row-stochastic kernel over a neighborhood's members."""

    states: tuple[GridPoint, ...]
    matrix: np.ndarray
    index: dict[GridPoint, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "index", {s: k for k, s in enumerate(self.states)}
        )

    def row(self, state: GridPoint) -> np.ndarray:
        return self.matrix[self.index[state]]


def _row_weights(values, state, actions: ActionSet, beta: float, contains):
    """(targets, weights) for one kernel row; stay is always a target."""
    v_here = values[state]
    targets, weights = [], []
    for move in actions.moves:
        target = tuple(s + m for s, m in zip(state, move))
        if not contains(target):
            continue
        dv = values[target] - v_here
        weights.append(math.exp(-beta * max(dv, 0.0)))
        targets.append(target)
    return targets, weights


def transition_matrix(
    values: dict[GridPoint, float],
    neighborhood: Neighborhood,
    actions: ActionSet,
    beta: float,
) -> TransitionModel:
    """Build the full kernel for a neighborhood from a value table.

    ``values`` must cover every member.  ``beta`` is the inverse temperature;
    beta = 0 gives the uniform kernel on the allowed targets.
    """
    if beta < 0.0:
        raise ValueError(f"inverse temperature must be >= 0 (got {beta})")
    states = neighborhood.members
    missing = [s for s in states if s not in values]
    if missing:
        raise KeyError(f"value table missing {len(missing)} members, e.g. {missing[0]}")
    m = len(states)
    matrix = np.zeros((m, m))
    index = {s: k for k, s in enumerate(states)}
    for k, state in enumerate(states):
        targets, weights = _row_weights(
            values, state, actions, beta, neighborhood.contains
        )
        total = sum(weights)
        for target, w in zip(targets, weights):
            matrix[k, index[target]] = w / total
    return TransitionModel(states=states, matrix=matrix)


def sample_walk(models, start: GridPoint, n_steps: int, seed: int) -> list[GridPoint]:
    """Sample a walk of n_steps transitions from a kernel schedule.

    ``models`` is a single TransitionModel or a sequence of them, one per
    step; a short schedule is extended by repeating its last kernel.  Returns
    the n_steps + 1 visited points.  Deterministic for a fixed seed.
    """
    if isinstance(models, TransitionModel):
        models = [models]
    models = list(models)
    if not models:
        raise ValueError("empty kernel schedule")
    if start not in models[0].index:
        raise GridError(f"walk start {start} outside the kernel's state set")
    rng = np.random.default_rng(seed)
    path = [start]
    state = start
    for t in range(n_steps):
        model = models[min(t, len(models) - 1)]
        probs = model.row(state)
        state = model.states[_pick(probs, rng)]
        path.append(state)
    return path


def _pick(probs: np.ndarray, rng) -> int:
    # Inverse-CDF draw; cheaper and more explicit than rng.choice.
    u = rng.random()
    return int(np.searchsorted(np.cumsum(probs), u, side="right").clip(0, len(probs) - 1))


def _lazy_step(values, grid, state, actions, beta, rng):
    """One Metropolis step without materializing the full kernel."""
    targets, weights = _row_weights(values, state, actions, beta, grid.contains)
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    for target, w in zip(targets, weights):
        acc += w
        if u < acc:
            return target
    return targets[-1]


@dataclass
class WalkStatistics:
    """First-passage times of seeded walks toward the grid argmin."""

    mode: str
    steps: list[int]
    hits: list[bool]
    target: GridPoint
    paths: list[list[GridPoint]] = field(default_factory=list)

    @property
    def mean_steps(self) -> float:
        return float(np.mean(self.steps))

    @property
    def median_steps(self) -> float:
        return float(median(self.steps))

    @property
    def hit_rate(self) -> float:
        return float(np.mean(self.hits))


def hitting_time_experiment(
    values: dict[GridPoint, float],
    grid: ParameterGrid,
    start: GridPoint,
    mode: str,
    n_walks: int,
    seed: int,
    max_steps: int = 5000,
    t0: float = 1.0,
    phase_steps: int | None = None,
    first_frozen_dim: int = 0,
    record_path: bool = False,
) -> WalkStatistics:
    """First-passage times to the unique grid argmin under log cooling.

    mode "free" walks with every dimension changeable; mode "fixed" freezes
    one dimension at a time (the most significant one first), switching the
    frozen dimension every ``phase_steps`` steps.  For 1-d grids both modes
    coincide.  Walks that never hit within max_steps are censored at
    max_steps with hit=False.  ``record_path`` keeps the visited points of
    every walk (for path exports).
    """
    if mode not in ("free", "fixed"):
        raise ValueError(f"unknown walk mode {mode!r}")
    start = grid.require(start)
    ordered = sorted(values.items(), key=lambda kv: (kv[1], kv[0]))
    target, best = ordered[0]
    if len(ordered) > 1 and ordered[1][1] == best:
        raise ValueError("objective has no unique global argmin on the grid")

    d = grid.d
    if phase_steps is None:
        phase_steps = max(grid.shape)
    free_actions = ActionSet(d)
    if mode == "fixed" and d >= 2:
        phases = [
            ActionSet(d, frozenset(range(d)) - {(first_frozen_dim + k) % d})
            for k in range(d)
        ]
    else:
        phases = [free_actions]

    steps_out, hits, paths = [], [], []
    for walk_id in range(n_walks):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(walk_id,)))
        state = start
        path = [state]
        hit = state == target
        t = 0
        while not hit and t < max_steps:
            actions = phases[(t // phase_steps) % len(phases)]
            beta = math.log(2.0 + t) / t0
            state = _lazy_step(values, grid, state, actions, beta, rng)
            t += 1
            hit = state == target
            if record_path:
                path.append(state)
        steps_out.append(t)
        hits.append(hit)
        if record_path:
            paths.append(path)
    return WalkStatistics(mode=mode, steps=steps_out, hits=hits, target=target, paths=paths)
