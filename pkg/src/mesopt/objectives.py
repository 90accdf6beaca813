"""Ground-truth objectives and the simulation-budget counter.

The channel objective is R = R1 + R2 from a fresh Stokes solve: R1 the mean
squared-vertical-component ratio on the evaluation line, R2 the spread of
the velocity magnitude there.  Two analytic stand-ins let the optimizer and
walk experiments run without a flow solve: a sixth-degree polynomial with
three flat wells for the 1-d fixed-point demonstration, and a strongly
anisotropic 2-d valley (steep in f, shallow in b) mimicking the channel
landscape.

Every backend counts its ground-truth evaluations; the count is the cost
metric the optimizer is meant to minimize.
"""

from __future__ import annotations

import threading

import numpy as np

from .geometry import AirfoilSpec, build_airfoil
from .stokes import ChannelConfig, EvaluationProfile, sample_line, solve_stokes

__all__ = [
    "reward_R1",
    "reward_R2",
    "fictitious_1d",
    "synthetic_valley_2d",
    "CountingObjective",
    "StokesObjective",
    "SyntheticValleyObjective",
    "Fictitious1DObjective",
    "make_backend",
]


def reward_R1(profile: EvaluationProfile, variant: str = "ratio") -> float:
    """Mean vertical-component ratio on the line; 0 for aligned flow.

    The canonical form averages u2^2 / (u1^2 + u2^2) and lies in [0, 1].
    variant="magnitude" divides by the magnitude instead of its square (a units-
    carrying alternative kept for landscape comparisons).
    """
    q2 = profile.u1**2 + profile.u2**2
    if np.any(q2 == 0.0):
        raise ValueError("stagnant sample on the evaluation line (u1 = u2 = 0)")
    if variant == "ratio":
        return float(np.mean(profile.u2**2 / q2))
    if variant == "magnitude":
        return float(np.mean(profile.u2**2 / np.sqrt(q2)))
    raise ValueError(f"unknown R1 variant {variant!r}")


def reward_R2(profile: EvaluationProfile) -> float:
    """Spread of the velocity magnitude on the line: max|u| - min|u|."""
    if profile.u1.size == 0:
        raise ValueError("empty evaluation profile")
    speed = profile.speed()
    return float(speed.max() - speed.min())


def fictitious_1d(x: float) -> float:
    """(x + 2)^2 (x + 1)^2 (x - 1)^2: three flat wells at -2, -1, 1."""
    return float((x + 2.0) ** 2 * (x + 1.0) ** 2 * (x - 1.0) ** 2)


def synthetic_valley_2d(f: float, b: float) -> float:
    """Anisotropic valley with its minimum at (2, 2.5); steep in f, shallow in b."""
    df, db = f - 2.0, b - 2.5
    return float(5.0 * df**2 + 0.2 * db**2 + 0.05 * df * db)


class CountingObjective:
    """Ground-truth objective with a schedule-independent evaluation tally."""

    #: number of parameters the backend expects
    d: int = 2

    def __init__(self):
        self._lock = threading.Lock()
        self._calls = 0

    @property
    def calls(self) -> int:
        return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0

    def _tick(self) -> None:
        with self._lock:
            self._calls += 1

    def components(self, theta) -> tuple[float, float, float]:
        """(R1, R2, R) from one counted ground-truth evaluation."""
        self._tick()
        return self._components(tuple(float(v) for v in theta))

    def __call__(self, theta) -> float:
        return self.components(theta)[2]

    def _components(self, theta) -> tuple[float, float, float]:
        raise NotImplementedError


class StokesObjective(CountingObjective):
    """R1 + R2 behind a fresh channel solve at theta = (f, b)."""

    d = 2

    def __init__(self, channel: ChannelConfig, e: float = 0.3, n_shape_samples: int = 257):
        super().__init__()
        self.channel = channel
        self.e = e
        self.n_shape_samples = n_shape_samples

    def _components(self, theta):
        f, b = theta
        shape = build_airfoil(AirfoilSpec(f=f, b=b, e=self.e), self.n_shape_samples)
        field = solve_stokes(shape, self.channel)
        profile = sample_line(field, self.channel)
        r1 = reward_R1(profile, variant=self.channel.reward_variant)
        r2 = reward_R2(profile)
        return r1, r2, r1 + r2


class SyntheticValleyObjective(CountingObjective):
    d = 2

    def _components(self, theta):
        r = synthetic_valley_2d(*theta)
        return r, 0.0, r


class Fictitious1DObjective(CountingObjective):
    d = 1

    def _components(self, theta):
        r = fictitious_1d(theta[0])
        return r, 0.0, r


def make_backend(name: str, channel: ChannelConfig | None = None) -> CountingObjective:
    """Backend registry used by the CLI: stokes, synthetic-valley, fictitious-1d."""
    if name == "stokes":
        return StokesObjective(channel or ChannelConfig())
    if name == "synthetic-valley":
        return SyntheticValleyObjective()
    if name == "fictitious-1d":
        return Fictitious1DObjective()
    raise ValueError(f"unknown backend {name!r}")
