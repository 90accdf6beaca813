import numpy as np
import pytest

from mesopt.stokes import EvaluationProfile
from mesopt.objectives import (
    Fictitious1DObjective,
    StokesObjective,
    SyntheticValleyObjective,
    fictitious_1d,
    make_backend,
    reward_R1,
    reward_R2,
    synthetic_valley_2d,
)


def profile_of(u1, u2):
    u1 = np.asarray(u1, dtype=float)
    return EvaluationProfile(z_samples=np.arange(len(u1), dtype=float), u1=u1, u2=np.asarray(u2, dtype=float))


def test_r1_uniform_inclined():
    p = profile_of([1.0] * 4, [0.75] * 4)
    assert reward_R1(p) == pytest.approx(0.36, abs=1e-15)


def test_r1_horizontal_flow_is_zero():
    assert reward_R1(profile_of([1.0, 2.0], [0.0, 0.0])) == 0.0


def test_r1_two_sample_hand_sum():
    # {(1,1), (1,0)} -> (0.5 + 0)/2
    assert reward_R1(profile_of([1.0, 1.0], [1.0, 0.0])) == pytest.approx(0.25, abs=1e-15)


def test_r1_rejects_stagnant_sample():
    with pytest.raises(ValueError):
        reward_R1(profile_of([0.0, 1.0], [0.0, 0.0]))


def test_r1_bounded_for_random_profiles():
    rng = np.random.default_rng(2)
    for _ in range(200):
        p = profile_of(rng.normal(size=16) + 0.1, rng.normal(size=16))
        assert 0.0 <= reward_R1(p) <= 1.0
        assert reward_R2(p) >= 0.0


def test_r2_extremes():
    assert reward_R2(profile_of([1.0, 1.0], [0.0, 0.0])) == 0.0
    # {(1,0), (0,2)} -> 2 - 1 = 1
    assert reward_R2(profile_of([1.0, 0.0], [0.0, 2.0])) == pytest.approx(1.0, abs=1e-15)
    assert reward_R2(profile_of([3.0, 3.0], [4.0, 4.0])) == 0.0


def test_r2_rejects_empty_profile():
    with pytest.raises(ValueError):
        reward_R2(profile_of([], []))


def test_fictitious_polynomial_values():
    assert fictitious_1d(-2.0) == 0.0
    assert fictitious_1d(-1.0) == 0.0
    assert fictitious_1d(1.0) == 0.0
    assert fictitious_1d(0.0) == 4.0


def test_synthetic_valley_values_and_gradients():
    assert synthetic_valley_2d(2.0, 2.5) == 0.0
    assert synthetic_valley_2d(3.0, 2.5) == pytest.approx(5.0)
    # Analytic gradient ratio 25:1 between the steep and shallow axes.
    eps = 1e-7
    gf = (synthetic_valley_2d(2.5 + eps, 2.5) - synthetic_valley_2d(2.5 - eps, 2.5)) / (2 * eps)
    gb = (synthetic_valley_2d(2.0, 3.0 + eps) - synthetic_valley_2d(2.0, 3.0 - eps)) / (2 * eps)
    assert gf / gb == pytest.approx(25.0, rel=1e-5)


def test_backends_count_calls():
    valley = SyntheticValleyObjective()
    assert valley.calls == 0
    valley((2.0, 2.5))
    valley.components((2.1, 2.5))
    assert valley.calls == 2
    valley.reset_calls()
    assert valley.calls == 0

    poly = Fictitious1DObjective()
    assert poly((0.0,)) == 4.0
    assert poly.calls == 1


def test_stokes_objective_deterministic_and_counted():
    from mesopt.stokes import ChannelConfig

    obj = StokesObjective(ChannelConfig(nx=48, nz=24))
    a = obj((2.0, 2.0))
    b = obj((2.0, 2.0))
    assert a == b  # bit-for-bit
    assert obj.calls == 2
    r1, r2, r = obj.components((2.0, 2.0))
    assert r == a
    assert 0.0 <= r1 <= 1.0 and r2 >= 0.0


def test_backend_registry():
    assert isinstance(make_backend("synthetic-valley"), SyntheticValleyObjective)
    assert isinstance(make_backend("fictitious-1d"), Fictitious1DObjective)
    assert isinstance(make_backend("stokes"), StokesObjective)
    with pytest.raises(ValueError):
        make_backend("nope")
