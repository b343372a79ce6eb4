from __future__ import annotations

import numpy as np
import pytest

from hjj import TimeSignal, constant, l1_distance, union_mesh
from hjj.errors import EmptyWindow, HorizonMismatch, OutOfHorizon


def _overlap_integral(breakpoints, values, a: float, b: float) -> float:
    """Plain-loop reference for the integral of a step function over [a, b]."""
    total = 0.0
    for k in range(len(values)):
        lo = max(a, breakpoints[k])
        hi = min(b, breakpoints[k + 1])
        if hi > lo:
            total += values[k] * (hi - lo)
    return total


def _random_signal(rng: np.random.Generator, horizon: float = 2.0) -> TimeSignal:
    m = int(rng.integers(1, 9))
    interior = np.sort(rng.uniform(0.05, horizon - 0.05, size=m - 1))
    bp = np.concatenate(([0.0], interior, [horizon]))
    return TimeSignal(bp, rng.uniform(-3.0, 3.0, size=m))


def _step() -> TimeSignal:
    return TimeSignal(np.array([0.0, 0.5, 1.0]), np.array([0.0, -1.0]))


def test_step_signal_pointwise_values():
    sig = TimeSignal(np.array([0.0, 1.0, 2.0]), np.array([2.0, 0.0]))
    assert sig(0.5) == 2.0
    assert sig(1.0) == 0.0  # right-continuous at the jump
    assert sig(2.0) == 0.0  # left-continuous at the horizon


def test_eval_outside_horizon_raises():
    sig = _step()
    with pytest.raises(OutOfHorizon):
        sig(1.5)
    with pytest.raises(OutOfHorizon):
        sig(-0.1)


def test_average_of_step_over_straddling_window():
    sig = TimeSignal(np.array([0.0, 1.0, 2.0]), np.array([2.0, 0.0]))
    assert sig.average(0.5, 1.5) == pytest.approx(1.0, abs=1e-15)
    assert sig.average(0.0, 1.0) == pytest.approx(2.0, abs=1e-15)
    assert sig.average(1.25, 2.0) == pytest.approx(0.0, abs=1e-15)


def test_average_of_constant_is_the_constant():
    sig = constant(3.7, 2.0)
    assert sig.average(0.3, 1.9) == pytest.approx(3.7, rel=1e-15)
    assert sig.integrate(0.3, 1.9) == pytest.approx(3.7 * 1.6, rel=1e-14)


def test_integrate_matches_plain_loop_reference():
    rng = np.random.default_rng(11)
    for _ in range(40):
        sig = _random_signal(rng)
        a, b = np.sort(rng.uniform(0.0, 2.0, size=2))
        if b - a < 1e-6:
            continue
        want = _overlap_integral(sig.breakpoints, sig.values, a, b)
        assert sig.integrate(a, b) == pytest.approx(want, abs=1e-12)


def test_empty_and_out_of_range_windows_raise():
    sig = _step()
    with pytest.raises(EmptyWindow):
        sig.integrate(0.5, 0.5)
    with pytest.raises(EmptyWindow):
        sig.average(0.7, 0.6)
    with pytest.raises(OutOfHorizon):
        sig.integrate(0.5, 1.5)
    with pytest.raises(OutOfHorizon):
        sig.integrate(-0.5, 0.5)


def test_mollify_constant_is_a_fixed_point():
    sig = constant(1.3, 1.0)
    assert l1_distance(sig, sig.mollify(0.2)) <= 1e-15


def test_mollify_contracts_the_essential_range():
    rng = np.random.default_rng(7)
    for _ in range(20):
        sig = _random_signal(rng)
        mol = sig.mollify(0.3)
        assert mol.min() >= sig.min() - 1e-12
        assert mol.max() <= sig.max() + 1e-12


def test_mollify_step_error_ladder():
    """For a unit jump the L1 mollification error is about eps/2 and shrinks with eps."""
    sig = _step()
    errors = [l1_distance(sig, sig.mollify(eps)) for eps in (0.4, 0.2, 0.1, 0.05)]
    for eps, err in zip((0.4, 0.2, 0.1, 0.05), errors):
        assert err <= eps * 1.0 + 1e-12
    assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))
    assert errors[2] == pytest.approx(0.05, abs=1e-12)


def test_mollify_preserves_integral_away_from_ends():
    # box averaging is mass preserving up to the horizon truncation
    rng = np.random.default_rng(23)
    for _ in range(10):
        sig = _random_signal(rng)
        mol = sig.mollify(0.2)
        assert mol.integrate(0.3, 1.7) == pytest.approx(sig.integrate(0.3, 1.7), abs=0.2 * sig.total_variation() + 1e-12)


def test_l1_distance_examples():
    assert l1_distance(constant(2.0, 3.0), constant(-1.0, 3.0)) == pytest.approx(9.0, rel=1e-15)
    rect = TimeSignal(np.array([0.0, 0.5, 1.5, 2.0]), np.array([0.0, 1.0, 0.0]))
    assert l1_distance(rect, constant(0.0, 2.0)) == pytest.approx(1.0, rel=1e-15)
    assert l1_distance(rect, rect) == 0.0


def test_l1_distance_is_a_metric_on_random_triples():
    rng = np.random.default_rng(5)
    for _ in range(25):
        s1, s2, s3 = (_random_signal(rng) for _ in range(3))
        d12 = l1_distance(s1, s2)
        d21 = l1_distance(s2, s1)
        assert d12 >= 0.0
        assert d12 == pytest.approx(d21, abs=1e-13)
        assert d12 <= l1_distance(s1, s3) + l1_distance(s3, s2) + 1e-12


def test_average_is_monotone_in_the_signal():
    rng = np.random.default_rng(3)
    for _ in range(20):
        low = _random_signal(rng)
        bump = rng.uniform(0.0, 2.0, size=len(low.values))
        high = TimeSignal(low.breakpoints, low.values + bump)
        a, b = np.sort(rng.uniform(0.0, 2.0, size=2))
        if b - a < 1e-6:
            continue
        assert low.average(a, b) <= high.average(a, b) + 1e-12


def test_union_mesh_contains_every_breakpoint():
    rng = np.random.default_rng(9)
    sigs = [_random_signal(rng) for _ in range(3)]
    mesh = union_mesh(sigs)
    assert mesh[0] == 0.0 and mesh[-1] == 2.0
    assert np.all(np.diff(mesh) > 0)
    for sig in sigs:
        for b in sig.breakpoints:
            assert np.min(np.abs(mesh - b)) < 1e-12


def test_dict_round_trip_is_exact():
    sig = _random_signal(np.random.default_rng(2))
    back = TimeSignal.from_dict(sig.to_dict())
    assert np.array_equal(back.breakpoints, sig.breakpoints)
    assert np.array_equal(back.values, sig.values)


def test_horizon_mismatch_raises():
    with pytest.raises(HorizonMismatch):
        l1_distance(constant(1.0, 1.0), constant(1.0, 2.0))


def test_constructor_rejects_malformed_input():
    with pytest.raises(ValueError):
        TimeSignal(np.array([0.0, 2.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        TimeSignal(np.array([0.5, 1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        TimeSignal(np.array([0.0, 1.0]), np.array([1.0, 2.0]))


def test_shift_values_applies_cellwise():
    sig = _step()
    shifted = sig.shift_values(lambda v: v + 2.0)
    assert np.array_equal(shifted.values, sig.values + 2.0)
    assert np.array_equal(shifted.breakpoints, sig.breakpoints)
