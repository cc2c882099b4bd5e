import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qrng_cert import protocol, simulate, tomo
from qrng_cert.errors import DimensionError, DomainError
from qrng_cert.quantum import density_to_bloch, purity


def test_bounds_at_extremes():
    assert tomo.fiorentino_bound(0.0, 0.0) == pytest.approx(0.0)
    assert tomo.fiorentino_bound(1.0, 0.0) == pytest.approx(1.0)
    assert tomo.fiorentino_bound(0.6, 0.8) == pytest.approx(1.0)
    assert tomo.up_bound_rx(0.0) == pytest.approx(0.0)
    assert tomo.up_bound_rx(-1.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        tomo.fiorentino_bound(0.8, 0.8)
    with pytest.raises(DomainError):
        tomo.up_bound_rx(1.1)


@given(st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=200, deadline=None)
def test_tomographic_bound_dominates_up_bound(r_x, r_y):
    if r_x * r_x + r_y * r_y > 1:
        r_y = math.copysign(math.sqrt(max(0.0, 1 - r_x * r_x)), r_y)
    assert tomo.fiorentino_bound(r_x, r_y) >= tomo.up_bound_rx(r_x) - 1e-12


@pytest.mark.parametrize("r_x", np.linspace(-1, 1, 41))
def test_up_bound_is_one_minus_max_entropy(r_x):
    p = [(1 + r_x) / 2, (1 - r_x) / 2]
    assert tomo.up_bound_rx(r_x) == pytest.approx(1 - oracles.max_entropy_half(p), abs=1e-12)


def test_estimate_r_shrinks():
    assert tomo.estimate_r(10, 0) == pytest.approx(10 / 12)
    assert tomo.estimate_r(0, 0) == 0.0
    assert np.allclose(tomo.estimate_r(np.array([3, 0]), np.array([1, 4])), [2 / 6, -4 / 6])
    with pytest.raises(DomainError):
        tomo.estimate_r(-1, 3)


def test_tomo_schedule_and_seed():
    s = tomo.tomo_schedule(16)
    assert s.n_x == s.n_y == 2
    assert s.n_z == 12
    assert tomo.tomo_seed_length(16) == 2 * oracles.ceil_log2_int(math.comb(16, 4)) == 22
    assert tomo.tomo_seed_length(4) == 6
    for m in (5, 17, 99, 10**4 + 1):
        s = tomo.tomo_schedule(m)
        assert 4 * s.n_x**2 >= m > 4 * (s.n_x - 1) ** 2
    with pytest.raises(DomainError):
        tomo.tomo_schedule(3)


def test_tomo_rate_single_shot():
    m = 10**4  # n* = 50
    rate = tomo.tomo_rate(m, tomo.TomoCounts(50, 0, 25, 25))
    rx, ry = 50 / 52, 0.0
    expected = (tomo.tomo_schedule(m).n_z * tomo.fiorentino_bound(rx, ry) - tomo.tomo_seed_length(m)) / m
    assert rate == pytest.approx(expected, abs=1e-12)
    with pytest.raises(DomainError):
        tomo.tomo_rate(m, tomo.TomoCounts(49, 0, 25, 25))


def test_rescaling_of_unphysical_estimates():
    # both estimates at 50/52 give norm > 1; the bound is evaluated just inside the sphere
    m = 10**4
    rate = tomo.tomo_rate(m, tomo.TomoCounts(50, 0, 50, 0))
    s = tomo.tomo_schedule(m)
    assert rate == pytest.approx((s.n_z * tomo.fiorentino_bound(1 - 1e-12, 0.0) - s.seed_cost) / m, abs=1e-5)


def test_comparison_sources():
    pure = tomo.comparison_source(pure=True)
    mixed = tomo.comparison_source(pure=False)
    assert purity(pure.rho) == pytest.approx(1.0, abs=1e-12)
    assert purity(mixed.rho) == pytest.approx(0.995, abs=1e-3)
    r = density_to_bloch(pure.rho)
    assert r.r_x == pytest.approx(0.9947) and r.r_z == pytest.approx(0.004)
    up, tm = tomo.asymptotes(mixed)
    assert up == pytest.approx(tm, abs=1e-12)
    up, tm = tomo.asymptotes(pure)
    assert tm > up


def test_comparison_rejects_non_qubits():
    with pytest.raises(DimensionError):
        tomo.compare_sweep(simulate.ququart_experiment_model(), [100], 10)
    with pytest.raises(DomainError):
        tomo.compare_sweep(simulate.qubit_experiment_model(), [100], 10)


def test_compare_sweep_up_column_matches_protocol():
    model = tomo.comparison_source(pure=True)
    rows = tomo.compare_sweep(model, [10**4], reps=4000, rng=1, workers=1)
    exact = protocol.expected_rate(10**4, model.p_x, 1.0)
    assert abs(rows[0].up_mean - exact.mean) <= 3 * exact.std / math.sqrt(4000)


def test_compare_sweep_is_deterministic():
    model = tomo.comparison_source(pure=False)
    a = tomo.compare_sweep(model, [10**3, 10**5], reps=50, rng=3, workers=2)
    b = tomo.compare_sweep(model, [10**3, 10**5], reps=50, rng=3, workers=2)
    assert a == b


def test_mixed_source_tomo_never_beats_up():
    # equal asymptotes: tomography gains nothing beyond Monte Carlo noise at any m
    reps = 200
    rows = tomo.compare_sweep(tomo.comparison_source(pure=False), [10**4, 10**6, 10**8], reps=reps, rng=2, workers=1)
    for r in rows:
        se = math.hypot(r.up_std, r.tomo_std) / math.sqrt(reps)
        assert r.tomo_mean <= r.up_mean + 3 * se
    assert rows[0].tomo_mean < rows[0].up_mean


def test_sweep_csv_schema():
    rows = [tomo.SweepRow(100, 0.1, 0.01, 0.2, 0.02)]
    text = tomo.sweep_csv(rows, ["hello"])
    lines = text.splitlines()
    assert lines[0] == "# hello"
    assert lines[1] == "m,up_mean,up_std,tomo_mean,tomo_std"
    assert lines[2] == "100,0.1,0.01,0.2,0.02"
