import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qrng_cert import combinatorics, entropy, kernels, protocol
from qrng_cert.errors import BudgetError, DomainError, FormatError, InsufficientSeedError
from qrng_cert.rng import make_rng

QUBIT_P = np.array([0.9973, 0.0027])


# -- seed accounting -----------------------------------------------------------


@pytest.mark.parametrize("m", [2, 3, 4, 5, 15, 16, 17, 150, 10**4, 12345])
def test_seed_length_matches_doubling_oracle(m):
    assert protocol.seed_length(m) == oracles.seed_length(m)


def test_seed_length_known_values():
    assert protocol.seed_length(4) == 3
    assert protocol.seed_length(16) == 11
    assert protocol.seed_length(150) == 61
    assert protocol.seed_length(10**6) == 11402


@pytest.mark.parametrize("m", [10**6 + 1, 5100**2, 5967**2, 10**8])
def test_seed_length_above_exact_limit_matches_integer_path(m):
    n_x = protocol.control_size(m)
    assert protocol.seed_length(m) == (math.comb(m, n_x) - 1).bit_length()


def test_seed_length_large_run_values():
    assert protocol.seed_length(5967**2) == 83444
    assert protocol.seed_length(5100**2) == 70163


@given(st.integers(2, 10**7))
@settings(max_examples=200, deadline=None)
def test_schedule_sizes(m):
    n_x, n_z = protocol.schedule_sizes(m)
    assert n_x + n_z == m
    assert (n_x - 1) ** 2 < m <= n_x**2


@given(st.integers(2, 400))
@settings(max_examples=100, deadline=None)
def test_seed_length_bounds(m):
    t = protocol.seed_length(m)
    total = math.comb(m, protocol.control_size(m))
    assert 2 ** (t - 1) < total <= 2**t or (total == 1 and t == 0)


def test_ceil_log2_binomial_edges():
    assert combinatorics.ceil_log2_binomial(10, 0) == 0
    assert combinatorics.ceil_log2_binomial(10, 10) == 0
    assert combinatorics.ceil_log2_binomial(4, 2) == 3
    assert combinatorics.ceil_log2_binomial(2**20, 1) == 20
    with pytest.raises(DomainError):
        combinatorics.ceil_log2_binomial(3, 4)


def test_ceil_log2_binomial_exact_powers_above_limit():
    # C(n, 1) = n: the ceiling flips exactly at powers of two
    for n in (2**21, 2**21 + 1, 2**24 - 1, 2**24):
        assert combinatorics.ceil_log2_binomial(n, 1) == oracles.ceil_log2_int(n)


# -- combinatorial number system ----------------------------------------------


@pytest.mark.parametrize("m", range(1, 13))
def test_unrank_is_a_bijection(m):
    for k in range(m + 1):
        seen = []
        for idx in range(math.comb(m, k)):
            pos = combinatorics.unrank_combination(idx, m, k)
            assert pos == sorted(pos) and len(set(pos)) == k
            assert all(0 <= c < m for c in pos)
            assert combinatorics.rank_combination(pos, m) == idx
            seen.append(tuple(pos))
        assert len(set(seen)) == math.comb(m, k)
        # colexicographic order: compare reversed tuples
        assert seen == sorted(seen, key=lambda s: s[::-1])


def test_unrank_first_and_last():
    assert combinatorics.unrank_combination(0, 10, 3) == [0, 1, 2]
    assert combinatorics.unrank_combination(math.comb(10, 3) - 1, 10, 3) == [7, 8, 9]


@given(st.data())
@settings(max_examples=30, deadline=None)
def test_unrank_round_trip_large(data):
    m = data.draw(st.integers(10**4, 10**6))
    k = data.draw(st.integers(1, 200))
    idx = data.draw(st.integers(0, math.comb(m, k) - 1))
    pos = combinatorics.unrank_combination(idx, m, k)
    assert combinatorics.rank_combination(pos, m) == idx


def test_unrank_rejects_out_of_range():
    with pytest.raises(DomainError):
        combinatorics.unrank_combination(math.comb(5, 2), 5, 2)
    with pytest.raises(DomainError):
        combinatorics.rank_combination([1, 1], 5)


def _int_to_bits(value: int, t: int) -> list[int]:
    return [(value >> (t - 1 - i)) & 1 for i in range(t)]


def test_seed_to_schedule_reads_msb_first_blocks():
    m = 16  # n_X = 4, C(16, 4) = 1820, t = 11
    bits = _int_to_bits(1000, 11)
    sched, used = protocol.seed_to_schedule(bits, m)
    assert used == 11
    assert sched.x_positions.tolist() == combinatorics.unrank_combination(1000, 16, 4)
    assert sched.n_x == 4 and sched.n_z == 12


def test_seed_to_schedule_rejects_blocks_above_range():
    m = 16
    bits = _int_to_bits(2000, 11) + _int_to_bits(5, 11)
    sched, used = protocol.seed_to_schedule(bits, m)
    assert used == 22
    assert sched.x_positions.tolist() == combinatorics.unrank_combination(5, 16, 4)


def test_seed_to_schedule_exhausted():
    with pytest.raises(InsufficientSeedError):
        protocol.seed_to_schedule(_int_to_bits(2000, 11), 16)
    with pytest.raises(InsufficientSeedError):
        protocol.seed_to_schedule([1, 0, 1], 16)


def test_uniform_seeds_give_uniform_schedules():
    # m = 5: n_X = 3, C(5,3) = 10, t = 4; every accepted block value appears equally often
    rng = make_rng(1)
    hist = np.zeros(10)
    for _ in range(20000):
        sched, _ = protocol.seed_to_schedule(rng.integers(0, 2, 64), 5)
        hist[combinatorics.rank_combination(sched.x_positions, 5)] += 1
    from scipy import stats

    assert stats.chisquare(hist).pvalue > 1e-4


# -- certification -------------------------------------------------------------


def test_certify_small_run():
    cert = protocol.certify(150, (13, 0), 1.0)
    assert cert.n_x == 13
    assert cert.seed_cost == 61
    assert cert.h_half_estimate == pytest.approx(0.517049, abs=1e-6)
    assert cert.b_sec == pytest.approx(137 * (1 - 0.5170487471) - 61, abs=1e-6)
    assert cert.certifies_anything


def test_certify_uniform_counts_is_negative():
    cert = protocol.certify(10**4, (50, 50), 1.0)
    assert cert.b_sec < 0
    assert not cert.certifies_anything


def test_certify_validates_counts():
    with pytest.raises(DomainError):
        protocol.certify(150, (12, 0), 1.0)
    with pytest.raises(DomainError):
        protocol.certify(150, (13, 0), 0.0)


def test_certificate_text_round_trip():
    cert = protocol.certify(10**4, (99, 1), 1.0, meta={"label": "qubit", "config_hash": "abc"})
    back = protocol.Certificate.from_text(cert.to_text())
    assert back == cert
    assert back.b_sec == cert.b_sec
    assert back.meta == {"label": "qubit", "config_hash": "abc"}


def test_certificate_rejects_tampering():
    text = protocol.certify(10**4, (99, 1), 1.0).to_text()
    with pytest.raises(FormatError):
        protocol.Certificate.from_text(text.replace("b_sec: ", "b_sec: 1"))
    with pytest.raises(FormatError):
        protocol.Certificate.from_text(text.replace("format: ", "format: x"))
    with pytest.raises(FormatError):
        protocol.Certificate.from_text("\n".join(line for line in text.splitlines() if not line.startswith("q:")))


@pytest.mark.parametrize("m", [150, 10**4, 10**6])
@pytest.mark.parametrize("n_1", [0, 1, 5])
def test_single_shot_rate_equals_certify(m, n_1):
    n_x = protocol.control_size(m)
    assert protocol.single_shot_rate_qubit(n_1, m) == pytest.approx(protocol.certify(m, (n_x - n_1, n_1), 1.0).rate, abs=1e-12)


def test_single_shot_rate_direct_value():
    # n_1 = 0 at m = 1e6 evaluated independently; the lgamma oracle is good to ~1e-11 at this size
    assert protocol.single_shot_rate_qubit(0, 10**6) == pytest.approx(oracles.rate(10**6, (1000, 0), 1.0), abs=1e-10)
    assert protocol.single_shot_rate_qubit(0, 10**6) == pytest.approx(0.909, abs=1e-3)


def test_large_run_certified_bits():
    m = 5967**2
    # with the observed 19 errors the estimate is within 0.001 of the reference bound 0.8437
    b = protocol.certified_bits(m, entropy.bayesian_h_half([5948, 19]), 1.0)
    assert b == pytest.approx(29.951e6, rel=2e-3)


# -- expected rate ---------------------------------------------------------------


@pytest.mark.parametrize("m", [10**2, 10**3, 10**4, 10**6])
def test_exact_expected_rate_matches_binomial_sum(m):
    s = protocol.expected_rate(m, QUBIT_P, 1.0, mode="exact")
    mean, std = oracles.qubit_expected_rate(m, QUBIT_P[1])
    assert s.mean == pytest.approx(mean, abs=1e-10)
    assert s.std == pytest.approx(std, abs=1e-10)


def test_exact_expected_rate_known_values():
    assert protocol.expected_rate(10**2, QUBIT_P, 1.0).mean == pytest.approx(-0.0504, abs=1e-4)
    assert protocol.expected_rate(10**4, QUBIT_P, 1.0).mean == pytest.approx(0.6558, abs=1e-4)


def test_exact_expected_rate_ququart_matches_multinomial_oracle():
    p = np.array([0.9937, 0.00359, 0.00266, 1 - 0.9937 - 0.00359 - 0.00266])
    for m in (10**2, 10**3):
        s = protocol.expected_rate(m, p, 2.0)
        mean, std, lost = oracles.multinomial_expected_rate(m, p, 2.0, max_errors=10**6)
        assert abs(lost) < 1e-12
        assert s.mean == pytest.approx(mean, abs=1e-10)
        assert s.std == pytest.approx(std, abs=1e-10)


def test_exact_mode_budget():
    with pytest.raises(BudgetError):
        protocol.expected_rate(10**6, np.full(4, 0.25), 2.0, mode="exact")


@pytest.mark.parametrize("m", [10**3, 10**5])
def test_montecarlo_within_three_standard_errors_of_exact(m):
    exact = protocol.expected_rate(m, QUBIT_P, 1.0)
    mc = protocol.expected_rate(m, QUBIT_P, 1.0, mode="montecarlo", reps=4000, rng=5, workers=1)
    assert abs(mc.mean - exact.mean) <= 3 * exact.std / math.sqrt(4000)


def test_montecarlo_deterministic_given_seed_and_workers():
    a = protocol.expected_rate(10**4, QUBIT_P, 1.0, "montecarlo", 300, rng=9, workers=2)
    b = protocol.expected_rate(10**4, QUBIT_P, 1.0, "montecarlo", 300, rng=9, workers=2)
    assert a == b


def test_workers_split_matches_direct_moments():
    # chunked moments merge to the same mean/std as the concatenated sample
    from qrng_cert.rng import Moments

    v = make_rng(0).normal(size=1001)
    merged = Moments.of(v[:300]).merge(Moments.of(v[300:700])).merge(Moments.of(v[700:]))
    assert merged.mean == pytest.approx(v.mean(), abs=1e-14)
    assert merged.std == pytest.approx(v.std(), abs=1e-14)


def test_expected_rate_increases_to_asymptote():
    means = [protocol.expected_rate(m, QUBIT_P, 1.0).mean for m in (10**2, 10**3, 10**4, 10**5, 10**6)]
    assert all(a < b for a, b in zip(means, means[1:]))
    assert means[-1] < protocol.asymptotic_rate(QUBIT_P, 1.0)


def test_expected_rate_at_1e8_gap():
    gap = protocol.asymptotic_rate(QUBIT_P, 1.0) - protocol.expected_rate(10**8, QUBIT_P, 1.0).mean
    # seed cost alone is t(1e8)/1e8 = 0.00147, so the gap cannot fall below it
    assert gap > protocol.seed_length(10**8) / 10**8
    assert gap < 0.005


@pytest.mark.xfail(strict=True, reason="seed cost t(1e8)/1e8 = 0.00147 alone exceeds the 1e-3 window")
def test_expected_rate_within_1e3_of_asymptote_at_1e8():
    gap = protocol.asymptotic_rate(QUBIT_P, 1.0) - protocol.expected_rate(10**8, QUBIT_P, 1.0).mean
    assert abs(gap) <= 1e-3


def test_onsets():
    assert protocol.min_m_positive(QUBIT_P, 1.0) == 131
    p4 = np.array([0.9937, 0.00359, 0.00266, 1 - 0.9937 - 0.00359 - 0.00266])
    assert protocol.min_m_positive(p4, 2.0) == 69


def test_min_m_positive_rejects_hopeless_source():
    with pytest.raises(DomainError):
        protocol.min_m_positive([0.5, 0.5], 1.0)


def test_error_distribution_is_binomial():
    from scipy import stats

    w = protocol.error_distribution(100, QUBIT_P)
    assert np.allclose(w, stats.binom.pmf(np.arange(101), 100, QUBIT_P[1]), rtol=1e-10, atol=1e-300)


def test_compositions_backends_agree():
    for n, d in [(0, 1), (4, 1), (0, 3), (6, 3), (9, 4), (5, 6)]:
        a = np.asarray(kernels.py_backend.compositions(n, d))
        assert a.shape == (math.comb(n + d - 1, d - 1), d)
        assert (a.sum(axis=1) == n).all()
        assert [tuple(r) for r in a] == sorted(tuple(r) for r in a)
        if kernels.c_backend is not None:
            assert np.array_equal(a, np.asarray(kernels.c_backend.compositions(n, d)))
