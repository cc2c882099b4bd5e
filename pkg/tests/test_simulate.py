import hashlib
import struct
import time

import numpy as np
import pytest
from scipy import stats

from qrng_cert import protocol, simulate
from qrng_cert.bits import bits_per_outcome
from qrng_cert.errors import DomainError, FormatError
from qrng_cert.quantum import BlochVector, DensityMatrix, bloch_to_density
from qrng_cert.rng import make_rng


def _seed_bits(m, seed=0):
    return make_rng(seed).integers(0, 2, 64 * protocol.seed_length(m), dtype=np.uint8)


def test_preset_models():
    q = simulate.qubit_experiment_model()
    assert q.dim == 2 and np.allclose(q.p_x, [0.9973, 0.0027])
    assert np.allclose(q.p_z, [0.5020, 0.4980])
    f = simulate.ququart_experiment_model()
    assert f.dim == 4 and f.p_x.sum() == pytest.approx(1.0)
    assert f.p_x[0] == 0.9937
    mixed = simulate.maximally_mixed_model(4)
    assert np.allclose(mixed.p_x, 0.25) and np.allclose(mixed.p_z, 0.25)


def test_model_from_state_is_consistent():
    rho = bloch_to_density(BlochVector(0.6, 0.0, 0.8))
    model = simulate.SourceModel.from_state(rho)
    assert np.allclose(model.p_x, [0.8, 0.2])
    assert np.allclose(model.p_z, [0.9, 0.1])
    with pytest.raises(DomainError):
        simulate.SourceModel(2, np.array([0.5, 0.5]), np.array([0.9, 0.1]), rho=rho)


def test_model_bloch_completion():
    r = simulate.qubit_experiment_model().bloch()
    assert r.r_x == pytest.approx(0.9946)
    assert r.r_y == 0.0
    assert r.r_z == pytest.approx(0.004)
    assert isinstance(simulate.qubit_experiment_model().density(), DensityMatrix)


def test_run_matches_schedule():
    m = 10_000
    run = simulate.sample_run(simulate.qubit_experiment_model(), m, _seed_bits(m), rng_seed=1)
    assert run.schedule.n_x == 100
    assert run.z_outcomes.size == m - 100
    assert run.x_counts.sum() == 100


def test_run_is_deterministic():
    m = 5000
    model = simulate.ququart_experiment_model()
    a = simulate.sample_run(model, m, _seed_bits(m), rng_seed=4)
    b = simulate.sample_run(model, m, _seed_bits(m), rng_seed=4)
    c = simulate.sample_run(model, m, _seed_bits(m), rng_seed=5)
    assert a == b
    assert a != c


def test_outcome_frequencies_follow_born_rule():
    m = 400_000
    model = simulate.ququart_experiment_model()
    run = simulate.sample_run(model, m, _seed_bits(m), rng_seed=2)
    freq = np.bincount(run.z_outcomes, minlength=4)
    assert stats.chisquare(freq, model.p_z * freq.sum()).pvalue > 1e-4
    # control outcomes: 633 draws from a distribution with 99.37% mass on outcome 0
    assert stats.binomtest(int(run.x_counts[0]), run.schedule.n_x, 0.9937).pvalue > 1e-4


def test_control_counts_distribution_over_seeds():
    # across runs the control count of outcome 1 is Binomial(n_X, p_1)
    m = 2500
    model = simulate.SourceModel(2, np.array([0.8, 0.2]), np.array([0.5, 0.5]))
    k = [simulate.sample_run(model, m, _seed_bits(m, s), rng_seed=s).x_counts[1] for s in range(300)]
    observed = np.bincount(k, minlength=51)
    expected = stats.binom(50, 0.2).pmf(np.arange(51)) * len(k)
    # pool the sparse tails so every bin expects at least 5
    lo, hi = 5, 15
    obs = np.r_[observed[:lo].sum(), observed[lo:hi], observed[hi:].sum()]
    exp = np.r_[expected[:lo].sum(), expected[lo:hi], expected[hi:].sum()]
    assert stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 1e-4


def test_run_file_round_trip(tmp_path):
    m = 3000
    model = simulate.ququart_experiment_model()
    run = simulate.sample_run(model, m, _seed_bits(m), rng_seed=8)
    path = tmp_path / "r.run"
    simulate.write_run(path, run, model.p_x, model.p_z)
    back = simulate.read_run(path)
    assert back == run
    assert back.meta["p_x"] == pytest.approx(list(model.p_x))
    # 2 bits per ququart outcome after the fixed fields
    blob = path.read_bytes()
    hlen = struct.unpack_from("<I", blob, 12)[0]
    fixed = 16 + hlen + 16 + 8 * 4 + 8 * run.schedule.n_x + 8
    assert len(blob) == fixed + (bits_per_outcome(4) * run.z_outcomes.size + 7) // 8


def test_run_file_hash_is_stable(tmp_path):
    m = 2000
    model = simulate.qubit_experiment_model()
    digests = []
    for name in ("a", "b"):
        run = simulate.sample_run(model, m, _seed_bits(m), rng_seed=3)
        simulate.write_run(tmp_path / name, run, model.p_x, model.p_z)
        digests.append(hashlib.sha256((tmp_path / name).read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_corrupt_run_files(tmp_path):
    m = 1000
    run = simulate.sample_run(simulate.qubit_experiment_model(), m, _seed_bits(m), rng_seed=3)
    path = tmp_path / "r.run"
    simulate.write_run(path, run)
    blob = path.read_bytes()
    (tmp_path / "trunc").write_bytes(blob[:-1])
    (tmp_path / "magic").write_bytes(b"X" + blob[1:])
    (tmp_path / "empty").write_bytes(b"")
    for name in ("trunc", "magic", "empty"):
        with pytest.raises(FormatError):
            simulate.read_run(tmp_path / name)


def test_sample_counts():
    c = simulate.sample_counts([0.5, 0.5], 100, 1)
    assert c.sum() == 100
    with pytest.raises(DomainError):
        simulate.sample_counts([0.5, 0.5], -1, 1)


def test_z_min_entropy_of_mixed_source_near_one():
    m = 200_000
    run = simulate.sample_run(simulate.maximally_mixed_model(2), m, _seed_bits(m), rng_seed=1)
    assert simulate.z_min_entropy(run) == pytest.approx(1.0, abs=0.01)


def test_million_measurement_run_is_fast():
    m = 10**6
    bits = _seed_bits(m)
    t0 = time.perf_counter()
    simulate.sample_run(simulate.qubit_experiment_model(), m, bits, rng_seed=0)
    assert time.perf_counter() - t0 < 10
