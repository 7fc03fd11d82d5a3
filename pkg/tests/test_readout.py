import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from topomagnon.errors import CalibrationError, ConfigurationError, InputError
from topomagnon.readout import (DEFAULT_READOUT_ERROR, ReadoutCalibration, ShotRecord,
                                bayes_correct, load_calibration, sample_shots)


def test_calibration_matrix_columns_sum_to_one():
    cal = ReadoutCalibration((0.05, 0.1), (0.02, 0.2))
    for q in range(2):
        m = cal.matrix(q)
        np.testing.assert_allclose(m.sum(axis=0), 1.0)
        assert np.linalg.det(m) == pytest.approx(cal.determinants[q])


def test_calibration_validation():
    with pytest.raises(ConfigurationError):
        ReadoutCalibration((1.2,), (0.0,))
    with pytest.raises(ConfigurationError):
        ReadoutCalibration((0.1, 0.1), (0.0,))


def test_bundled_calibration_default():
    cal = load_calibration()
    assert cal.n_qubits == 5
    assert set(cal.p_e_given_g) == {DEFAULT_READOUT_ERROR}


def test_calibration_file_round_trip(tmp_path):
    p = tmp_path / "cal.yaml"
    p.write_text("p_e_given_g: [0.01, 0.02]\np_g_given_e: [0.03, 0.04]\n")
    cal = load_calibration(p)
    assert cal.p_g_given_e == (0.03, 0.04)
    p.write_text("p_e_given_g: [0.01]\np_g_given_e: [0.03]\nextra: 1\n")
    with pytest.raises(ConfigurationError):
        load_calibration(p)


def test_perfect_readout_of_excited_state():
    rec = sample_shots([1.0, 0.0], 1000, ReadoutCalibration.perfect(2), seed=1)
    assert rec.counts.tolist() == [[1000, 0]]


def test_false_positive_rate_converges():
    n = 200_000
    rec = sample_shots([0.0], n, ReadoutCalibration((0.05,), (0.05,)), seed=7)
    sigma = np.sqrt(0.05 * 0.95 / n)
    assert abs(rec.frequencies[0, 0] - 0.05) < 3 * sigma


def test_sampling_is_deterministic_under_seed():
    p = np.random.default_rng(0).random((50, 4))
    cal = ReadoutCalibration.uniform(4)
    a = sample_shots(p, 5000, cal, seed=123)
    b = sample_shots(p, 5000, cal, seed=123)
    np.testing.assert_array_equal(a.counts, b.counts)
    c = sample_shots(p, 5000, cal, seed=124)
    assert not np.array_equal(a.counts, c.counts)


def test_qubit_streams_are_independent_of_chain_width():
    cal3 = ReadoutCalibration.uniform(3)
    cal2 = ReadoutCalibration.uniform(2)
    p = np.full((10, 3), 0.4)
    a = sample_shots(p, 100, cal3, seed=5)
    b = sample_shots(p[:, :2], 100, cal2, seed=5)
    np.testing.assert_array_equal(a.counts[:, :2], b.counts)


@pytest.mark.parametrize("shots", [0, -5, 2.5])
def test_shot_count_validation(shots):
    with pytest.raises(InputError):
        sample_shots([0.5], shots, ReadoutCalibration.uniform(1))


def test_probability_validation():
    with pytest.raises(InputError):
        sample_shots([1.5], 10, ReadoutCalibration.uniform(1))
    with pytest.raises(InputError):
        sample_shots([0.5, 0.5], 10, ReadoutCalibration.uniform(1))


@given(st.integers(0, 10_000), st.integers(1, 10_000))
def test_counts_bounded(k, n):
    rec = sample_shots([min(k / 10_000, 1.0)], n, ReadoutCalibration.uniform(1), seed=k)
    assert 0 <= rec.counts[0, 0] <= n


def test_identity_calibration_leaves_frequencies():
    rec = ShotRecord(np.array([[3, 7], [10, 0]]), 10, None)
    out = bayes_correct(rec, ReadoutCalibration.perfect(2))
    np.testing.assert_allclose(out.probabilities, rec.frequencies)
    assert not out.any_clamped


def test_inversion_formula():
    cal = ReadoutCalibration((0.05, 0.1), (0.08, 0.02))
    rec = ShotRecord(np.array([[400, 300]]), 1000, None)
    out = bayes_correct(rec, cal)
    expected = [(0.4 - 0.05) / (1 - 0.13), (0.3 - 0.1) / (1 - 0.12)]
    np.testing.assert_allclose(out.probabilities[0], expected)
    # equals the inverse confusion matrix applied to (f_g, f_e)
    for q, f in enumerate((0.4, 0.3)):
        p = np.linalg.solve(cal.matrix(q), [1 - f, f])
        assert p[1] == pytest.approx(expected[q])


def test_frequency_below_false_positive_rate_clamps_with_flag():
    cal = ReadoutCalibration((0.05,), (0.05,))
    out = bayes_correct(ShotRecord(np.array([[2]]), 100, None), cal)
    assert out.probabilities[0, 0] == 0.0
    assert out.clamped[0, 0]
    out = bayes_correct(ShotRecord(np.array([[99]]), 100, None), cal)
    assert out.probabilities[0, 0] == 1.0 and out.clamped[0, 0]


def test_singular_calibration_rejected():
    cal = ReadoutCalibration((0.5,), (0.5,))
    with pytest.raises(CalibrationError):
        bayes_correct(ShotRecord(np.array([[5]]), 10, None), cal)


@pytest.mark.parametrize("p_true", [0.0, 0.03, 0.3, 0.77, 1.0])
def test_round_trip_unbiased_at_a_million_shots(p_true):
    cal = ReadoutCalibration((0.05,), (0.08,))
    n = 10 ** 6
    out = bayes_correct(sample_shots([p_true], n, cal, seed=11), cal)
    p_read = p_true * 0.92 + (1 - p_true) * 0.05
    sigma = np.sqrt(p_read * (1 - p_read) / n) / 0.87
    # clamping can only pull boundary values towards the truth
    assert abs(out.probabilities[0, 0] - p_true) < 3 * sigma


def test_mean_of_corrected_estimates_is_unbiased():
    cal = ReadoutCalibration((0.05,), (0.05,))
    p_true = 0.35
    n, reps = 10 ** 6, 200
    rec = sample_shots(np.full((reps, 1), p_true), n, cal, seed=99)
    out = bayes_correct(rec, cal)
    assert not out.any_clamped
    sigma_mean = out.sigma.mean() / np.sqrt(reps)
    assert abs(out.probabilities.mean() - p_true) < 3 * sigma_mean
