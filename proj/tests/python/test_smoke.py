import math

import pytest

import uglms


def test_bit_vector_is_msb_first():
    assert uglms.bit_vector(5, 4) == [0, 1, 0, 1]


def test_ideal_device_has_flat_linearity():
    dev = uglms.Device([2.0**i for i in reversed(range(8))])
    assert dev.n_bits == 8
    assert len(dev.edges) == 255
    assert max(abs(x) for x in dev.true_inl()) < 1e-12
    assert max(abs(x) for x in dev.true_dnl()) < 1e-12
    assert dev.quantize(10.3) == 10


def test_dnl_sums_to_zero():
    dev = uglms.generate_device(10, seed=3)
    assert abs(sum(uglms.dnl_from_edges(dev.edges))) < 1e-9


def test_quadratic_carrier_peak_matches_bow():
    coeffs = uglms.quadratic_carrier(12, 1.0, 2.0)
    dev = uglms.Device([2.0**i for i in reversed(range(12))], coeffs)
    assert max(abs(x) for x in dev.true_inl()) == pytest.approx(2.0, abs=1e-9)


def test_calibrated_variance_grows_with_noise():
    lo = uglms.calibrate_measurement_variance(0.5, trials=300)
    hi = uglms.calibrate_measurement_variance(2.0, trials=300)
    assert 0 < lo < hi


def test_estimate_reduces_error_on_small_device():
    dev = uglms.generate_device(10, seed=2)
    res = uglms.estimate(dev, iterations=150, seed=4)
    assert res["iterations"] == 150
    assert len(res["codes"]) == 150
    assert all(v >= 0 for v in res["nis"])
    assert math.isfinite(res["dinl_max"])
    assert res["dinl_max"] < 0.5


def test_run_single_writes_outputs(tmp_path):
    res = uglms.run_single(n_bits=10, iterations=40, out=str(tmp_path))
    assert len(res["true_inl"]) == len(res["inl"])
    assert (tmp_path / "summary.csv").exists()


def test_run_epsilon_reports_each_threshold():
    studies = uglms.run_epsilon(n_bits=8, runs=3, iterations=200, epsilons=[1e3, 1e-3])
    assert [s["epsilon"] for s in studies] == [1e3, 1e-3]
    assert all(it == 12 for it, _, _ in studies[0]["runs"])


def test_config_error_maps_to_value_error():
    with pytest.raises(ValueError):
        uglms.run_single(alpha=0.5)
    with pytest.raises(ValueError):
        uglms.run_single(no_such_key=1)
    assert "alpha" in uglms.config_keys()
