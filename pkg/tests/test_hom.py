import numpy as np
import pytest

from artifact.hom import HOMCurve, HOMFitError, fit_visibility, hom_curve, poisson_sample

DELAYS = np.arange(-600, 601, 20.0)


def test_dip_minimum_and_baseline():
    c = hom_curve([0.0, -1e6, 1e6], 133, 0.943, c0=1.0)
    assert c.coincidences[0] == pytest.approx(0.057)
    assert np.allclose(c.coincidences[1:], 1.0)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        hom_curve(DELAYS, 0, 0.9)
    with pytest.raises(ValueError):
        hom_curve(DELAYS, 100, 1.2)


def test_noiseless_round_trip():
    fit = fit_visibility(hom_curve(DELAYS, 133, 0.943, c0=600), poisson_weights=False)
    assert fit.v == pytest.approx(0.943, abs=1e-6)
    assert fit.tau_c == pytest.approx(133, abs=1e-3)


def test_exponential_shape_round_trip():
    fit = fit_visibility(hom_curve(DELAYS, 90, 0.8, c0=500, shape="exponential"), "exponential", poisson_weights=False)
    assert fit.v == pytest.approx(0.8, abs=1e-6)


def test_flat_curve_fits_zero_visibility():
    fit = fit_visibility(HOMCurve(DELAYS, np.full(DELAYS.shape, 600.0)))
    assert fit.v < 1e-3


def test_poisson_noise_mostly_within_band():
    curve = hom_curve(DELAYS, 133, 0.943, c0=600)
    hits = 0
    for seed in range(60):
        fit = fit_visibility(poisson_sample(curve, np.random.default_rng(seed)))
        hits += abs(fit.v - 0.943) <= 0.02
    assert hits / 60 >= 0.95


def test_too_few_points():
    with pytest.raises(HOMFitError):
        fit_visibility(HOMCurve(np.array([-1.0, 0.0, 1.0]), np.ones(3)))


def test_csv_roundtrip():
    c = hom_curve(DELAYS, 133, 0.943, c0=600)
    back = HOMCurve.from_csv(c.to_csv())
    assert np.allclose(back.coincidences, c.coincidences, atol=1e-6)
