import numpy as np
import pytest
from scipy.special import j0

from U2VChannel.client.errors import OutOfRangeError, InvalidHyperparameterError
from U2VChannel.channel.cir import CirSnapshot, SnapshotPath
from U2VChannel.channel.stats import (
    Estimator, pdp, lag_indices, stcf, acf, ccf, acf_vs_distance, lag_window, dpsd
)
from U2VChannel.geometry.kinematics import AngleSet
from U2VChannel.geometry.paths import PathKind


def x_spacings(wavelength: float, separations: np.ndarray) -> np.ndarray:
    return np.column_stack([separations * wavelength, np.zeros_like(separations), np.zeros_like(separations)])


def test_pdp_is_sorted_by_delay():
    rng = np.random.default_rng(0)
    angles = AngleSet(0.0, 0.0, 0.0, 0.0)
    paths = [
        SnapshotPath(i + 1, PathKind.NLOS, float(power), float(delay), np.zeros(1), angles)
        for i, (power, delay) in enumerate(zip(rng.uniform(1e-12, 1e-9, 8), rng.uniform(1e-7, 5e-6, 8)))
    ]

    profile = pdp(CirSnapshot(t=0.0, pair=(0, 0), paths=paths))

    assert len(profile) == 8
    assert [delay for delay, _ in profile] == sorted(p.delay for p in paths)
    assert sum(power for _, power in profile) == pytest.approx(sum(p.power for p in paths))
    assert pdp(CirSnapshot(t=0.0, pair=(0, 0))) == []


def test_lag_indices(tone_trace):
    trace = tone_trace(100.0, 1e-3, 11)

    assert lag_indices(trace, [0.0, 0.002, -0.003]).tolist() == [0, 2, -3]

    with pytest.raises(OutOfRangeError):
        lag_indices(trace, [0.0015])


@pytest.mark.parametrize("estimator", [Estimator.CLOSED_FORM, Estimator.ENSEMBLE])
def test_tone_acf_is_a_phasor(tone_trace, estimator):
    doppler, step = 100.0, 1e-3
    trace = tone_trace(doppler, step, 101)
    lags = np.array([0.0, 0.001, 0.005, -0.003, 0.02])

    result = acf(trace, 0.05, lags, estimator=estimator, ensemble=50)

    assert np.allclose(result.lags, lags)
    assert np.allclose(result.values, np.exp(2j * np.pi * doppler * lags), atol=1e-9)


def test_acf_outside_span_raises(tone_trace):
    trace = tone_trace(100.0, 1e-3, 11)

    with pytest.raises(OutOfRangeError):
        acf(trace, 0.008, [0.005], estimator=Estimator.CLOSED_FORM)

    with pytest.raises(OutOfRangeError):
        acf(trace, 1.0, [0.0], estimator=Estimator.CLOSED_FORM)


def test_ring_of_rays_gives_bessel_ccf(ring_trace):
    trace = ring_trace(rays=720)
    separations = np.linspace(0.0, 2.0, 21)

    result = ccf(trace, 0.0, x_spacings(trace.wavelength, separations), estimator=Estimator.CLOSED_FORM)

    assert np.allclose(result.separations_wavelengths, separations)
    assert np.allclose(result.values, j0(2 * np.pi * separations), atol=1e-8)


def test_ensemble_ccf_approaches_bessel(ring_trace):
    trace = ring_trace(rays=180)
    separations = np.linspace(0.0, 2.0, 11)

    result = ccf(trace, 0.0, x_spacings(trace.wavelength, separations), ensemble=2000, seed=3)

    assert result.values[0] == 1.0
    assert np.allclose(result.values, j0(2 * np.pi * separations), atol=0.1)


def test_stcf_surface_shape_and_static_lags(ring_trace):
    trace = ring_trace(rays=720)
    separations = np.array([0.0, 0.25, 0.5])

    surface = stcf(trace, 0.0, [0.0, 0.1, 0.2], x_spacings(trace.wavelength, separations), estimator=Estimator.CLOSED_FORM)

    assert surface.values.shape == (3, 3)
    assert np.allclose(surface.lags, [0.0, 0.1, 0.2])

    # Nothing moves, so every lag repeats the zero-lag row
    assert np.allclose(surface.values[1], surface.values[0], atol=1e-12)
    assert np.allclose(surface.values[2].real, j0(2 * np.pi * separations), atol=1e-8)


def test_stcf_validates_inputs(ring_trace):
    trace = ring_trace()

    with pytest.raises(InvalidHyperparameterError):
        stcf(trace, 0.0, [0.0], np.zeros((2, 3)), np.zeros((3, 3)))

    with pytest.raises(InvalidHyperparameterError):
        stcf(trace, 0.0, [0.0], ensemble=0)


def test_acf_vs_distance_snaps_to_lags(tone_trace):
    doppler = 100.0
    trace = tone_trace(doppler, 1e-3, 101, speed=2.0)

    result = acf_vs_distance(trace, 0.05, [0.0, 0.002, 0.004], estimator=Estimator.CLOSED_FORM)

    assert np.allclose(result.distances, [0.0, 0.002, 0.004])
    assert np.allclose(result.distances_wavelengths, result.distances / trace.wavelength)
    assert np.allclose(result.values, np.exp(2j * np.pi * doppler * np.array([0.0, 1e-3, 2e-3])))

    with pytest.raises(OutOfRangeError):
        acf_vs_distance(tone_trace(doppler, 1e-3, 101, speed=0.0), 0.05, [0.002])


def test_lag_window_is_symmetric_and_peaks_at_zero():
    window = lag_window(50)

    assert window.shape == (99,)
    assert window[49] == pytest.approx(1.0)
    assert np.allclose(window, window[::-1])
    assert np.argmax(window) == 49


def test_dpsd_of_a_tone(tone_trace):
    doppler, step = 100.0, 1e-3
    trace = tone_trace(doppler, step, 401, speed=2.0)

    result = dpsd(trace, 0.2, window_s=0.05, fft_size=4096)
    df = result.frequencies[1] - result.frequencies[0]

    assert result.frequencies.shape == (4096,)
    assert np.all(result.power >= 0)
    assert np.sum(result.power) * df == pytest.approx(1.0, rel=1e-6)
    assert abs(result.frequencies[np.argmax(result.power)] - doppler) <= df
    assert result.doppler_bound == pytest.approx(28e9 * 2.0 / 299792458.0)
    assert not result.aliasing_warning


def test_dpsd_flags_aliasing(tone_trace):
    trace = tone_trace(100.0, 1.0 / 300.0, 101, speed=2.0)

    assert dpsd(trace, trace.times[50], window_s=0.05, fft_size=1024).aliasing_warning


def test_dpsd_rejects_short_windows(tone_trace):
    trace = tone_trace(100.0, 1e-3, 401)

    with pytest.raises(InvalidHyperparameterError):
        dpsd(trace, 0.2, window_s=0.001)

    with pytest.raises(InvalidHyperparameterError):
        dpsd(trace, 0.2, window_s=0.05, fft_size=64)


def test_pdp_conserves_path_power_over_random_snapshots():
    rng = np.random.default_rng(11)
    angles = AngleSet(0.0, 0.0, 0.0, 0.0)

    for _ in range(1000):
        count = int(rng.integers(1, 25))
        powers = 10.0 ** rng.uniform(-15.0, -6.0, count)
        delays = rng.uniform(1e-8, 1e-5, count)
        paths = [
            SnapshotPath(i + 1, PathKind.NLOS, float(power), float(delay), rng.uniform(0.0, 2 * np.pi, 4), angles)
            for i, (power, delay) in enumerate(zip(powers, delays))
        ]

        profile = pdp(CirSnapshot(t=0.0, pair=(0, 0), paths=paths))

        assert np.all(np.diff([delay for delay, _ in profile]) >= 0)
        assert sum(power for _, power in profile) == pytest.approx(float(np.sum(powers)), rel=1e-12)


def test_ensemble_error_shrinks_with_the_square_root_of_its_size(ring_trace):
    trace = ring_trace(rays=180)
    spacing = x_spacings(trace.wavelength, np.array([0.3]))
    exact = ccf(trace, 0.0, spacing, estimator=Estimator.CLOSED_FORM).values[0]
    errors = []

    for size in (100, 400, 1600):
        estimates = [ccf(trace, 0.0, spacing, ensemble=size, seed=seed).values[0] for seed in range(60)]
        errors.append(float(np.sqrt(np.mean((np.array(estimates) - exact) ** 2))))

    # Quadrupling the ensemble halves the error
    assert errors[0] / errors[1] == pytest.approx(2.0, rel=0.35)
    assert errors[1] / errors[2] == pytest.approx(2.0, rel=0.35)
    assert errors[0] / errors[2] == pytest.approx(4.0, rel=0.35)
