import numpy as np
import pytest

from U2VChannel.channel.cir import simulate_trace, time_grid
from U2VChannel.channel.stats import Estimator, ccf
from U2VChannel.formats.config import load_scenario, build_scenario
from U2VChannel.geometry.kinematics import doppler_bound
from U2VChannel.geometry.paths import LOS_PATH_ID, PathKind


@pytest.fixture(scope="module")
def urban(bpnn_los, bpnn_nlos, analytic_gan):
    scenario = build_scenario(load_scenario("urban_28ghz"))
    trace = simulate_trace(scenario, bpnn_los, bpnn_nlos, analytic_gan(0.05), analytic_gan(0.05), times=time_grid(0.0, 60.0, 0.5))
    return scenario, trace


def los_paths(trace):
    return [(s.t, s.path(LOS_PATH_ID)) for s in trace.snapshots if s.path(LOS_PATH_ID) is not None]


def first_crossing(separations: np.ndarray, values: np.ndarray, level: float = 0.5) -> float:
    below = int(np.argmax(values < level))
    assert values[below] < level
    return float(np.interp(level, [values[below], values[below - 1]], [separations[below], separations[below - 1]]))


def test_doppler_never_exceeds_its_bound(urban):
    scenario, trace = urban
    largest = 0.0

    for snapshot in trace.snapshots:
        bound = doppler_bound(snapshot.v_tx, snapshot.v_rx, scenario.carrier_hz)

        for path in snapshot.paths:
            assert np.all(np.abs(path.doppler) <= bound * (1 + 1e-9))
            largest = max(largest, float(np.max(np.abs(path.doppler))))

    assert largest <= 3269.5


def test_los_doppler_changes_sign_as_the_uav_passes(urban):
    _, trace = urban

    for t, path in los_paths(trace):
        if t <= 28.0:
            assert path.doppler[0] > 0
        elif 34.0 <= t <= 38.0 or t >= 52.0:
            assert path.doppler[0] < 0


def test_delays_stay_in_range(urban):
    _, trace = urban
    los_delays = np.array([path.delay for _, path in los_paths(trace)]) * 1e6

    assert 0.4 <= los_delays.min() <= 0.6
    assert 2.16 <= los_delays.max() <= 3.24

    for snapshot in trace.snapshots:
        for path in snapshot.paths:
            if path.kind is PathKind.NLOS:
                assert path.delay * 1e6 <= 10.0
                assert path.ray_count == 20


def test_los_is_blocked_then_reborn(urban):
    _, trace = urban

    assert trace.snapshots[0].path(LOS_PATH_ID).instance == 0
    assert trace.snapshots[trace.index_of(45.0)].path(LOS_PATH_ID) is None

    for t, path in los_paths(trace):
        if t >= 52.0:
            assert path.instance == 1


def test_attitude_narrows_the_spatial_correlation(urban):
    _, trace = urban
    separations = np.linspace(0.0, 2.0, 201)
    spacings = np.column_stack([np.zeros(201), separations * trace.wavelength, np.zeros(201)])

    with_attitude = ccf(trace, 55.0, spacings, estimator=Estimator.CLOSED_FORM)
    without = ccf(trace, 55.0, spacings, estimator=Estimator.CLOSED_FORM, attitude=np.eye(3))

    assert with_attitude.values[0] == 1.0
    assert first_crossing(separations, with_attitude.values) < first_crossing(separations, without.values) - 0.005


def test_spatial_correlation_along_the_flight_falls_to_seventy_percent_early(urban):
    _, trace = urban
    separations = np.linspace(0.0, 0.5, 501)
    spacings = np.column_stack([separations * trace.wavelength, np.zeros(501), np.zeros(501)])

    result = ccf(trace, 55.0, spacings, estimator=Estimator.CLOSED_FORM)

    assert 0.10 <= first_crossing(separations, result.values, level=0.7) <= 0.16
