from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft, signal

from U2VChannel.client.errors import OutOfRangeError, InvalidHyperparameterError
from U2VChannel.client.logger import U2VChannelLogHandler
from U2VChannel.client.settings import SimDefaults
from U2VChannel.geometry.kinematics import Mat3, doppler_bound
from U2VChannel.channel.cir import ChannelTrace, TraceSnapshot, TracePath, CirSnapshot

PathKey = Tuple[int, int]


class Estimator(enum.Enum):
    """
    How correlation expectations are formed.

    ENSEMBLE averages over fresh uniform initial phases; CLOSED_FORM uses the
    expectation over those phases directly.

    """

    ENSEMBLE = "ensemble"
    CLOSED_FORM = "closed_form"


@dataclass()
class CorrelationResult:
    lags: np.ndarray
    values: np.ndarray


@dataclass()
class CcfResult:
    """
    Spatial cross-correlation against element separation

    """

    spacings: np.ndarray
    separations_wavelengths: np.ndarray
    values: np.ndarray


@dataclass()
class StcfResult:
    lags: np.ndarray
    spacings: np.ndarray
    separations_wavelengths: np.ndarray
    values: np.ndarray


@dataclass()
class DpsdResult:
    frequencies: np.ndarray
    power: np.ndarray
    doppler_bound: float
    aliasing_warning: bool


@dataclass()
class DistanceAcfResult:
    distances: np.ndarray
    distances_wavelengths: np.ndarray
    values: np.ndarray


def pdp(snapshot: CirSnapshot) -> List[Tuple[float, float]]:
    """
    Power delay profile of one snapshot

    :param snapshot: The CIR snapshot
    :return: (delay s, linear power) per path, ordered by delay

    """

    return sorted((path.delay, path.power) for path in snapshot.paths)


def lag_indices(trace: ChannelTrace, lags: Sequence[float]) -> np.ndarray:
    """
    Convert time lags to whole snapshot steps

    :raises OutOfRangeError: If a lag is not a multiple of the grid step

    """

    step: float = trace.step
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    indices: np.ndarray = np.rint(lags / step).astype(int)

    if np.any(np.abs(indices * step - lags) > 1e-6 * step):
        raise OutOfRangeError(f"Lags must be multiples of the snapshot step {step} s.")

    return indices


def _selected(snapshot: TraceSnapshot, path_id: Optional[int]) -> Dict[PathKey, TracePath]:
    return {
        path.key: path
        for path in snapshot.paths
        if path_id is None or path.path_id == path_id
    }


class _Correlator:
    """
    Space-time correlation of one trace around a reference snapshot.

    The reference field is taken at element 0 of each array; the displaced field adds
    body-frame spacings to those elements.

    """

    def __init__(
            self,
            trace: ChannelTrace,
            index: int,
            path_id: Optional[int],
            frequency: float,
            attitude: Optional[Mat3]
    ):
        self.trace: ChannelTrace = trace
        self.index: int = index
        self.path_id: Optional[int] = path_id
        self.frequency: float = frequency
        self.attitude: Optional[Mat3] = attitude
        self.d_tx: np.ndarray = trace.tx_array.offsets[0]
        self.d_rx: np.ndarray = trace.rx_array.offsets[0]

    def snapshot(self, lag: int) -> TraceSnapshot:
        position: int = self.index + lag

        if not 0 <= position < len(self.trace.snapshots):
            raise OutOfRangeError(f"Lag of {lag} steps from snapshot {self.index} leaves the simulated span.")

        return self.trace.snapshots[position]

    def ray_phases(self, snapshot: TraceSnapshot, path: TracePath, spacing_tx: np.ndarray, spacing_rx: np.ndarray) -> np.ndarray:
        """
        Total phase per ray, including e^{−j2πfτ}, for displaced elements; shape (K, M)

        """

        rows: List[np.ndarray] = [
            path.phases
            + self.trace.element_phase(snapshot, path, self.d_tx + s_tx, self.d_rx + s_rx, self.attitude)
            - 2.0 * np.pi * self.frequency * path.delay
            for s_tx, s_rx in zip(spacing_tx, spacing_rx)
        ]

        return np.array(rows)

    def closed_form(self, lag: int, spacing_tx: np.ndarray, spacing_rx: np.ndarray, normalized: bool = True) -> np.ndarray:
        """
        Expectation over initial phases; shape (K,)

        """

        origin: Dict[PathKey, TracePath] = _selected(self.snapshot(0), self.path_id)
        shifted_snapshot: TraceSnapshot = self.snapshot(lag)
        shifted: Dict[PathKey, TracePath] = _selected(shifted_snapshot, self.path_id)
        zero: np.ndarray = np.zeros((1, 3))
        total: np.ndarray = np.zeros(len(spacing_tx), dtype=complex)

        for key in sorted(set(origin) & set(shifted)):
            before, after = origin[key], shifted[key]
            reference: np.ndarray = self.ray_phases(self.snapshot(0), before, zero, zero)[0]
            displaced: np.ndarray = self.ray_phases(shifted_snapshot, after, spacing_tx, spacing_rx)
            rays: np.ndarray = np.mean(np.exp(1j * (displaced - reference)), axis=1)
            total += np.sqrt(before.power * after.power) * rays

        if not normalized:
            return total

        norm: float = float(np.sqrt(sum(p.power for p in origin.values()) * sum(p.power for p in shifted.values())))
        return total / norm if norm > 0 else total

    def ensemble(self, lag: int, spacing_tx: np.ndarray, spacing_rx: np.ndarray, count: int, seed: int) -> np.ndarray:
        """
        Ratio estimate Σ S₀* S₁ / √(Σ|S₀|² Σ|S₁|²) over fresh initial phases; shape (K,)

        """

        before_snapshot, after_snapshot = self.snapshot(0), self.snapshot(lag)
        origin: Dict[PathKey, TracePath] = _selected(before_snapshot, self.path_id)
        shifted: Dict[PathKey, TracePath] = _selected(after_snapshot, self.path_id)
        # One phase stream per path instance, shared by both ends
        draws: Dict[PathKey, np.ndarray] = {
            key: np.random.default_rng([seed, self.index, *key]).uniform(0.0, 2.0 * np.pi, size=(count, path.ray_count))
            for key, path in {**shifted, **origin}.items()
        }

        zero: np.ndarray = np.zeros((1, 3))
        s0: np.ndarray = np.zeros(count, dtype=complex)
        s1: np.ndarray = np.zeros((count, len(spacing_tx)), dtype=complex)

        for key, path in origin.items():
            phases: np.ndarray = self.ray_phases(before_snapshot, path, zero, zero)[0]
            s0 += np.sqrt(path.power) * np.exp(1j * (phases + draws[key])).sum(axis=1) / np.sqrt(path.ray_count)

        for key, path in shifted.items():
            phases = self.ray_phases(after_snapshot, path, spacing_tx, spacing_rx)
            field: np.ndarray = np.exp(1j * (phases[None, :, :] + draws[key][:, None, :])).sum(axis=2)
            s1 += np.sqrt(path.power) * field / np.sqrt(path.ray_count)

        norm: np.ndarray = np.sqrt(np.sum(np.abs(s0) ** 2) * np.sum(np.abs(s1) ** 2, axis=0))
        values: np.ndarray = np.sum(np.conj(s0)[:, None] * s1, axis=0)
        return np.divide(values, norm, out=np.zeros_like(values), where=norm > 0)


def _spacing_arrays(spacings: Optional[np.ndarray], rx_spacings: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    spacing_tx: np.ndarray = np.zeros((1, 3)) if spacings is None else np.asarray(spacings, dtype=float).reshape(-1, 3)
    spacing_rx: np.ndarray = np.zeros_like(spacing_tx) if rx_spacings is None else np.asarray(rx_spacings, dtype=float).reshape(-1, 3)

    if spacing_rx.shape != spacing_tx.shape:
        raise InvalidHyperparameterError("Transmit and receive spacings must have the same count.")

    return spacing_tx, spacing_rx


def stcf(
        trace: ChannelTrace,
        t: float,
        lags: Sequence[float],
        spacings: Optional[np.ndarray] = None,
        rx_spacings: Optional[np.ndarray] = None,
        path_id: Optional[int] = None,
        frequency: float = 0.0,
        estimator: Estimator = Estimator.ENSEMBLE,
        ensemble: Optional[int] = None,
        seed: int = 0,
        attitude: Optional[Mat3] = None
) -> StcfResult:
    """
    Normalized space-time correlation surface at time t.

    Only path instances alive at both t and t + Δt contribute to the cross terms; the
    normalization uses every selected path at each end.

    :param trace: The simulated channel
    :param t: Reference time (s), a grid time
    :param lags: Time lags (s), multiples of the grid step
    :param spacings: Transmit element displacements, shape (K, 3), body frame (m)
    :param rx_spacings: Receive element displacements, shape (K, 3) (default zeros)
    :param path_id: Restrict to one path (None sums over all)
    :param frequency: Frequency f of the correlation (Hz)
    :param estimator: Ensemble or closed form
    :param ensemble: Ensemble size (default from SimDefaults)
    :param seed: Ensemble seed
    :param attitude: Override of the transmitter attitude rotation
    :return: Complex values, shape (L, K)

    """

    ensemble = SimDefaults.ensemble if ensemble is None else ensemble

    if ensemble < 1:
        raise InvalidHyperparameterError(f"Ensemble size must be at least 1, got {ensemble}.")

    spacing_tx, spacing_rx = _spacing_arrays(spacings, rx_spacings)
    steps: np.ndarray = lag_indices(trace, lags)
    correlator: _Correlator = _Correlator(trace, trace.index_of(t), path_id, frequency, attitude)
    still: np.ndarray = ~np.any(spacing_tx, axis=1) & ~np.any(spacing_rx, axis=1)
    rows: List[np.ndarray] = []

    for step in steps:
        if estimator is Estimator.CLOSED_FORM:
            row: np.ndarray = correlator.closed_form(int(step), spacing_tx, spacing_rx)
        else:
            row = correlator.ensemble(int(step), spacing_tx, spacing_rx, ensemble, seed)

        if step == 0:
            row = np.where(still, 1.0 + 0.0j, row)

        rows.append(row)

    # Transmit separation, or the receive one where the transmit elements coincide
    tx_norm, rx_norm = np.linalg.norm(spacing_tx, axis=1), np.linalg.norm(spacing_rx, axis=1)
    separations: np.ndarray = np.where(tx_norm > 0, tx_norm, rx_norm) / trace.wavelength
    return StcfResult(
        lags=steps * trace.step,
        spacings=spacing_tx,
        separations_wavelengths=separations,
        values=np.array(rows)
    )


def acf(
        trace: ChannelTrace,
        t: float,
        lags: Sequence[float],
        path_id: Optional[int] = None,
        frequency: float = 0.0,
        estimator: Estimator = Estimator.ENSEMBLE,
        ensemble: Optional[int] = None,
        seed: int = 0
) -> CorrelationResult:
    """
    Temporal autocorrelation: the zero-spacing slice of the space-time correlation

    """

    surface: StcfResult = stcf(trace, t, lags, None, None, path_id, frequency, estimator, ensemble, seed)
    return CorrelationResult(lags=surface.lags, values=surface.values[:, 0])


def ccf(
        trace: ChannelTrace,
        t: float,
        spacings: np.ndarray,
        rx_spacings: Optional[np.ndarray] = None,
        path_id: Optional[int] = None,
        frequency: float = 0.0,
        estimator: Estimator = Estimator.ENSEMBLE,
        ensemble: Optional[int] = None,
        seed: int = 0,
        attitude: Optional[Mat3] = None
) -> CcfResult:
    """
    Spatial cross-correlation: the real part of the zero-lag slice

    :param trace: The simulated channel
    :param t: Reference time (s)
    :param spacings: Transmit element displacements, shape (K, 3) (m)
    :param rx_spacings: Receive element displacements (default zeros)
    :param path_id: Restrict to one path
    :param frequency: Frequency f (Hz)
    :param estimator: Ensemble or closed form
    :param ensemble: Ensemble size
    :param seed: Ensemble seed
    :param attitude: Override of the transmitter attitude rotation (e.g. identity)
    :return: Real CCF per spacing and the separation in wavelengths

    """

    surface: StcfResult = stcf(trace, t, [0.0], spacings, rx_spacings, path_id, frequency, estimator, ensemble, seed, attitude)
    return CcfResult(
        spacings=surface.spacings,
        separations_wavelengths=surface.separations_wavelengths,
        values=surface.values[0].real
    )


def acf_vs_distance(
        trace: ChannelTrace,
        t: float,
        distances: Sequence[float],
        path_id: Optional[int] = None,
        estimator: Estimator = Estimator.ENSEMBLE,
        ensemble: Optional[int] = None,
        seed: int = 0
) -> DistanceAcfResult:
    """
    Temporal ACF re-expressed against the distance the transmitter travels

    Distances are snapped to the nearest snapshot lag at the current transmitter speed.

    """

    index: int = trace.index_of(t)
    speed: float = float(np.linalg.norm(trace.snapshots[index].v_tx))

    if speed == 0.0:
        raise OutOfRangeError("The transmitter is at rest, so lags cannot be mapped to distances.")

    step: float = trace.step
    lags: np.ndarray = np.rint(np.asarray(distances, dtype=float) / speed / step) * step
    result: CorrelationResult = acf(trace, t, lags, path_id, 0.0, estimator, ensemble, seed)
    travelled: np.ndarray = result.lags * speed

    return DistanceAcfResult(
        distances=travelled,
        distances_wavelengths=travelled / trace.wavelength,
        values=result.values
    )


def lag_window(length: int) -> np.ndarray:
    """
    Autocorrelation of a Hann window, normalized to 1 at zero lag.

    Its transform is non-negative, so windowed spectra stay non-negative.

    :param length: Hann window length (samples)
    :return: Window over lags −(length−1) … length−1

    """

    hann: np.ndarray = signal.get_window("hann", length, fftbins=False)
    window: np.ndarray = np.correlate(hann, hann, mode="full")
    return window / window[length - 1]


def dpsd(
        trace: ChannelTrace,
        t: float,
        window_s: Optional[float] = None,
        fft_size: Optional[int] = None,
        path_id: Optional[int] = None
) -> DpsdResult:
    """
    Doppler power spectral density: Fourier transform of the lag-windowed, un-normalized ACF.

    The spectrum integrates to the zero-lag ACF (the received power).

    :param trace: The simulated channel
    :param t: Window centre (s)
    :param window_s: Half-width of the lag window (s) (default from SimDefaults)
    :param fft_size: Transform length (default from SimDefaults)
    :param path_id: Restrict to one path
    :return: Frequencies (Hz), spectrum (power/Hz), the Doppler bound and an aliasing flag

    """

    logger: logging.Logger = U2VChannelLogHandler.get_logger()
    window_s = SimDefaults.dpsd_window_s if window_s is None else window_s
    fft_size = SimDefaults.dpsd_fft_size if fft_size is None else fft_size
    step: float = trace.step
    length: int = int(round(window_s / step))

    if length < 2:
        raise InvalidHyperparameterError(f"A {window_s} s window spans fewer than 2 snapshots of {step} s.")

    if fft_size < 2 * length - 1:
        raise InvalidHyperparameterError(f"FFT size {fft_size} is shorter than the {2 * length - 1}-sample lag window.")

    correlator: _Correlator = _Correlator(trace, trace.index_of(t), path_id, 0.0, None)
    still: np.ndarray = np.zeros((1, 3))
    steps: np.ndarray = np.arange(-(length - 1), length)
    values: np.ndarray = np.array([correlator.closed_form(int(k), still, still, normalized=False)[0] for k in steps])

    spectrum_input: np.ndarray = np.zeros(fft_size, dtype=complex)
    spectrum_input[np.mod(steps, fft_size)] = values * lag_window(length)
    power: np.ndarray = np.abs(fft.fft(spectrum_input)) * step

    bound: float = max(
        doppler_bound(correlator.snapshot(int(k)).v_tx, correlator.snapshot(int(k)).v_rx, trace.carrier_hz)
        for k in (steps[0], 0, steps[-1])
    )
    aliasing: bool = 1.0 / step < 2.0 * bound

    if aliasing:
        logger.warning(f"Snapshot rate {1.0 / step:.6g} Hz is below twice the {bound:.6g} Hz Doppler bound; the DPSD aliases")

    return DpsdResult(
        frequencies=fft.fftshift(fft.fftfreq(fft_size, step)),
        power=fft.fftshift(power),
        doppler_bound=bound,
        aliasing_warning=aliasing
    )


__all__ = [
    "Estimator",
    "CorrelationResult",
    "CcfResult",
    "StcfResult",
    "DpsdResult",
    "DistanceAcfResult",
    "pdp",
    "lag_indices",
    "stcf",
    "acf",
    "ccf",
    "acf_vs_distance",
    "lag_window",
    "dpsd"
]
