import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from U2VChannel.channel.cir import ChannelTrace, Scenario, CirSnapshot
from U2VChannel.channel.stats import (
    Estimator, pdp, acf, ccf, stcf, dpsd, CorrelationResult, CcfResult, StcfResult, DpsdResult
)
from U2VChannel.client.errors import InvalidHyperparameterError
from U2VChannel.client.route_base import CommandRoute
from U2VChannel.formats.config import read_scenario, build_scenario
from U2VChannel.formats.manifest import RunManifest
from U2VChannel.formats.tables import read_cir, trace_from_cir, write_columns


class Statistic(enum.Enum):
    PDP = "pdp"
    ACF = "acf"
    CCF = "ccf"
    DPSD = "dpsd"
    STCF = "stcf"


AXES: Dict[str, np.ndarray] = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0])
}


@dataclass()
class StatsOptions:
    """
    Knobs of the statistics command; None picks the library default

    """

    max_lag_steps: int = 10
    max_spacing_wavelengths: float = 2.0
    spacing_count: int = 41
    axis: str = "y"
    identity_attitude: bool = False
    path_id: Optional[int] = None
    frequency: float = 0.0
    estimator: Estimator = Estimator.ENSEMBLE
    ensemble: Optional[int] = None
    seed: int = 0
    window_s: Optional[float] = None
    fft_size: Optional[int] = None
    warnings: List[str] = field(default_factory=list)

    def spacings(self, wavelength: float) -> np.ndarray:
        if self.axis not in AXES:
            raise InvalidHyperparameterError(f"Spacing axis must be one of {sorted(AXES)}, got '{self.axis}'.")

        if self.spacing_count < 1 or self.max_spacing_wavelengths < 0:
            raise InvalidHyperparameterError("Spacing count must be positive and the maximum spacing non-negative.")

        steps: np.ndarray = np.linspace(0.0, self.max_spacing_wavelengths, self.spacing_count)
        return steps[:, None] * wavelength * AXES[self.axis][None, :]

    def lags(self, step: float) -> np.ndarray:
        if self.max_lag_steps < 0:
            raise InvalidHyperparameterError("The lag count must be non-negative.")

        return np.arange(self.max_lag_steps + 1) * step


class StatsRoute(CommandRoute):
    """
    Compute one statistic of a dumped CIR at a reference time

    """

    COMMAND: str = "stats"

    def __call__(
            self,
            cir: str,
            scenario: str,
            which: Statistic,
            t: float,
            out: str,
            options: Optional[StatsOptions] = None
    ) -> RunManifest:
        """
        Write the statistic as a CSV (abscissa first)

        :param cir: CIR CSV from simulate
        :param scenario: The scenario the CIR was simulated from (kinematics and arrays)
        :param which: Which statistic
        :param t: Reference time (s)
        :param out: Output CSV path
        :param options: Statistic options
        :return: The run manifest

        """

        started: float = self._start()
        options = options or StatsOptions()
        config, digest = read_scenario(scenario)
        runtime: Scenario = build_scenario(config)
        trace: ChannelTrace = trace_from_cir(read_cir(cir), runtime)
        manifest: RunManifest = RunManifest(command=self.COMMAND, config_hash=digest, seed=options.seed, outputs=[out])

        handler = {
            Statistic.PDP: self._pdp,
            Statistic.ACF: self._acf,
            Statistic.CCF: self._ccf,
            Statistic.DPSD: self._dpsd,
            Statistic.STCF: self._stcf
        }[which]

        manifest.metrics.update(handler(trace, t, out, options))
        return self._finish(manifest, started, out, options.warnings)

    @classmethod
    def _pdp(cls, trace: ChannelTrace, t: float, out: str, options: StatsOptions) -> Dict[str, float]:
        snapshot: CirSnapshot = trace.cir(0, 0)[trace.index_of(t)]
        impulses = pdp(snapshot)
        write_columns({"delay_s": [d for d, _ in impulses], "power_lin": [p for _, p in impulses]}, out)
        return {"paths": float(len(impulses)), "total_power_lin": float(sum(p for _, p in impulses))}

    @classmethod
    def _acf(cls, trace: ChannelTrace, t: float, out: str, options: StatsOptions) -> Dict[str, float]:
        result: CorrelationResult = acf(
            trace, t, options.lags(trace.step), options.path_id, options.frequency, options.estimator, options.ensemble, options.seed
        )

        write_columns({
            "lag_s": result.lags,
            "acf_real": result.values.real,
            "acf_imag": result.values.imag,
            "acf_abs": np.abs(result.values)
        }, out)

        return {"lags": float(len(result.lags))}

    @classmethod
    def _ccf(cls, trace: ChannelTrace, t: float, out: str, options: StatsOptions) -> Dict[str, float]:
        result: CcfResult = ccf(
            trace, t, options.spacings(trace.wavelength),
            path_id=options.path_id,
            frequency=options.frequency,
            estimator=options.estimator,
            ensemble=options.ensemble,
            seed=options.seed,
            attitude=np.eye(3) if options.identity_attitude else None
        )

        write_columns({"separation_wavelengths": result.separations_wavelengths, "ccf": result.values}, out)
        return {"spacings": float(len(result.values))}

    @classmethod
    def _dpsd(cls, trace: ChannelTrace, t: float, out: str, options: StatsOptions) -> Dict[str, float]:
        result: DpsdResult = dpsd(trace, t, options.window_s, options.fft_size, options.path_id)
        write_columns({"frequency_hz": result.frequencies, "power": result.power}, out)

        if result.aliasing_warning:
            options.warnings.append(
                f"aliasing: snapshot rate {1.0 / trace.step:.6g} Hz is below twice the Doppler bound {result.doppler_bound:.6g} Hz"
            )

        return {"doppler_bound_hz": result.doppler_bound, "aliasing_warning": float(result.aliasing_warning)}

    @classmethod
    def _stcf(cls, trace: ChannelTrace, t: float, out: str, options: StatsOptions) -> Dict[str, float]:
        result: StcfResult = stcf(
            trace, t, options.lags(trace.step), options.spacings(trace.wavelength),
            path_id=options.path_id,
            frequency=options.frequency,
            estimator=options.estimator,
            ensemble=options.ensemble,
            seed=options.seed,
            attitude=np.eye(3) if options.identity_attitude else None
        )

        lags, separations = np.meshgrid(result.lags, result.separations_wavelengths, indexing="ij")
        write_columns({
            "lag_s": lags.ravel(),
            "separation_wavelengths": separations.ravel(),
            "stcf_real": result.values.real.ravel(),
            "stcf_imag": result.values.imag.ravel()
        }, out)

        return {"lags": float(len(result.lags)), "spacings": float(len(result.separations_wavelengths))}
