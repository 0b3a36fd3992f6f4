from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pyee.base import EventEmitter

from U2VChannel.client.errors import UntrainedModelError, GeometryError, OutOfRangeError
from U2VChannel.client.logger import U2VChannelLogHandler
from U2VChannel.client.settings import SPEED_OF_LIGHT, SimDefaults
from U2VChannel.events import emit_event, PathBirthEvent, PathDeathEvent, SnapshotEvent
from U2VChannel.geometry.kinematics import (
    AngleSet, Trajectory, Mat3, position_at, doppler_frequency, rotation_phase, wrap_angle
)
from U2VChannel.geometry.paths import enumerate_paths, PathGeometry, PathKind
from U2VChannel.geometry.scene import Scene
from U2VChannel.learning.bpnn import forward
from U2VChannel.learning.gan import GanModel, sample_offsets
from U2VChannel.learning.mlp import MlpModel

PairIndex = Tuple[int, int]


@dataclass()
class AntennaArray:
    """
    Element offsets of a terminal's array in its body frame (m)

    """

    offsets: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=float).reshape(-1, 3)

        if len(self.offsets) == 0 or not np.all(np.isfinite(self.offsets)):
            raise GeometryError("An antenna array needs at least one finite element offset.")

    @property
    def size(self) -> int:
        return len(self.offsets)


@dataclass()
class Scenario:
    """
    Everything the channel builder needs besides the trained models

    """

    carrier_hz: float
    tx: Trajectory
    rx: Trajectory
    scene: Scene = field(default_factory=Scene)
    tx_array: AntennaArray = field(default_factory=AntennaArray)
    rx_array: AntennaArray = field(default_factory=AntennaArray)
    times: np.ndarray = field(default_factory=lambda: np.zeros(1))
    rays_per_path: int = field(default_factory=lambda: SimDefaults.rays_per_path)
    seed: int = 0
    name: str = ""

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


@dataclass()
class TracePath:
    """
    One path at one snapshot, independent of the antenna pair.

    `phases` holds ψ^I + ψ^D per ray; the element-dependent rotation phase is added per pair.

    """

    path_id: int
    instance: int
    kind: PathKind
    delay: float
    power_db: float
    angles: AngleSet
    phases: np.ndarray
    doppler: np.ndarray

    @property
    def power(self) -> float:
        return float(10.0 ** (self.power_db / 10.0))

    @property
    def ray_count(self) -> int:
        return len(self.phases)

    @property
    def key(self) -> Tuple[int, int]:
        return self.path_id, self.instance


@dataclass()
class TraceSnapshot:
    index: int
    t: float
    paths: List[TracePath]
    r_v_tx: Mat3
    r_p: Mat3
    r_v_rx: Mat3
    v_tx: np.ndarray
    v_rx: np.ndarray

    def path(self, path_id: int) -> Optional[TracePath]:
        return next((p for p in self.paths if p.path_id == path_id), None)


@dataclass()
class SnapshotPath:
    """
    A path of a CIR snapshot for one antenna pair

    """

    path_id: int
    kind: PathKind
    power: float
    delay: float
    phases: np.ndarray
    angles: AngleSet

    @property
    def rays(self) -> np.ndarray:
        """
        Ray phasors scaled by 1/√M, so their powers sum to one

        """

        return np.exp(1j * self.phases) / np.sqrt(len(self.phases))

    @property
    def coefficient(self) -> complex:
        return complex(np.sum(self.rays))


@dataclass()
class CirSnapshot:
    t: float
    pair: PairIndex
    paths: List[SnapshotPath] = field(default_factory=list)


@dataclass()
class ChannelTrace:
    """
    Simulated channel over a time grid, from which any antenna pair's CIR can be formed

    """

    carrier_hz: float
    tx_array: AntennaArray
    rx_array: AntennaArray
    snapshots: List[TraceSnapshot] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def step(self) -> float:
        times: np.ndarray = self.times

        if len(times) < 2:
            raise OutOfRangeError("A trace with a single snapshot has no time step.")

        return float(times[1] - times[0])

    def index_of(self, t: float) -> int:
        """
        Index of the snapshot at time t

        :raises OutOfRangeError: If no snapshot lies within half a step of t

        """

        times: np.ndarray = self.times
        idx: int = int(np.argmin(np.abs(times - t)))
        tolerance: float = 0.5 * (self.step if len(times) > 1 else 1.0)

        if abs(times[idx] - t) > tolerance * (1 + 1e-9):
            raise OutOfRangeError(f"Time {t} s is outside the simulated span [{times[0]}, {times[-1]}] s.")

        return idx

    def element_phase(
            self,
            snapshot: TraceSnapshot,
            path: TracePath,
            d_tx: np.ndarray,
            d_rx: np.ndarray,
            r_p: Optional[Mat3] = None
    ) -> np.ndarray:
        """
        Rotation phase of every ray of a path for given element offsets

        :param snapshot: The snapshot holding the rotation matrices
        :param path: The path
        :param d_tx: Transmit element offset (m, body frame)
        :param d_rx: Receive element offset (m, body frame)
        :param r_p: Attitude override (default: the simulated attitude)
        :return: ψ^R per ray

        """

        return rotation_phase(
            path.angles, snapshot.r_v_tx, snapshot.r_p if r_p is None else r_p, snapshot.r_v_rx, d_tx, d_rx, self.carrier_hz
        )

    def cir(self, q: int = 0, p: int = 0) -> List[CirSnapshot]:
        """
        CIR sequence of one antenna pair

        :param q: Receive element index
        :param p: Transmit element index
        :return: One snapshot per simulated time

        """

        d_tx, d_rx = self.tx_array.offsets[p], self.rx_array.offsets[q]
        sequence: List[CirSnapshot] = []

        for snapshot in self.snapshots:
            sequence.append(CirSnapshot(
                t=snapshot.t,
                pair=(q, p),
                paths=[
                    SnapshotPath(
                        path_id=path.path_id,
                        kind=path.kind,
                        power=path.power,
                        delay=path.delay,
                        phases=path.phases + self.element_phase(snapshot, path, d_tx, d_rx),
                        angles=path.angles
                    )
                    for path in snapshot.paths
                ]
            ))

        return sequence

    def pairs(self) -> List[PairIndex]:
        return [(q, p) for q in range(self.rx_array.size) for p in range(self.tx_array.size)]


@dataclass()
class _LivePath:
    # Lifetime state of a path instance between snapshots
    instance: int
    offsets: np.ndarray
    phases: np.ndarray
    doppler: np.ndarray
    t: float


def ray_angles(path: PathGeometry, offsets: np.ndarray) -> AngleSet:
    """
    Per-ray angles: the mean path angles shifted by (Δα_rx, Δβ_rx, Δα_tx, Δβ_tx) offsets

    """

    half_pi: float = np.pi / 2

    return AngleSet(
        aaoa=wrap_angle(path.angles.aaoa + offsets[:, 0]),
        eaoa=np.clip(path.angles.eaoa + offsets[:, 1], -half_pi, half_pi),
        aaod=wrap_angle(path.angles.aaod + offsets[:, 2]),
        eaod=np.clip(path.angles.eaod + offsets[:, 3], -half_pi, half_pi)
    )


def time_grid(start: float, stop: float, step: float) -> np.ndarray:
    """
    Uniform grid from start to stop inclusive (when stop falls on the grid)

    """

    count: int = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


class ChannelBuilder:
    """
    Assembles the time-variant channel from geometry, path-power networks and offset GANs

    """

    def __init__(
            self,
            scenario: Scenario,
            bpnn_los: MlpModel,
            bpnn_nlos: MlpModel,
            gan_azimuth: GanModel,
            gan_elevation: GanModel,
            emitter: Optional[EventEmitter] = None
    ):
        """
        Bind the scenario to its models

        :param scenario: The scenario
        :param bpnn_los: Delay-to-power network for LoS paths
        :param bpnn_nlos: Delay-to-power network for NLoS paths
        :param gan_azimuth: Azimuth offset GAN
        :param gan_elevation: Elevation offset GAN
        :param emitter: Optional emitter for birth, death and snapshot events

        """

        for name, trained in (
                ("LoS power network", bpnn_los.trained),
                ("NLoS power network", bpnn_nlos.trained),
                ("azimuth GAN", gan_azimuth.trained),
                ("elevation GAN", gan_elevation.trained)
        ):
            if not trained:
                raise UntrainedModelError(f"The {name} has not been trained.")

        self._scenario: Scenario = scenario
        self._power_models: Dict[PathKind, MlpModel] = {PathKind.LOS: bpnn_los, PathKind.NLOS: bpnn_nlos}
        self._gan_azimuth: GanModel = gan_azimuth
        self._gan_elevation: GanModel = gan_elevation
        self._emitter: Optional[EventEmitter] = emitter
        self._logger: logging.Logger = U2VChannelLogHandler.get_logger()

    def _birth(self, path: PathGeometry, seed: int, instance: int, t: float) -> _LivePath:
        rng: np.random.Generator = np.random.default_rng([seed, path.path_id, instance])

        if path.kind is PathKind.LOS:
            count: int = 1
            offsets: np.ndarray = np.zeros((1, 4))
        else:
            count = self._scenario.rays_per_path
            seeds: np.ndarray = rng.integers(0, 2 ** 62, size=2)
            azimuth: np.ndarray = sample_offsets(self._gan_azimuth, 2 * count, int(seeds[0]))
            elevation: np.ndarray = sample_offsets(self._gan_elevation, 2 * count, int(seeds[1]))
            offsets = np.column_stack([azimuth[:count], elevation[:count], azimuth[count:], elevation[count:]])

        phases: np.ndarray = rng.uniform(0.0, 2.0 * np.pi, size=count)
        emit_event(self._emitter, PathBirthEvent(t, path.path_id, path.kind.value, path.delay))
        return _LivePath(instance=instance, offsets=offsets, phases=phases, doppler=np.zeros(count), t=t)

    def build(self, times: Optional[np.ndarray] = None, seed: Optional[int] = None) -> ChannelTrace:
        """
        Simulate the channel over a time grid

        :param times: Ascending snapshot times (default: the scenario grid)
        :param seed: Seed of offsets and initial phases (default: the scenario seed)
        :return: The channel trace

        """

        scenario: Scenario = self._scenario
        times = np.asarray(scenario.times if times is None else times, dtype=float)
        seed = scenario.seed if seed is None else seed

        if np.any(np.diff(times) <= 0):
            raise OutOfRangeError("Snapshot times must be strictly ascending.")

        trace: ChannelTrace = ChannelTrace(scenario.carrier_hz, scenario.tx_array, scenario.rx_array)
        live: Dict[int, _LivePath] = {}
        births: Dict[int, int] = {}

        for index, t in enumerate(times):
            t = float(t)
            l_tx, l_rx = position_at(scenario.tx, t), position_at(scenario.rx, t)
            v_tx, v_rx = scenario.tx.velocity_at(t), scenario.rx.velocity_at(t)
            geometry: List[PathGeometry] = enumerate_paths(scenario.scene, l_tx, l_rx)

            for path_id in sorted(set(live) - {path.path_id for path in geometry}):
                del live[path_id]
                emit_event(self._emitter, PathDeathEvent(t, path_id))

            paths: List[TracePath] = []

            for path in geometry:
                state: Optional[_LivePath] = live.get(path.path_id)
                angles: AngleSet

                if state is None:
                    births[path.path_id] = births.get(path.path_id, -1) + 1
                    state = live[path.path_id] = self._birth(path, seed, births[path.path_id], t)
                    angles = ray_angles(path, state.offsets)
                    state.doppler = np.atleast_1d(doppler_frequency(angles, v_tx, v_rx, scenario.carrier_hz))
                else:
                    angles = ray_angles(path, state.offsets)
                    doppler: np.ndarray = np.atleast_1d(doppler_frequency(angles, v_tx, v_rx, scenario.carrier_hz))
                    state.phases = state.phases + np.pi * (state.doppler + doppler) * (t - state.t)
                    state.doppler = doppler

                state.t = t
                paths.append(TracePath(
                    path_id=path.path_id,
                    instance=state.instance,
                    kind=path.kind,
                    delay=path.delay,
                    power_db=float(forward(self._power_models[path.kind], path.delay * 1e6)[0]),
                    angles=angles,
                    phases=state.phases.copy(),
                    doppler=state.doppler.copy()
                ))

            trace.snapshots.append(TraceSnapshot(
                index=index,
                t=t,
                paths=paths,
                r_v_tx=scenario.tx.velocity_rotation_at(t),
                r_p=scenario.tx.rotation_at(t),
                r_v_rx=scenario.rx.velocity_rotation_at(t),
                v_tx=v_tx,
                v_rx=v_rx
            ))

            emit_event(self._emitter, SnapshotEvent(index, t, len(paths)))

        self._logger.info(f"Simulated {len(times)} snapshots of '{scenario.name or 'scenario'}'")
        return trace


def simulate_trace(
        scenario: Scenario,
        bpnn_los: MlpModel,
        bpnn_nlos: MlpModel,
        gan_azimuth: GanModel,
        gan_elevation: GanModel,
        times: Optional[np.ndarray] = None,
        seed: Optional[int] = None,
        emitter: Optional[EventEmitter] = None
) -> ChannelTrace:
    """
    Convenience wrapper around ChannelBuilder.build

    """

    return ChannelBuilder(scenario, bpnn_los, bpnn_nlos, gan_azimuth, gan_elevation, emitter).build(times, seed)


def build_cir(
        scenario: Scenario,
        bpnn_los: MlpModel,
        bpnn_nlos: MlpModel,
        gan_azimuth: GanModel,
        gan_elevation: GanModel,
        times: Optional[np.ndarray] = None,
        seed: Optional[int] = None,
        emitter: Optional[EventEmitter] = None
) -> Dict[PairIndex, List[CirSnapshot]]:
    """
    CIR sequences for every (receive element, transmit element) pair

    :return: Mapping (q, p) → one CirSnapshot per time

    """

    trace: ChannelTrace = simulate_trace(scenario, bpnn_los, bpnn_nlos, gan_azimuth, gan_elevation, times, seed, emitter)
    return {(q, p): trace.cir(q, p) for q, p in trace.pairs()}


def transfer_function(snapshot: CirSnapshot, f: float) -> complex:
    """
    Frequency response of a snapshot, Σ √P_n h̃_n e^{−j2πfτ_n}

    :param snapshot: The CIR snapshot
    :param f: Frequency (Hz)
    :return: The complex response (0 for an empty snapshot)

    """

    return complex(sum(
        np.sqrt(path.power) * path.coefficient * np.exp(-2j * np.pi * f * path.delay)
        for path in snapshot.paths
    ))


__all__ = [
    "PairIndex",
    "AntennaArray",
    "Scenario",
    "TracePath",
    "TraceSnapshot",
    "SnapshotPath",
    "CirSnapshot",
    "ChannelTrace",
    "ChannelBuilder",
    "ray_angles",
    "time_grid",
    "simulate_trace",
    "build_cir",
    "transfer_function"
]
