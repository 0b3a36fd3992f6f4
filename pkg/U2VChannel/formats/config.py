from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from mashumaro import DataClassDictMixin
from mashumaro.exceptions import MissingField, InvalidFieldValue

from U2VChannel.channel.cir import Scenario, AntennaArray, time_grid
from U2VChannel.client.errors import ScenarioConfigError, InputError, GeometryError
from U2VChannel.client.settings import SimDefaults, SCHEMA_VERSION
from U2VChannel.data.synthetic_rt import GroundTruth
from U2VChannel.geometry.kinematics import Trajectory
from U2VChannel.geometry.scene import Scene, Scatterer, box_facets, ground_facets

"""Directory holding the bundled scenario documents"""
SCENARIO_DIR: str = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "resources", "scenarios")

Reason = InputError.ErrorReason


@dataclass()
class TimeConfig(DataClassDictMixin):
    stop: float
    step: float
    start: float = 0.0


@dataclass()
class TrajectoryConfig(DataClassDictMixin):
    """
    One of: timed waypoints [t, x, y, z], a polyline flown at constant speed, or a fixed position

    """

    waypoints: Optional[List[List[float]]] = None
    path: Optional[List[List[float]]] = None
    speed: Optional[float] = None
    start_time: float = 0.0
    position: Optional[List[float]] = None


@dataclass()
class TerminalConfig(DataClassDictMixin):
    trajectory: TrajectoryConfig
    attitude_deg: Optional[List[List[float]]] = None
    array: List[List[float]] = field(default_factory=lambda: [[0.0, 0.0, 0.0]])


@dataclass()
class GroundConfig(DataClassDictMixin):
    half_size: float = 1000.0
    height: float = 0.0
    reflective: bool = True


@dataclass()
class BoxConfig(DataClassDictMixin):
    min: List[float]
    max: List[float]
    reflective: bool = True
    name: str = ""


@dataclass()
class ScattererConfig(DataClassDictMixin):
    facets: List[List[List[float]]]
    centroid: Optional[List[float]] = None
    reflective: bool = True
    name: str = ""


@dataclass()
class SceneConfig(DataClassDictMixin):
    """
    Scatterers in path-id order: ground first, then boxes, then explicit scatterers

    """

    ground: Optional[GroundConfig] = None
    boxes: List[BoxConfig] = field(default_factory=list)
    scatterers: List[ScattererConfig] = field(default_factory=list)
    obstacles: List[List[List[float]]] = field(default_factory=list)


@dataclass()
class GridAxis(DataClassDictMixin):
    """
    Explicit values, or `count` evenly spaced values from start to stop

    """

    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    count: int = 1

    def points(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)

        return np.linspace(self.start, self.stop, self.count)


@dataclass()
class GridConfig(DataClassDictMixin):
    x: GridAxis
    y: GridAxis
    z: GridAxis

    def points(self) -> np.ndarray:
        """
        Cartesian product of the axes, x slowest

        """

        xs, ys, zs = np.meshgrid(self.x.points(), self.y.points(), self.z.points(), indexing="ij")
        return np.column_stack([xs.ravel(), ys.ravel(), zs.ravel()])


@dataclass()
class DatasetConfig(DataClassDictMixin):
    tx_grid: GridConfig
    rx_grid: GridConfig
    pairs: Optional[int] = None
    truth: GroundTruth = field(default_factory=GroundTruth)


@dataclass()
class ModelsConfig(DataClassDictMixin):
    bpnn_los: Optional[str] = None
    bpnn_nlos: Optional[str] = None
    gan_azimuth: Optional[str] = None
    gan_elevation: Optional[str] = None


@dataclass()
class ScenarioConfig(DataClassDictMixin):
    """
    A scenario document

    """

    schema_version: int
    carrier_hz: float
    time: TimeConfig
    tx: TerminalConfig
    rx: TerminalConfig
    name: str = ""
    rays_per_path: int = field(default_factory=lambda: SimDefaults.rays_per_path)
    seed: int = 0
    scene: SceneConfig = field(default_factory=SceneConfig)
    dataset: Optional[DatasetConfig] = None
    models: ModelsConfig = field(default_factory=ModelsConfig)


def _field_path(error: Exception) -> str:
    # Nested dataclass failures chain outward-in through __cause__
    names: List[str] = []

    while error is not None:
        if isinstance(error, (MissingField, InvalidFieldValue)):
            names.append(error.field_name)

        error = error.__cause__ or error.__context__

    return ".".join(names)


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioConfig:
    """
    Parse and validate a scenario document

    :param text: JSON document
    :param source: Where it came from, for messages
    :return: The validated config
    :raises ScenarioConfigError: With line/column for malformed JSON, or the dotted field path

    """

    try:
        document = json.loads(text)
    except json.JSONDecodeError as ex:
        raise ScenarioConfigError(Reason.MALFORMED_DOCUMENT, f"{source}: {ex.msg}", line=ex.lineno, column=ex.colno) from ex

    if not isinstance(document, dict):
        raise ScenarioConfigError(Reason.MALFORMED_DOCUMENT, f"{source}: the document must be an object", line=1, column=1)

    version = document.get("schema_version")

    if version is None:
        raise ScenarioConfigError(Reason.MISSING_FIELD, f"{source}: schema_version is required", field="schema_version")

    if version != SCHEMA_VERSION:
        raise ScenarioConfigError(Reason.SCHEMA_MISMATCH, f"{source}: unsupported schema_version {version!r}", field="schema_version")

    try:
        config: ScenarioConfig = ScenarioConfig.from_dict(document)
    except MissingField as ex:
        raise ScenarioConfigError(Reason.MISSING_FIELD, f"{source}: required field is missing", field=_field_path(ex)) from ex
    except InvalidFieldValue as ex:
        raise ScenarioConfigError(Reason.INVALID_VALUE, f"{source}: invalid value", field=_field_path(ex)) from ex
    except (TypeError, ValueError) as ex:
        raise ScenarioConfigError(Reason.INVALID_VALUE, f"{source}: {ex}") from ex

    validate_scenario(config)
    return config


def _invalid(field_path: str, message: str) -> ScenarioConfigError:
    return ScenarioConfigError(Reason.INVALID_VALUE, message, field=field_path)


def _validate_trajectory(prefix: str, trajectory: TrajectoryConfig) -> None:
    given: List[str] = [
        name for name, value in (("waypoints", trajectory.waypoints), ("path", trajectory.path), ("position", trajectory.position))
        if value is not None
    ]

    if len(given) != 1:
        raise _invalid(prefix, "exactly one of waypoints, path or position is required")

    if trajectory.waypoints is not None:
        rows: np.ndarray = np.asarray(trajectory.waypoints, dtype=float)

        if rows.ndim != 2 or rows.shape[1] != 4 or len(rows) < 1:
            raise _invalid(f"{prefix}.waypoints", "rows must be [t, x, y, z]")

        if np.any(np.diff(rows[:, 0]) <= 0):
            raise _invalid(f"{prefix}.waypoints", "waypoint times must be strictly increasing")

    if trajectory.path is not None:
        if np.asarray(trajectory.path, dtype=float).reshape(-1).size % 3 or len(trajectory.path) < 2:
            raise _invalid(f"{prefix}.path", "a path needs at least two [x, y, z] points")

        if trajectory.speed is None or trajectory.speed <= 0:
            raise _invalid(f"{prefix}.speed", "a path needs a positive speed")

    if trajectory.position is not None and len(trajectory.position) != 3:
        raise _invalid(f"{prefix}.position", "a position is [x, y, z]")


def _validate_terminal(prefix: str, terminal: TerminalConfig) -> None:
    _validate_trajectory(f"{prefix}.trajectory", terminal.trajectory)

    if terminal.attitude_deg is not None:
        rows: np.ndarray = np.asarray(terminal.attitude_deg, dtype=float)

        if rows.ndim != 2 or rows.shape[1] != 4:
            raise _invalid(f"{prefix}.attitude_deg", "rows must be [t, omega, phi, gamma]")

        if np.any(np.diff(rows[:, 0]) <= 0):
            raise _invalid(f"{prefix}.attitude_deg", "attitude times must be strictly increasing")

    offsets: np.ndarray = np.asarray(terminal.array, dtype=float)

    if offsets.ndim != 2 or offsets.shape[1] != 3 or len(offsets) < 1 or not np.all(np.isfinite(offsets)):
        raise _invalid(f"{prefix}.array", "element offsets must be finite [x, y, z] rows")


def validate_scenario(config: ScenarioConfig) -> None:
    """
    Semantic checks beyond the document shape

    :raises ScenarioConfigError: Naming the dotted path of the first bad field

    """

    if config.carrier_hz <= 0:
        raise _invalid("carrier_hz", "must be positive")

    if config.time.step <= 0:
        raise _invalid("time.step", "must be positive")

    if config.time.stop <= config.time.start:
        raise _invalid("time.stop", "must exceed time.start")

    if config.rays_per_path < 1:
        raise _invalid("rays_per_path", "must be at least 1")

    _validate_terminal("tx", config.tx)
    _validate_terminal("rx", config.rx)

    for idx, box in enumerate(config.scene.boxes):
        if len(box.min) != 3 or len(box.max) != 3 or not all(hi > lo for lo, hi in zip(box.min, box.max)):
            raise _invalid(f"scene.boxes.{idx}", "max must exceed min on every axis")

    if config.scene.ground is not None and config.scene.ground.half_size <= 0:
        raise _invalid("scene.ground.half_size", "must be positive")

    try:
        build_scene(config.scene).validate()
    except GeometryError as ex:
        raise _invalid("scene", str(ex)) from ex

    if config.dataset is not None:
        if config.dataset.pairs is not None and config.dataset.pairs < 1:
            raise _invalid("dataset.pairs", "must be at least 1")

        for name in ("tx_grid", "rx_grid"):
            grid: GridConfig = getattr(config.dataset, name)

            for axis_name in ("x", "y", "z"):
                axis: GridAxis = getattr(grid, axis_name)

                if axis.values is None and (axis.start is None or axis.stop is None or axis.count < 1):
                    raise _invalid(f"dataset.{name}.{axis_name}", "needs values, or start, stop and a positive count")

        try:
            config.dataset.truth.validate()
        except InputError as ex:
            raise _invalid("dataset.truth", str(ex)) from ex


def resolve_scenario_path(name_or_path: str) -> str:
    """
    A file path as given, or the bundled scenario of that name

    """

    if os.path.isfile(name_or_path):
        return name_or_path

    bundled: str = os.path.join(SCENARIO_DIR, f"{name_or_path}.json")
    return bundled if os.path.isfile(bundled) else name_or_path


def read_scenario(name_or_path: str) -> Tuple[ScenarioConfig, str]:
    """
    Load a scenario file (or bundled scenario name)

    :return: The config and the SHA-256 of the document bytes

    """

    path: str = resolve_scenario_path(name_or_path)

    if not os.path.isfile(path):
        raise ScenarioConfigError(Reason.MISSING_FILE, f"Scenario '{name_or_path}' does not exist.")

    with open(path, "rb") as file:
        raw: bytes = file.read()

    return parse_scenario(raw.decode("utf-8"), source=path), hashlib.sha256(raw).hexdigest()


def load_scenario(name_or_path: str) -> ScenarioConfig:
    return read_scenario(name_or_path)[0]


def build_scene(config: SceneConfig) -> Scene:
    """
    Expand ground, boxes and explicit scatterers into a Scene

    """

    scatterers: List[Scatterer] = []

    if config.ground is not None:
        facets: np.ndarray = ground_facets(config.ground.half_size, config.ground.height)
        scatterers.append(Scatterer(facets.mean(axis=(0, 1)), facets, config.ground.reflective, "ground"))

    for idx, box in enumerate(config.boxes):
        facets = box_facets(box.min, box.max)
        centroid: np.ndarray = (np.asarray(box.min, dtype=float) + np.asarray(box.max, dtype=float)) / 2
        scatterers.append(Scatterer(centroid, facets, box.reflective, box.name or f"box{idx}"))

    for idx, scatterer in enumerate(config.scatterers):
        facets = np.asarray(scatterer.facets, dtype=float).reshape(-1, 3, 3)
        centroid = facets.mean(axis=(0, 1)) if scatterer.centroid is None else scatterer.centroid
        scatterers.append(Scatterer(centroid, facets, scatterer.reflective, scatterer.name or f"scatterer{idx}"))

    return Scene(scatterers=scatterers, obstacles=np.asarray(config.obstacles, dtype=float).reshape(-1, 3, 3))


def build_trajectory(terminal: TerminalConfig) -> Trajectory:
    """
    Turn a terminal's trajectory and attitude (degrees) into a Trajectory (radians)

    """

    attitude: Optional[np.ndarray] = None

    if terminal.attitude_deg is not None:
        attitude = np.asarray(terminal.attitude_deg, dtype=float).copy()
        attitude[:, 1:] = np.deg2rad(attitude[:, 1:])

    config: TrajectoryConfig = terminal.trajectory

    if config.waypoints is not None:
        rows: np.ndarray = np.asarray(config.waypoints, dtype=float)
        return Trajectory(times=rows[:, 0], positions=rows[:, 1:], attitude=attitude)

    if config.path is not None:
        return Trajectory.from_path(config.path, config.speed, config.start_time, attitude)

    trajectory: Trajectory = Trajectory.stationary(config.position)
    trajectory.attitude = attitude
    return trajectory


def build_scenario(config: ScenarioConfig, snapshot_rate_hz: Optional[float] = None) -> Scenario:
    """
    Runtime scenario from a config

    :param config: The validated config
    :param snapshot_rate_hz: Override of the time step as a rate
    :return: The scenario with its time grid

    """

    step: float = config.time.step if snapshot_rate_hz is None else 1.0 / snapshot_rate_hz

    try:
        return Scenario(
            carrier_hz=config.carrier_hz,
            tx=build_trajectory(config.tx),
            rx=build_trajectory(config.rx),
            scene=build_scene(config.scene),
            tx_array=AntennaArray(np.asarray(config.tx.array, dtype=float)),
            rx_array=AntennaArray(np.asarray(config.rx.array, dtype=float)),
            times=time_grid(config.time.start, config.time.stop, step),
            rays_per_path=config.rays_per_path,
            seed=config.seed,
            name=config.name
        )
    except GeometryError as ex:
        raise ScenarioConfigError(Reason.INVALID_VALUE, str(ex)) from ex


__all__ = [
    "SCENARIO_DIR",
    "TimeConfig",
    "TrajectoryConfig",
    "TerminalConfig",
    "GroundConfig",
    "BoxConfig",
    "ScattererConfig",
    "SceneConfig",
    "GridAxis",
    "GridConfig",
    "DatasetConfig",
    "ModelsConfig",
    "ScenarioConfig",
    "parse_scenario",
    "validate_scenario",
    "resolve_scenario_path",
    "read_scenario",
    "load_scenario",
    "build_scene",
    "build_trajectory",
    "build_scenario"
]
