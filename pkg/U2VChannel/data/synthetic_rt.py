from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from mashumaro import DataClassDictMixin

from U2VChannel.client.errors import InvalidHyperparameterError, GeometryError
from U2VChannel.client.logger import U2VChannelLogHandler
from U2VChannel.geometry.kinematics import wrap_angle
from U2VChannel.geometry.paths import enumerate_paths, PathGeometry, PathKind
from U2VChannel.geometry.scene import Scene


@dataclass()
class PowerLaw(DataClassDictMixin):
    """
    Linear-scale power law P(τ) = amplitude · exp(−τ / scale) + floor, with log-normal jitter

    """

    amplitude: float
    scale_s: float
    floor: float = 0.0
    jitter_db: float = 0.0

    def power(self, delay_s: float) -> float:
        return self.amplitude * float(np.exp(-delay_s / self.scale_s)) + self.floor

    def validate(self, name: str) -> None:
        if self.amplitude <= 0 or self.scale_s <= 0 or self.floor < 0 or self.jitter_db < 0:
            raise InvalidHyperparameterError(f"Power law '{name}' needs positive amplitude and scale and non-negative floor and jitter.")


@dataclass()
class OffsetMixture(DataClassDictMixin):
    """
    Mixture of Laplacian components for intra-path angle offsets (rad)

    """

    weights: List[float]
    locations: List[float]
    scales: List[float]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        weights: np.ndarray = np.asarray(self.weights, dtype=float)
        components: np.ndarray = rng.choice(len(weights), size=n, p=weights / weights.sum())
        return rng.laplace(np.asarray(self.locations)[components], np.asarray(self.scales)[components])

    def validate(self, name: str) -> None:
        if not (len(self.weights) == len(self.locations) == len(self.scales) >= 1):
            raise InvalidHyperparameterError(f"Offset mixture '{name}' needs matching, non-empty component lists.")

        if any(w <= 0 for w in self.weights) or any(s <= 0 for s in self.scales):
            raise InvalidHyperparameterError(f"Offset mixture '{name}' needs positive weights and scales.")


def _symmetric_pair(offset: float, scale: float) -> OffsetMixture:
    return OffsetMixture(weights=[0.5, 0.5], locations=[-offset, offset], scales=[scale, scale])


@dataclass()
class GroundTruth(DataClassDictMixin):
    """
    Known laws the synthetic dataset is drawn from

    """

    los_power: PowerLaw = field(default_factory=lambda: PowerLaw(amplitude=1e-6, scale_s=0.5e-6, floor=1e-11, jitter_db=1.0))
    nlos_power: PowerLaw = field(default_factory=lambda: PowerLaw(amplitude=1e-7, scale_s=1e-6, floor=1e-13, jitter_db=2.0))
    azimuth_offsets: OffsetMixture = field(default_factory=lambda: _symmetric_pair(0.1, 0.03))
    elevation_offsets: OffsetMixture = field(default_factory=lambda: _symmetric_pair(0.05, 0.015))
    delay_jitter_s: float = 5e-9

    def validate(self) -> None:
        self.los_power.validate("los_power")
        self.nlos_power.validate("nlos_power")
        self.azimuth_offsets.validate("azimuth_offsets")
        self.elevation_offsets.validate("elevation_offsets")

        if self.delay_jitter_s <= 0:
            raise InvalidHyperparameterError("Delay jitter scale must be positive.")

    def power_law(self, kind: PathKind) -> PowerLaw:
        return self.los_power if kind is PathKind.LOS else self.nlos_power


@dataclass(frozen=True)
class RayRecord:
    """
    One ray of the synthetic corpus; powers in dB, delays in s, angles in rad

    """

    channel_id: int
    path_id: int
    delay: float
    power: float
    aaoa: float
    eaoa: float
    aaod: float
    eaod: float
    los: bool


@dataclass()
class Dataset:
    """
    Generated rays plus the bookkeeping of which pairs produced them

    """

    records: List[RayRecord] = field(default_factory=list)
    pair_indices: List[int] = field(default_factory=list)
    skipped_pairs: int = 0


def select_pairs(tx_count: int, rx_count: int, pairs: Optional[int], seed: int) -> np.ndarray:
    """
    Indices into the Tx × Rx product; all of them, or a seeded subset in ascending order

    :param tx_count: Number of Tx grid points
    :param rx_count: Number of Rx grid points
    :param pairs: How many pairs to keep (None for all)
    :param seed: Subset seed
    :return: Ascending pair indices; pair i is (tx i // rx_count, rx i % rx_count)

    """

    total: int = tx_count * rx_count

    if pairs is None or pairs >= total:
        return np.arange(total)

    if pairs < 1:
        raise InvalidHyperparameterError(f"Pair count must be at least 1, got {pairs}.")

    return np.sort(np.random.default_rng([seed, total]).choice(total, size=pairs, replace=False))


def _offset_ray(path: PathGeometry, d_aaoa: float, d_eaoa: float, d_aaod: float, d_eaod: float) -> Tuple[float, float, float, float]:
    half_pi: float = np.pi / 2
    return (
        wrap_angle(path.angles.aaoa + d_aaoa),
        float(np.clip(path.angles.eaoa + d_eaoa, -half_pi, half_pi)),
        wrap_angle(path.angles.aaod + d_aaod),
        float(np.clip(path.angles.eaod + d_eaod, -half_pi, half_pi))
    )


def pair_records(
        channel_id: int,
        paths: List[PathGeometry],
        truth: GroundTruth,
        rays_per_path: int,
        rng: np.random.Generator
) -> List[RayRecord]:
    """
    Rays of one Tx–Rx pair: one LoS ray, rays_per_path rays per NLoS path

    NLoS ray powers split the path power equally, so summing a path's rays in linear scale
    recovers the drawn path power.

    """

    records: List[RayRecord] = []

    for path in paths:
        law: PowerLaw = truth.power_law(path.kind)
        power_db: float = 10.0 * np.log10(law.power(path.delay)) + rng.normal(0.0, law.jitter_db)

        if path.kind is PathKind.LOS:
            records.append(RayRecord(
                channel_id, path.path_id, path.delay, float(power_db),
                float(path.angles.aaoa), float(path.angles.eaoa), float(path.angles.aaod), float(path.angles.eaod), True
            ))
            continue

        ray_power: float = float(power_db - 10.0 * np.log10(rays_per_path))
        delays: np.ndarray = path.delay + rng.uniform(0.0, truth.delay_jitter_s, size=rays_per_path)
        offsets: np.ndarray = np.column_stack([
            truth.azimuth_offsets.sample(rays_per_path, rng),
            truth.elevation_offsets.sample(rays_per_path, rng),
            truth.azimuth_offsets.sample(rays_per_path, rng),
            truth.elevation_offsets.sample(rays_per_path, rng)
        ])

        for delay, offset in zip(delays, offsets):
            records.append(RayRecord(channel_id, path.path_id, float(delay), ray_power, *_offset_ray(path, *offset), False))

    return records


def generate_dataset(
        scene: Scene,
        tx_grid: np.ndarray,
        rx_grid: np.ndarray,
        truth: GroundTruth,
        rays_per_path: int,
        seed: int,
        pairs: Optional[int] = None
) -> Dataset:
    """
    Labelled ray corpus over Tx–Rx pairs drawn from known laws

    Each pair draws from its own stream seeded by (seed, pair index).

    :param scene: Scatterer scene
    :param tx_grid: Transmitter positions, shape (T, 3)
    :param rx_grid: Receiver positions, shape (R, 3)
    :param truth: Ground-truth laws
    :param rays_per_path: Rays per NLoS path (M ≥ 1)
    :param seed: Master seed
    :param pairs: Optional number of pairs to draw from the product
    :return: The dataset

    """

    logger: logging.Logger = U2VChannelLogHandler.get_logger()
    tx_grid = np.asarray(tx_grid, dtype=float).reshape(-1, 3)
    rx_grid = np.asarray(rx_grid, dtype=float).reshape(-1, 3)

    if len(tx_grid) == 0 or len(rx_grid) == 0:
        raise InvalidHyperparameterError("Transmitter and receiver grids must be non-empty.")

    if rays_per_path < 1:
        raise InvalidHyperparameterError(f"Rays per path must be at least 1, got {rays_per_path}.")

    truth.validate()
    dataset: Dataset = Dataset()

    for pair_index in select_pairs(len(tx_grid), len(rx_grid), pairs, seed):
        tx, rx = tx_grid[pair_index // len(rx_grid)], rx_grid[pair_index % len(rx_grid)]

        try:
            paths: List[PathGeometry] = enumerate_paths(scene, tx, rx)
        except GeometryError:
            paths = []

        if not paths:
            dataset.skipped_pairs += 1
            continue

        rng: np.random.Generator = np.random.default_rng([seed, int(pair_index)])
        dataset.records += pair_records(int(pair_index), paths, truth, rays_per_path, rng)
        dataset.pair_indices.append(int(pair_index))

    logger.info(f"Generated {len(dataset.records)} rays over {len(dataset.pair_indices)} pairs ({dataset.skipped_pairs} skipped)")
    return dataset


__all__ = [
    "PowerLaw",
    "OffsetMixture",
    "GroundTruth",
    "RayRecord",
    "Dataset",
    "select_pairs",
    "pair_records",
    "generate_dataset"
]
