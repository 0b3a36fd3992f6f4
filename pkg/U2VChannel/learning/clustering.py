from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, List, Dict

import numpy as np
from pyee.base import EventEmitter

from U2VChannel.client.errors import InvalidHyperparameterError, NumericFailureError
from U2VChannel.client.logger import U2VChannelLogHandler
from U2VChannel.client.settings import SimDefaults
from U2VChannel.events import emit_event, ElbowPointEvent
from U2VChannel.geometry.kinematics import wrap_angle

# Column order of a ray point: delay (µs), azimuth (rad), elevation (rad)
DELAY, AZIMUTH, ELEVATION = 0, 1, 2


@dataclass()
class ClusterResult:
    """
    Partition of rays into clusters

    """

    assignments: np.ndarray
    centroids: np.ndarray
    sse_per_cluster: np.ndarray
    weights: np.ndarray
    initial_indices: np.ndarray
    sse_history: List[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def nk(self) -> int:
        return len(self.centroids)

    @property
    def sse(self) -> float:
        return float(np.sum(self.sse_per_cluster))


@dataclass()
class ElbowResult:
    """
    Outcome of the elbow search over cluster counts

    """

    nk: int
    satisfied: bool
    normalized_sse: Dict[int, float]
    slopes: Dict[int, float]
    result: ClusterResult


def ray_points(delays_us: Sequence[float], azimuths: Sequence[float], elevations: Sequence[float]) -> np.ndarray:
    """
    Stack ray coordinates into an (N, 3) array of (τ µs, α rad, β rad)

    """

    points: np.ndarray = np.column_stack([delays_us, azimuths, elevations]).astype(float)

    if not np.all(np.isfinite(points)):
        raise InvalidHyperparameterError("Ray points must be finite.")

    return points


def _differences(points: np.ndarray, reference: np.ndarray) -> np.ndarray:
    # Broadcasted differences with the azimuth wrapped into (−π, π]
    delta: np.ndarray = points - reference
    delta[..., AZIMUTH] = wrap_angle(delta[..., AZIMUTH])
    return delta


def ray_distance(c_i: Sequence[float], c_j: Sequence[float], weights: Sequence[float]) -> float:
    """
    Weighted Euclidean distance between two ray points

    :param c_i: First point (τ, α, β)
    :param c_j: Second point (τ, α, β)
    :param weights: Non-negative per-coordinate weights, not all zero
    :return: The distance

    """

    weights = _check_weights(weights)
    delta: np.ndarray = _differences(np.asarray(c_i, dtype=float)[None], np.asarray(c_j, dtype=float))[0]
    return float(np.sqrt(np.sum((weights * delta) ** 2)))


def _check_weights(weights: Sequence[float]) -> np.ndarray:
    weights = np.asarray(weights, dtype=float).reshape(3)

    if np.any(weights < 0) or not np.any(weights > 0):
        raise InvalidHyperparameterError(f"Distance weights must be non-negative and not all zero, got {weights.tolist()}.")

    return weights


def default_weights(points: np.ndarray) -> np.ndarray:
    """
    Inverse standard deviation per coordinate, zero for constant coordinates

    :param points: Ray points, shape (N, 3)
    :return: Weights (ones if every coordinate is constant)

    """

    spread: np.ndarray = np.std(points, axis=0)
    weights: np.ndarray = np.where(spread > 0, 1.0 / np.where(spread > 0, spread, 1.0), 0.0)
    return weights if np.any(weights > 0) else np.ones(3)


def _squared_distances(points: np.ndarray, centroids: np.ndarray, weights: np.ndarray) -> np.ndarray:
    delta: np.ndarray = _differences(points[:, None, :], centroids[None, :, :])
    return np.sum((weights * delta) ** 2, axis=2)


def _centroid(members: np.ndarray) -> np.ndarray:
    # Mean on azimuths unwrapped at the cut of the circle that minimises their spread, then wrapped back
    centroid: np.ndarray = members.mean(axis=0)
    azimuths: np.ndarray = np.sort(wrap_angle(members[:, AZIMUTH]))
    count: int = len(azimuths)

    # Cut k moves the k smallest azimuths up by 2π
    shifts: np.ndarray = np.arange(count)
    below: np.ndarray = np.concatenate([[0.0], np.cumsum(azimuths)[:-1]])
    means: np.ndarray = (azimuths.sum() + 2.0 * np.pi * shifts) / count
    squares: np.ndarray = np.sum(azimuths ** 2) + 4.0 * np.pi * below + 4.0 * np.pi ** 2 * shifts
    best: int = int(np.argmin(squares - count * means ** 2))

    centroid[AZIMUTH] = wrap_angle(means[best])
    return centroid


def _seed_indices(points: np.ndarray, nk: int, weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # k-means++ seeding: distinct points drawn with probability proportional to squared distance
    chosen: List[int] = [int(rng.integers(len(points)))]
    nearest: np.ndarray = _squared_distances(points, points[chosen], weights)[:, 0]

    while len(chosen) < nk:
        weights_left: np.ndarray = nearest.copy()
        weights_left[chosen] = 0.0
        total: float = float(weights_left.sum())

        if total > 0:
            candidate: int = int(rng.choice(len(points), p=weights_left / total))
        else:
            remaining: np.ndarray = np.setdiff1d(np.arange(len(points)), chosen)
            candidate = int(rng.choice(remaining))

        chosen.append(candidate)
        nearest = np.minimum(nearest, _squared_distances(points, points[[candidate]], weights)[:, 0])

    return np.asarray(chosen, dtype=int)


def _lloyd(
        points: np.ndarray,
        initial_indices: np.ndarray,
        weights: np.ndarray,
        max_iterations: int
) -> ClusterResult:
    centroids: np.ndarray = points[initial_indices].copy()
    history: List[float] = []
    iterations: int = 0

    while True:
        iterations += 1
        distances: np.ndarray = _squared_distances(points, centroids, weights)
        assignments: np.ndarray = np.argmin(distances, axis=1)

        # Re-seed empty clusters at the point farthest from its centroid
        for cluster in range(len(centroids)):
            if not np.any(assignments == cluster):
                own: np.ndarray = distances[np.arange(len(points)), assignments]
                farthest: int = int(np.argmax(own))
                assignments[farthest] = cluster
                centroids[cluster] = points[farthest]
                distances = _squared_distances(points, centroids, weights)

        updated: np.ndarray = np.array([_centroid(points[assignments == k]) for k in range(len(centroids))])
        own_distances: np.ndarray = _squared_distances(points, updated, weights)[np.arange(len(points)), assignments]
        sse: float = float(np.sum(own_distances))

        if history and sse > history[-1] * (1.0 + 1e-9) + 1e-12:
            raise NumericFailureError(f"K-means SSE rose from {history[-1]:.17g} to {sse:.17g} at iteration {iterations}.")

        history.append(sse)
        converged: bool = np.array_equal(updated, centroids)
        centroids = updated

        if converged or iterations >= max_iterations:
            break

    # Centroids are the means of the assignments they were computed from
    per_cluster: np.ndarray = np.bincount(assignments, weights=own_distances, minlength=len(centroids))

    return ClusterResult(
        assignments=assignments,
        centroids=centroids,
        sse_per_cluster=per_cluster,
        weights=weights,
        initial_indices=np.asarray(initial_indices, dtype=int),
        sse_history=history,
        iterations=iterations
    )


def kmeans(
        points: np.ndarray,
        nk: int,
        seed: int,
        weights: Optional[Sequence[float]] = None,
        restarts: Optional[int] = None,
        initial_indices: Optional[Sequence[int]] = None,
        max_iterations: Optional[int] = None
) -> ClusterResult:
    """
    Lloyd's K-means under the weighted ray distance

    :param points: Ray points, shape (N, 3)
    :param nk: Number of clusters, 1 ≤ nk ≤ N
    :param seed: Seed of the initial centroid choice
    :param weights: Distance weights (default: inverse standard deviations)
    :param restarts: Independent seeded restarts, the lowest SSE wins (default 10)
    :param initial_indices: Explicit initial centroid rows (disables restarts)
    :param max_iterations: Safety cap on Lloyd iterations
    :return: The best partition

    """

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    restarts = restarts or SimDefaults.kmeans_restarts

    if not 1 <= nk <= len(points):
        raise InvalidHyperparameterError(f"Cluster count must lie in [1, {len(points)}], got {nk}.")

    if restarts < 1:
        raise InvalidHyperparameterError(f"Restart count must be at least 1, got {restarts}.")

    weights = _check_weights(weights) if weights is not None else default_weights(points)
    max_iterations = max_iterations or SimDefaults.kmeans_max_iterations

    if initial_indices is not None:
        initial: np.ndarray = np.asarray(initial_indices, dtype=int)

        if len(initial) != nk or len(np.unique(initial)) != nk:
            raise InvalidHyperparameterError(f"Expected {nk} distinct initial indices.")

        return _lloyd(points, initial, weights, max_iterations)

    best: Optional[ClusterResult] = None

    for restart in range(restarts):
        rng: np.random.Generator = np.random.default_rng([seed, restart])
        candidate: ClusterResult = _lloyd(points, _seed_indices(points, nk, weights, rng), weights, max_iterations)

        if best is None or candidate.sse < best.sse:
            best = candidate

    return best


def elbow_select(
        points: np.ndarray,
        nk_range: Sequence[int],
        sse_threshold: Optional[float] = None,
        slope_threshold: Optional[float] = None,
        seed: int = 0,
        weights: Optional[Sequence[float]] = None,
        restarts: Optional[int] = None,
        emitter: Optional[EventEmitter] = None
) -> ElbowResult:
    """
    Smallest cluster count whose normalised SSE and forward SSE slope both fall below their thresholds

    SSE values are normalised by the single-cluster SSE. The slope at Nk is SSE(Nk) − SSE(Nk+1);
    the last count of the range uses the backward difference.

    :param points: Ray points, shape (N, 3)
    :param nk_range: Ascending candidate counts
    :param sse_threshold: Normalised SSE bound (default 0.15)
    :param slope_threshold: Slope bound (default 0.005)
    :param seed: Seed shared by every count
    :param weights: Distance weights (default: inverse standard deviations)
    :param restarts: Restarts per count (default 10)
    :param emitter: Optional emitter for one event per evaluated count
    :return: The selection, flagged unsatisfied (and set to the range maximum) if no count qualifies

    """

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    candidates: List[int] = [int(k) for k in nk_range if 1 <= int(k) <= len(points)]

    if not candidates or list(nk_range) != sorted(nk_range):
        raise InvalidHyperparameterError("The cluster count range must be non-empty, ascending and at most the point count.")

    sse_threshold = SimDefaults.sse_threshold if sse_threshold is None else sse_threshold
    slope_threshold = SimDefaults.slope_threshold if slope_threshold is None else slope_threshold
    restarts = restarts or SimDefaults.kmeans_restarts
    weights = _check_weights(weights) if weights is not None else default_weights(points)

    baseline: float = kmeans(points, 1, seed, weights).sse
    results: Dict[int, ClusterResult] = {}
    normalized: Dict[int, float] = {}

    for nk in candidates:
        results[nk] = kmeans(points, nk, seed, weights, restarts=restarts)
        normalized[nk] = results[nk].sse / baseline if baseline > 0 else 0.0
        emit_event(emitter, ElbowPointEvent(nk, normalized[nk]))

    slopes: Dict[int, float] = {}

    for idx, nk in enumerate(candidates):
        if idx + 1 < len(candidates):
            slopes[nk] = abs(normalized[nk] - normalized[candidates[idx + 1]]) / (candidates[idx + 1] - nk)
        elif idx > 0:
            slopes[nk] = abs(normalized[candidates[idx - 1]] - normalized[nk]) / (nk - candidates[idx - 1])
        else:
            slopes[nk] = 0.0

    for nk in candidates:
        if normalized[nk] < sse_threshold and slopes[nk] < slope_threshold:
            return ElbowResult(nk=nk, satisfied=True, normalized_sse=normalized, slopes=slopes, result=results[nk])

    chosen: int = candidates[-1]
    U2VChannelLogHandler.get_logger().warning(f"No cluster count met the elbow thresholds; using {chosen}.")
    return ElbowResult(nk=chosen, satisfied=False, normalized_sse=normalized, slopes=slopes, result=results[chosen])


def extract_offsets(result: ClusterResult, points: np.ndarray) -> np.ndarray:
    """
    Per-ray azimuth and elevation relative to the ray's cluster centroid

    :param result: The partition
    :param points: The clustered ray points, shape (N, 3)
    :return: (Δα, Δβ) per ray, shape (N, 2), wrapped into (−π, π]

    """

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    centroids: np.ndarray = result.centroids[result.assignments]

    return np.column_stack([
        wrap_angle(points[:, AZIMUTH] - centroids[:, AZIMUTH]),
        wrap_angle(points[:, ELEVATION] - centroids[:, ELEVATION])
    ])


__all__ = [
    "ClusterResult",
    "ElbowResult",
    "ray_points",
    "ray_distance",
    "default_weights",
    "kmeans",
    "elbow_select",
    "extract_offsets"
]
