from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from U2VChannel.client.errors import GeometryError
from U2VChannel.client.settings import SPEED_OF_LIGHT, HIT_EPSILON
from U2VChannel.geometry.kinematics import AngleSet
from U2VChannel.geometry.scene import Scene, Scatterer, segment_blocked, BARYCENTRIC_TOLERANCE

LOS_PATH_ID: int = 1


class PathKind(enum.Enum):
    """
    Propagation mechanism of a path

    """

    LOS = "LoS"
    NLOS = "NLoS"


@dataclass(frozen=True)
class PathGeometry:
    """
    Deterministic geometry of one path at one snapshot

    """

    path_id: int
    kind: PathKind
    delay: float
    angles: AngleSet
    bounce_point: Optional[np.ndarray] = None
    valid: bool = True

    @property
    def length(self) -> float:
        return self.delay * SPEED_OF_LIGHT


def scatterer_path_id(scatterer_index: int) -> int:
    """
    Stable path id of the single-bounce path off a scatterer

    :param scatterer_index: 0-based index in the scene
    :return: The path id (LoS is 1, scatterers start at 2)

    """

    return scatterer_index + 2


def direction_angles(direction: np.ndarray) -> Tuple[float, float]:
    """
    Four-quadrant azimuth and signed elevation of a direction

    :param direction: Any non-zero vector
    :return: (azimuth in (−π, π], elevation in [−π/2, π/2])

    """

    direction = np.asarray(direction, dtype=float)
    norm: float = float(np.linalg.norm(direction))

    if norm == 0.0:
        raise GeometryError("Cannot take the angles of a zero vector.")

    azimuth: float = float(np.arctan2(direction[1], direction[0]))

    # atan2 returns −π for (−x, −0.0); keep the half-open range
    if azimuth == -np.pi:
        azimuth = np.pi

    return azimuth, float(np.arcsin(np.clip(direction[2] / norm, -1.0, 1.0)))


def path_angles(d_tx: np.ndarray, d_rx: np.ndarray) -> AngleSet:
    """
    Mean path angles from the departure and arrival distance vectors

    :param d_tx: Vector from the transmitter towards its first interaction
    :param d_rx: Vector from the receiver towards its last interaction
    :return: The angle set

    """

    aaod, eaod = direction_angles(d_tx)
    aaoa, eaoa = direction_angles(d_rx)
    return AngleSet(aaod=aaod, eaod=eaod, aaoa=aaoa, eaoa=eaoa)


def _bounce_candidates(facets: np.ndarray, l_tx: np.ndarray, l_rx: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Image-method bounce points on every facet plane

    :return: (bounce points (F, 3), path lengths (F,), qualifying mask (F,))

    """

    v0: np.ndarray = facets[:, 0]
    edge1: np.ndarray = facets[:, 1] - v0
    edge2: np.ndarray = facets[:, 2] - v0

    normals: np.ndarray = np.cross(edge1, edge2)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    dist_tx: np.ndarray = np.einsum("ij,ij->i", l_tx - v0, normals)
    dist_rx: np.ndarray = np.einsum("ij,ij->i", l_rx - v0, normals)
    same_side: np.ndarray = (dist_tx * dist_rx > 0) & (np.abs(dist_tx) > HIT_EPSILON) & (np.abs(dist_rx) > HIT_EPSILON)

    image: np.ndarray = l_tx - 2.0 * dist_tx[:, None] * normals
    fraction: np.ndarray = np.where(same_side, dist_tx / np.where(same_side, dist_tx + dist_rx, 1.0), 0.0)
    bounce: np.ndarray = image + fraction[:, None] * (l_rx - image)
    lengths: np.ndarray = np.linalg.norm(l_rx - image, axis=1)

    # Barycentric coordinates of the bounce point in its facet
    w: np.ndarray = bounce - v0
    d00 = np.einsum("ij,ij->i", edge1, edge1)
    d01 = np.einsum("ij,ij->i", edge1, edge2)
    d11 = np.einsum("ij,ij->i", edge2, edge2)
    d20 = np.einsum("ij,ij->i", w, edge1)
    d21 = np.einsum("ij,ij->i", w, edge2)
    denominator = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / denominator
    u = (d00 * d21 - d01 * d20) / denominator

    inside: np.ndarray = (u >= -BARYCENTRIC_TOLERANCE) & (v >= -BARYCENTRIC_TOLERANCE) & (u + v <= 1.0 + BARYCENTRIC_TOLERANCE)
    return bounce, lengths, same_side & inside


def single_bounce_path(
        scene: Scene,
        scatterer_index: int,
        l_tx: np.ndarray,
        l_rx: np.ndarray
) -> Optional[PathGeometry]:
    """
    Candidate single-bounce path off one scatterer

    :param scene: The scene (for occlusion)
    :param scatterer_index: Which scatterer
    :param l_tx: Transmitter position (m)
    :param l_rx: Receiver position (m)
    :return: The path (possibly invalid when a leg is blocked), or None without a bounce point

    """

    scatterer: Scatterer = scene.scatterers[scatterer_index]

    if not scatterer.reflective or len(scatterer.facets) == 0:
        return None

    bounce, lengths, qualifying = _bounce_candidates(scatterer.facets, l_tx, l_rx)

    if not np.any(qualifying):
        return None

    # Shortest total path; argmin keeps the lowest facet index on ties
    best: int = int(np.argmin(np.where(qualifying, lengths, np.inf)))
    point: np.ndarray = bounce[best]

    blockers: np.ndarray = scene.blocking_triangles
    valid: bool = not (segment_blocked(l_tx, point, blockers) or segment_blocked(point, l_rx, blockers))

    return PathGeometry(
        path_id=scatterer_path_id(scatterer_index),
        kind=PathKind.NLOS,
        delay=float(lengths[best]) / SPEED_OF_LIGHT,
        angles=path_angles(point - l_tx, point - l_rx),
        bounce_point=point,
        valid=valid
    )


def enumerate_paths(
        scene: Scene,
        l_tx: np.ndarray,
        l_rx: np.ndarray,
        include_invalid: bool = False
) -> List[PathGeometry]:
    """
    LoS and single-bounce NLoS paths between two terminals

    :param scene: The scatterer scene
    :param l_tx: Transmitter position (m)
    :param l_rx: Receiver position (m)
    :param include_invalid: Also return blocked candidates (flagged valid=False)
    :return: Paths ordered by path id, LoS first

    """

    l_tx, l_rx = np.asarray(l_tx, dtype=float), np.asarray(l_rx, dtype=float)
    separation: np.ndarray = l_rx - l_tx

    if not np.any(separation):
        raise GeometryError("Transmitter and receiver positions coincide.")

    los: PathGeometry = PathGeometry(
        path_id=LOS_PATH_ID,
        kind=PathKind.LOS,
        delay=float(np.linalg.norm(separation)) / SPEED_OF_LIGHT,
        angles=path_angles(separation, -separation),
        valid=not segment_blocked(l_tx, l_rx, scene.blocking_triangles)
    )

    candidates: List[PathGeometry] = [los]

    for idx in range(len(scene.scatterers)):
        path: Optional[PathGeometry] = single_bounce_path(scene, idx, l_tx, l_rx)

        if path is not None:
            candidates.append(path)

    return [path for path in candidates if include_invalid or path.valid]


__all__ = [
    "LOS_PATH_ID",
    "PathKind",
    "PathGeometry",
    "scatterer_path_id",
    "direction_angles",
    "path_angles",
    "single_bounce_path",
    "enumerate_paths"
]
