from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from U2VChannel.client.errors import GeometryError
from U2VChannel.client.settings import MIN_TRIANGLE_AREA, HIT_EPSILON

# Barycentric slack so that exact edge hits survive rounding
BARYCENTRIC_TOLERANCE: float = 1e-12

# Determinant below which a ray counts as parallel to the triangle plane
PARALLEL_TOLERANCE: float = 1e-12


class RayHit(NamedTuple):
    """
    A ray-triangle intersection: distance along the unit ray and barycentric coordinates

    """

    t: float
    u: float
    v: float


@dataclass()
class Scatterer:
    """
    A scattering object made of triangular facets

    """

    centroid: np.ndarray
    facets: np.ndarray
    reflective: bool = True
    name: str = ""

    def __post_init__(self):
        self.centroid = np.asarray(self.centroid, dtype=float).reshape(3)
        self.facets = np.asarray(self.facets, dtype=float).reshape(-1, 3, 3)


@dataclass()
class Scene:
    """
    Scatterers that can reflect or block, plus obstacle triangles that only block

    """

    scatterers: List[Scatterer] = field(default_factory=list)
    obstacles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3)))

    def __post_init__(self):
        self.obstacles = np.asarray(self.obstacles, dtype=float).reshape(-1, 3, 3)
        self._blocking: Optional[np.ndarray] = None

    @classmethod
    def free_space(cls) -> Scene:
        return cls()

    @property
    def blocking_triangles(self) -> np.ndarray:
        """
        Every triangle that can occlude a path segment

        :return: Array of shape (T, 3, 3)

        """

        if self._blocking is None:
            parts: List[np.ndarray] = [s.facets for s in self.scatterers] + [self.obstacles]
            self._blocking = np.concatenate(parts, axis=0) if parts else np.zeros((0, 3, 3))

        return self._blocking

    def validate(self) -> None:
        """
        Reject degenerate triangles

        :raises GeometryError: If a facet or obstacle has (near) zero area

        """

        for idx, scatterer in enumerate(self.scatterers):
            bad: np.ndarray = np.flatnonzero(triangle_areas(scatterer.facets) <= MIN_TRIANGLE_AREA)

            if len(bad):
                raise GeometryError(f"Scatterer {idx} has a degenerate facet at index {int(bad[0])}.")

        bad = np.flatnonzero(triangle_areas(self.obstacles) <= MIN_TRIANGLE_AREA)

        if len(bad):
            raise GeometryError(f"Obstacle triangle {int(bad[0])} is degenerate.")


def triangle_areas(triangles: np.ndarray) -> np.ndarray:
    triangles = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
    return 0.5 * np.linalg.norm(np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0]), axis=1)


def box_facets(lower: Sequence[float], upper: Sequence[float], floor: bool = False) -> np.ndarray:
    """
    Triangulate an axis-aligned box: four walls and a roof, optionally a floor

    Facet normals point outwards.

    :param lower: Minimum corner (m)
    :param upper: Maximum corner (m)
    :param floor: Also emit the two floor triangles
    :return: Array of shape (10, 3, 3), or (12, 3, 3) with a floor

    """

    (x0, y0, z0), (x1, y1, z1) = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)

    if not (x1 > x0 and y1 > y0 and z1 > z0):
        raise GeometryError("Box upper corner must exceed the lower corner on every axis.")

    def quad(a, b, c, d) -> List[List[Sequence[float]]]:
        return [[a, b, c], [a, c, d]]

    faces: List[List[Sequence[float]]] = []
    faces += quad((x0, y0, z0), (x1, y0, z0), (x1, y0, z1), (x0, y0, z1))  # y = y0
    faces += quad((x1, y0, z0), (x1, y1, z0), (x1, y1, z1), (x1, y0, z1))  # x = x1
    faces += quad((x1, y1, z0), (x0, y1, z0), (x0, y1, z1), (x1, y1, z1))  # y = y1
    faces += quad((x0, y1, z0), (x0, y0, z0), (x0, y0, z1), (x0, y1, z1))  # x = x0
    faces += quad((x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1))  # roof

    if floor:
        faces += quad((x0, y0, z0), (x0, y1, z0), (x1, y1, z0), (x1, y0, z0))

    return np.asarray(faces, dtype=float)


def ground_facets(half_size: float, height: float = 0.0) -> np.ndarray:
    """
    Two triangles covering a square ground plane centred at the origin, normal +z

    :param half_size: Half the side length (m)
    :param height: Plane height (m)
    :return: Array of shape (2, 3, 3)

    """

    s, h = float(half_size), float(height)
    return np.array([
        [(-s, -s, h), (s, -s, h), (s, s, h)],
        [(-s, -s, h), (s, s, h), (-s, s, h)]
    ])


def ray_triangles_intersect(origin: np.ndarray, direction: np.ndarray, triangles: np.ndarray):
    """
    Vectorised Möller–Trumbore test of one ray against many triangles

    :param origin: Ray origin (m)
    :param direction: Ray direction (any non-zero length; t is measured in its units)
    :param triangles: Array of shape (T, 3, 3)
    :return: (t, u, v, hit) arrays of shape (T,)

    """

    triangles = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
    v0: np.ndarray = triangles[:, 0]
    edge1: np.ndarray = triangles[:, 1] - v0
    edge2: np.ndarray = triangles[:, 2] - v0

    h: np.ndarray = np.cross(direction, edge2)
    det: np.ndarray = np.einsum("ij,ij->i", edge1, h)
    parallel: np.ndarray = np.abs(det) < PARALLEL_TOLERANCE
    inv_det: np.ndarray = 1.0 / np.where(parallel, 1.0, det)

    s: np.ndarray = origin - v0
    u: np.ndarray = inv_det * np.einsum("ij,ij->i", s, h)
    q: np.ndarray = np.cross(s, edge1)
    v: np.ndarray = inv_det * (q @ direction)
    t: np.ndarray = inv_det * np.einsum("ij,ij->i", edge2, q)

    inside: np.ndarray = (
            (u >= -BARYCENTRIC_TOLERANCE)
            & (v >= -BARYCENTRIC_TOLERANCE)
            & (u + v <= 1.0 + BARYCENTRIC_TOLERANCE)
    )

    return t, u, v, inside & ~parallel


def ray_triangle_intersect(origin: Sequence[float], direction: Sequence[float], triangle: np.ndarray) -> Optional[RayHit]:
    """
    Möller–Trumbore intersection of a ray with one triangle

    Boundary hits (u = 0, v = 0, u + v = 1) count as intersections.

    :param origin: Ray origin (m)
    :param direction: Ray direction, normalised internally so t is in metres
    :param triangle: Three vertices, shape (3, 3)
    :return: The hit, or None for a miss

    """

    direction = np.asarray(direction, dtype=float)
    length: float = float(np.linalg.norm(direction))

    if length == 0.0:
        raise GeometryError("Ray direction must be non-zero.")

    t, u, v, hit = ray_triangles_intersect(np.asarray(origin, dtype=float), direction / length, np.asarray(triangle)[None])

    if not hit[0] or t[0] <= HIT_EPSILON:
        return None

    return RayHit(t=float(t[0]), u=float(u[0]), v=float(v[0]))


def segment_blocked(start: np.ndarray, end: np.ndarray, triangles: np.ndarray, epsilon: float = HIT_EPSILON) -> bool:
    """
    Whether any triangle cuts the open segment start → end

    Hits within epsilon metres of either endpoint are ignored, so a bounce point lying on
    its own facet does not block its legs.

    :param start: Segment start (m)
    :param end: Segment end (m)
    :param triangles: Array of shape (T, 3, 3)
    :param epsilon: Endpoint exclusion (m)
    :return: True if the segment is occluded

    """

    if len(triangles) == 0:
        return False

    delta: np.ndarray = np.asarray(end, dtype=float) - np.asarray(start, dtype=float)
    length: float = float(np.linalg.norm(delta))

    if length <= 2 * epsilon:
        return False

    t, _, _, hit = ray_triangles_intersect(np.asarray(start, dtype=float), delta / length, triangles)
    return bool(np.any(hit & (t > epsilon) & (t < length - epsilon)))


__all__ = [
    "RayHit",
    "Scatterer",
    "Scene",
    "triangle_areas",
    "box_facets",
    "ground_facets",
    "ray_triangles_intersect",
    "ray_triangle_intersect",
    "segment_blocked"
]
