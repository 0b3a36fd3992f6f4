import numpy as np
import pytest

from U2VChannel.client.errors import GeometryError
from U2VChannel.client.settings import SPEED_OF_LIGHT
from U2VChannel.geometry.kinematics import wrap_angle
from U2VChannel.geometry.paths import LOS_PATH_ID, PathKind, enumerate_paths, scatterer_path_id, direction_angles
from U2VChannel.geometry.scene import (
    Scene, Scatterer, box_facets, ground_facets, ray_triangle_intersect, segment_blocked, triangle_areas
)

TRIANGLE = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def box(lower, upper, reflective=True) -> Scatterer:
    return Scatterer((np.asarray(lower) + np.asarray(upper)) / 2, box_facets(lower, upper), reflective)


def test_box_facets_point_outwards():
    lower, upper = np.array([0.0, 0.0, 0.0]), np.array([2.0, 4.0, 6.0])
    facets = box_facets(lower, upper)
    centre = (lower + upper) / 2

    assert facets.shape == (10, 3, 3)
    assert box_facets(lower, upper, floor=True).shape == (12, 3, 3)

    for facet in box_facets(lower, upper, floor=True):
        normal = np.cross(facet[1] - facet[0], facet[2] - facet[0])
        assert np.dot(normal, facet.mean(axis=0) - centre) > 0


def test_box_needs_positive_extent():
    with pytest.raises(GeometryError):
        box_facets([0, 0, 0], [1, 0, 1])


def test_ground_facets_face_up():
    facets = ground_facets(100.0, 2.0)

    assert facets.shape == (2, 3, 3)
    assert np.allclose(facets[:, :, 2], 2.0)

    for facet in facets:
        assert np.cross(facet[1] - facet[0], facet[2] - facet[0])[2] > 0


def test_ray_hits_triangle_interior():
    hit = ray_triangle_intersect([0.25, 0.25, 1.0], [0.0, 0.0, -5.0], TRIANGLE)

    assert hit is not None
    assert hit.t == pytest.approx(1.0)
    assert hit.u == pytest.approx(0.25)
    assert hit.v == pytest.approx(0.25)


@pytest.mark.parametrize("origin", [[0.5, 0.0, 1.0], [0.0, 0.5, 1.0], [0.5, 0.5, 1.0], [0.0, 0.0, 1.0]])
def test_edge_and_vertex_hits_count(origin):
    assert ray_triangle_intersect(origin, [0.0, 0.0, -1.0], TRIANGLE) is not None


def test_ray_misses():
    assert ray_triangle_intersect([1.0, 1.0, 1.0], [0.0, 0.0, -1.0], TRIANGLE) is None
    assert ray_triangle_intersect([0.25, 0.25, 1.0], [0.0, 0.0, 1.0], TRIANGLE) is None
    assert ray_triangle_intersect([0.25, 0.25, 1.0], [1.0, 0.0, 0.0], TRIANGLE) is None


def test_zero_direction_raises():
    with pytest.raises(GeometryError):
        ray_triangle_intersect([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], TRIANGLE)


def test_segment_blocked():
    triangles = TRIANGLE[None]

    assert segment_blocked(np.array([0.2, 0.2, 1.0]), np.array([0.2, 0.2, -1.0]), triangles)
    assert not segment_blocked(np.array([0.2, 0.2, 1.0]), np.array([0.2, 0.2, 0.5]), triangles)
    assert not segment_blocked(np.array([0.2, 0.2, 1.0]), np.array([0.2, 0.2, -1.0]), np.zeros((0, 3, 3)))

    # A segment ending on the facet is not blocked by it
    assert not segment_blocked(np.array([0.2, 0.2, 1.0]), np.array([0.2, 0.2, 0.0]), triangles)


def test_degenerate_triangle_is_rejected():
    flat = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]])

    assert triangle_areas(flat)[0] == 0.0

    with pytest.raises(GeometryError):
        Scene(scatterers=[Scatterer(np.zeros(3), flat)]).validate()

    with pytest.raises(GeometryError):
        Scene(obstacles=flat).validate()


def test_free_space_has_only_los():
    paths = enumerate_paths(Scene.free_space(), np.array([0.0, 0.0, 0.0]), np.array([100.0, 0.0, 0.0]))

    assert len(paths) == 1
    los = paths[0]
    assert los.path_id == LOS_PATH_ID
    assert los.kind is PathKind.LOS
    assert los.delay == pytest.approx(100.0 / SPEED_OF_LIGHT)
    assert los.angles.aaod == pytest.approx(0.0)
    assert los.angles.aaoa == pytest.approx(np.pi)
    assert los.length == pytest.approx(100.0)


def test_ground_reflection_matches_image_distance():
    scene = Scene(scatterers=[Scatterer(np.zeros(3), ground_facets(1000.0))])
    l_tx, l_rx = np.array([0.0, 0.0, 10.0]), np.array([100.0, 0.0, 20.0])
    paths = enumerate_paths(scene, l_tx, l_rx)

    assert [p.path_id for p in paths] == [LOS_PATH_ID, scatterer_path_id(0)]
    ground = paths[1]
    assert ground.kind is PathKind.NLOS
    assert ground.delay == pytest.approx(np.hypot(100.0, 30.0) / SPEED_OF_LIGHT)
    assert np.allclose(ground.bounce_point, [100.0 / 3.0, 0.0, 0.0])
    assert ground.angles.eaod < 0
    assert ground.angles.eaoa < 0


def test_path_ids_follow_scatterer_order():
    scene = Scene(scatterers=[
        Scatterer(np.zeros(3), ground_facets(1000.0)),
        box([40.0, 20.0, 0.0], [60.0, 30.0, 15.0])
    ])

    paths = enumerate_paths(scene, np.array([0.0, 0.0, 10.0]), np.array([100.0, 0.0, 10.0]))

    assert [p.path_id for p in paths] == [1, 2, 3]
    assert paths[2].delay > paths[0].delay


def test_swapping_terminals_swaps_angle_roles():
    scene = Scene(scatterers=[
        Scatterer(np.zeros(3), ground_facets(1000.0)),
        box([40.0, 15.0, 0.0], [70.0, 25.0, 25.0]),
        box([45.0, -3.0, 0.0], [50.0, 3.0, 20.0], reflective=False)
    ])
    l_tx, l_rx = np.array([0.0, 0.0, 30.0]), np.array([100.0, 0.0, 2.0])

    forward = enumerate_paths(scene, l_tx, l_rx, include_invalid=True)
    backward = enumerate_paths(scene, l_rx, l_tx, include_invalid=True)

    assert [p.path_id for p in forward] == [p.path_id for p in backward]
    assert any(p.valid for p in forward) and not all(p.valid for p in forward)

    for there, back in zip(forward, backward):
        assert there.valid == back.valid
        assert there.delay == pytest.approx(back.delay, rel=1e-12)
        assert wrap_angle(there.angles.aaod - back.angles.aaoa) == pytest.approx(0.0, abs=1e-9)
        assert there.angles.eaod == pytest.approx(back.angles.eaoa, abs=1e-9)
        assert wrap_angle(there.angles.aaoa - back.angles.aaod) == pytest.approx(0.0, abs=1e-9)
        assert there.angles.eaoa == pytest.approx(back.angles.eaod, abs=1e-9)


def test_non_reflective_box_blocks_but_never_reflects():
    scene = Scene(scatterers=[box([40.0, -10.0, 0.0], [45.0, 10.0, 20.0], reflective=False)])
    l_tx, l_rx = np.array([0.0, 0.0, 5.0]), np.array([100.0, 0.0, 5.0])

    assert enumerate_paths(scene, l_tx, l_rx) == []

    blocked = enumerate_paths(scene, l_tx, l_rx, include_invalid=True)
    assert len(blocked) == 1
    assert not blocked[0].valid


def test_coincident_terminals_raise():
    with pytest.raises(GeometryError):
        enumerate_paths(Scene(), np.ones(3), np.ones(3))


def test_direction_angles_of_zero_vector_raise():
    with pytest.raises(GeometryError):
        direction_angles(np.zeros(3))
