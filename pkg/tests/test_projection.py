"""Drawing projections of the belief simplex."""

from math import sqrt

import numpy as np
import pytest

from qcdi import ValidationFailure, project2, project3
from qcdi.projection import project2_many, project3_many, project_for


def test_triangle_corners():
    assert project2([1.0, 0.0, 0.0]) == (0.0, 0.0)
    x, y = project2([0.0, 1.0, 0.0])
    assert abs(x - 2.0 / sqrt(3.0)) <= 1e-15 and y == 0.0
    x, y = project2([0.0, 0.0, 1.0])
    assert abs(x - 1.0 / sqrt(3.0)) <= 1e-15 and y == 1.0


def test_triangle_projection_is_affine():
    rng = np.random.default_rng(71)
    a = rng.dirichlet(np.ones(3), size=50)
    b = rng.dirichlet(np.ones(3), size=50)
    t = rng.random(50)[:, None]
    blend = project2_many(t * a + (1.0 - t) * b)
    pieces = t * project2_many(a) + (1.0 - t) * project2_many(b)
    assert np.max(np.abs(blend - pieces)) <= 1e-12


def test_triangle_projection_inverts():
    rng = np.random.default_rng(72)
    pts = rng.dirichlet(np.ones(3), size=100)
    xy = project2_many(pts)
    pi2 = xy[:, 1]
    pi1 = (sqrt(3.0) * xy[:, 0] - pi2) / 2.0
    assert np.max(np.abs(pi1 - pts[:, 1])) <= 1e-12
    assert np.max(np.abs(pi2 - pts[:, 2])) <= 1e-12


def test_tetrahedron_corners_are_unit_separated():
    corners = np.eye(4)[1:]  # the three post-change corners
    xyz = project3_many(corners)
    for i in range(3):
        for j in range(i + 1, 3):
            d = np.linalg.norm(xyz[i] - xyz[j])
            assert abs(d - 1.0) <= 1e-12
        # each post-change corner is unit distance from the no-change corner
        assert abs(np.linalg.norm(xyz[i]) - 1.0) <= 1e-12
    assert project3([1.0, 0.0, 0.0, 0.0]) == (0.0, 0.0, 0.0)


def test_tetrahedron_projection_is_affine():
    rng = np.random.default_rng(73)
    a = rng.dirichlet(np.ones(4), size=50)
    b = rng.dirichlet(np.ones(4), size=50)
    t = rng.random(50)[:, None]
    blend = project3_many(t * a + (1.0 - t) * b)
    pieces = t * project3_many(a) + (1.0 - t) * project3_many(b)
    assert np.max(np.abs(blend - pieces)) <= 1e-12


def test_projector_lookup():
    assert project_for(2) is project2_many
    assert project_for(3) is project3_many
    assert project_for(1) is None
    assert project_for(4) is None


def test_width_validation():
    with pytest.raises(ValidationFailure):
        project2_many([[0.5, 0.5]])
    with pytest.raises(ValidationFailure):
        project3_many([[0.5, 0.25, 0.25]])
