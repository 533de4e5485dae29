"""Fixed projections of belief simplices into drawing coordinates.

For two post-change regimes the simplex maps to an equilateral triangle:

    x = (2 / sqrt(3)) * pi_1 + (1 / sqrt(3)) * pi_2
    y = pi_2

For three regimes the simplex maps to a tetrahedron in 3-space:

    x = pi_1 + pi_2 / 2 + pi_3 / 2
    y = sqrt(3) * (pi_2 / 2 + pi_3 / 6)
    z = sqrt(6) * pi_3 / 3

Both drop the no-change coordinate; it is recoverable because the four
entries sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import ValidationFailure

_P2 = np.array([[2.0 / sqrt(3.0), 0.0], [1.0 / sqrt(3.0), 1.0]])
_P3 = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.5, sqrt(3.0) / 2.0, 0.0],
        [0.5, sqrt(3.0) / 6.0, sqrt(6.0) / 3.0],
    ]
)


@dataclass(frozen=True)
class ProjectedPoint:
    coords: tuple
    verdict: int
    label: int


def project2_many(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 3:
        raise ValidationFailure(
            [f"triangle projection needs beliefs with 3 entries, got {pts.shape[1]}"]
        )
    return pts[:, 1:] @ _P2


def project3_many(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 4:
        raise ValidationFailure(
            [f"tetrahedron projection needs beliefs with 4 entries, got {pts.shape[1]}"]
        )
    return pts[:, 1:] @ _P3


def project2(belief) -> tuple[float, float]:
    """Triangle coordinates of one belief with two post-change regimes."""

    x, y = project2_many(np.asarray(belief, dtype=np.float64)[None, :])[0]
    return float(x), float(y)


def project3(belief) -> tuple[float, float, float]:
    """Tetrahedron coordinates of one belief with three post-change regimes."""

    x, y, z = project3_many(np.asarray(belief, dtype=np.float64)[None, :])[0]
    return float(x), float(y), float(z)


def project_for(M: int):
    """The projection for ``M`` post-change regimes, or None if undrawable."""

    if M == 2:
        return project2_many
    if M == 3:
        return project3_many
    return None
