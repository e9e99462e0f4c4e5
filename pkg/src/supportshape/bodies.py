"""Reference bodies and containers used by the problem catalog and tests."""

from __future__ import annotations

import numpy as np

from .constraints import PolytopeContainer
from .errors import InvalidArgument
from .fourier2d import FourierSupport2D

__all__ = [
    "reuleaux_triangle",
    "reuleaux_polygon",
    "square_container",
    "tetrahedron_container",
    "cube_container",
    "dodecahedron_container",
]


def reuleaux_polygon(sides: int, width: float, degree: int) -> FourierSupport2D:
    """Truncated Fourier coefficients of the Reuleaux polygon with n sides.

    The curvature radius of the width-w Reuleaux n-gon (n odd) is a duty-1/2
    square wave of period 2 pi / n; dividing its Fourier series by 1 - k^2
    gives the support function:  p = w/2 + sum over odd q of
    2 w sin(n q theta) / (pi q (1 - (n q)^2)).
    """
    if sides < 3 or sides % 2 == 0:
        raise InvalidArgument("Reuleaux polygons need an odd number of sides >= 3")
    a = np.zeros(degree)
    b = np.zeros(degree)
    q = 1
    while sides * q <= degree:
        k = sides * q
        b[k - 1] = 2.0 * width / (np.pi * q * (1.0 - k**2))
        q += 2
    return FourierSupport2D(width / 2.0, a, b)


def reuleaux_triangle(width: float, degree: int) -> FourierSupport2D:
    return reuleaux_polygon(3, width, degree)


def square_container(side: float = 1.0) -> PolytopeContainer:
    """Axis-aligned square of the given side, centered at the origin."""
    normals = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return PolytopeContainer(normals, np.full(4, side / 2.0))


def tetrahedron_container(inradius: float = 0.5) -> PolytopeContainer:
    """Regular tetrahedron with the given inradius, centered at the origin."""
    normals = -np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return PolytopeContainer(normals, np.full(4, inradius))


def cube_container(inradius: float = 0.5) -> PolytopeContainer:
    normals = np.vstack([np.eye(3), -np.eye(3)])
    return PolytopeContainer(normals, np.full(6, inradius))


def dodecahedron_container(inradius: float = 0.5) -> PolytopeContainer:
    """Regular dodecahedron: face normals are the 12 icosahedral vertex axes."""
    g = (1.0 + np.sqrt(5.0)) / 2.0
    base = []
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            base.append([0.0, s1, s2 * g])
            base.append([s1, s2 * g, 0.0])
            base.append([s2 * g, 0.0, s1])
    return PolytopeContainer(np.array(base), np.full(12, inradius))
