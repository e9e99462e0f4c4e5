"""Planar support functions as truncated Fourier series.

A convex body in the plane is encoded by its support function

    p(theta) = a0 + sum_{k=1}^{N} a_k cos(k theta) + b_k sin(k theta),

sampled and differentiated term by term.  The flat coefficient layout used
throughout the package is ``[a0, a_1..a_N, b_1..b_N]`` (length ``2N + 1``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "FourierSupport2D",
    "eval_2d",
    "boundary_point_2d",
    "radius_of_curvature_2d",
]


@dataclass(frozen=True)
class FourierSupport2D:
    """Truncated Fourier coefficients of a planar support function."""

    a0: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
            raise InvalidArgument("cosine/sine coefficient vectors must be 1-d and equal length")
        if a.size < 1:
            raise InvalidArgument("truncation order N must be >= 1")
        if not (np.isfinite(self.a0) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidArgument("coefficients must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a0", float(self.a0))

    @property
    def degree(self) -> int:
        return self.a.size

    @property
    def n_coeffs(self) -> int:
        return 2 * self.degree + 1

    def coeffs(self) -> np.ndarray:
        """Flat coefficient vector [a0, a_1..a_N, b_1..b_N]."""
        return np.concatenate(([self.a0], self.a, self.b))

    @classmethod
    def from_coeffs(cls, coeffs, degree: int | None = None) -> "FourierSupport2D":
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1 or c.size < 3 or c.size % 2 == 0:
            raise InvalidArgument("flat coefficient vector must have odd length >= 3")
        n = (c.size - 1) // 2
        if degree is not None and degree != n:
            raise InvalidArgument(f"coefficient vector of length {c.size} does not match N={degree}")
        return cls(c[0], c[1 : n + 1], c[n + 1 :])

    @classmethod
    def disk(cls, radius: float, degree: int = 1) -> "FourierSupport2D":
        return cls(radius, np.zeros(degree), np.zeros(degree))


def eval_2d(p: FourierSupport2D, theta, order: int = 0):
    """Evaluate p, p' or p'' at angle(s) theta.

    ``order`` selects the function itself (0) or its first/second
    term-wise derivative (1, 2).  Total in theta; 2-pi periodic.
    """
    if order not in (0, 1, 2):
        raise InvalidArgument("order must be 0, 1 or 2")
    th = np.asarray(theta, dtype=float)
    scalar = th.ndim == 0
    th = np.atleast_1d(th)
    k = np.arange(1, p.degree + 1, dtype=float)
    kt = th[:, None] * k[None, :]
    c, s = np.cos(kt), np.sin(kt)
    if order == 0:
        out = p.a0 + c @ p.a + s @ p.b
    elif order == 1:
        out = (-s * k) @ p.a + (c * k) @ p.b
    else:
        out = -(c * k**2) @ p.a - (s * k**2) @ p.b
    return float(out[0]) if scalar else out


def boundary_point_2d(p: FourierSupport2D, theta):
    """Boundary point with outward normal (cos theta, sin theta).

    Returns (x, y) = (p cos - p' sin, p sin + p' cos); array thetas give an
    (M, 2) array of points.
    """
    th = np.asarray(theta, dtype=float)
    scalar = th.ndim == 0
    th = np.atleast_1d(th)
    val = eval_2d(p, th, 0)
    dp = eval_2d(p, th, 1)
    c, s = np.cos(th), np.sin(th)
    pts = np.stack([val * c - dp * s, val * s + dp * c], axis=-1)
    return pts[0] if scalar else pts


def radius_of_curvature_2d(p: FourierSupport2D, theta):
    """p + p'': boundary speed and radius of curvature; >= 0 iff p is convex."""
    return eval_2d(p, theta, 0) + eval_2d(p, theta, 2)
