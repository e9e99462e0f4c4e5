"""Near-uniform point sets on the unit sphere.

Grids come from the Fibonacci (golden-angle) lattice, with the polar angle
clamped into ``[pole_margin, pi - pole_margin]`` so that quantities carrying
1/sin(psi) factors are never sampled at the poles.  Equal-weight averages
over such a grid times 4*pi serve as the package's spherical quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = ["SphereGrid", "make_sphere_grid", "sphere_normal"]

_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

# Angle convention throughout: n(phi, psi) = (sin phi sin psi, cos phi sin psi, cos psi),
# phi in [-pi, pi), psi in [0, pi).


def sphere_normal(phi, psi):
    """Unit vector(s) n(phi, psi); shape (..., 3)."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    sp = np.sin(psi)
    return np.stack(
        [np.sin(phi) * sp, np.cos(phi) * sp, np.cos(psi) * np.ones_like(phi)], axis=-1
    )


@dataclass(frozen=True)
class SphereGrid:
    """Immutable set of sphere directions with their angle pairs."""

    phi: np.ndarray
    psi: np.ndarray
    pole_margin: float
    points: np.ndarray = field(init=False)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if phi.shape != psi.shape or phi.ndim != 1:
            raise InvalidArgument("phi/psi must be equal-length 1-d arrays")
        if np.any(psi < self.pole_margin - 1e-15) or np.any(psi > np.pi - self.pole_margin + 1e-15):
            raise InvalidArgument("grid violates its own pole margin")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "points", sphere_normal(phi, psi))

    @property
    def size(self) -> int:
        return self.phi.size

    @property
    def weight(self) -> float:
        """Equal quadrature weight: integral over S^2 ~ weight * sum of samples."""
        return 4.0 * np.pi / self.size


def make_sphere_grid(M_d: int, pole_margin: float = 1e-2) -> SphereGrid:
    """Fibonacci lattice of ``M_d`` near-uniform directions.

    Deterministic for fixed inputs.  Points whose polar angle falls inside
    the pole band are clamped onto its edge (only happens for very large
    ``M_d`` at the default margin).
    """
    if M_d < 12:
        raise InvalidArgument("sphere grids need at least 12 points")
    if not 0.0 < pole_margin < np.pi / 4:
        raise InvalidArgument("pole_margin must lie in (0, pi/4)")
    i = np.arange(M_d, dtype=float) + 0.5
    psi = np.arccos(1.0 - 2.0 * i / M_d)
    psi = np.clip(psi, pole_margin, np.pi - pole_margin)
    phi = np.mod(2.0 * np.pi * i / _GOLDEN, 2.0 * np.pi)
    phi = np.where(phi >= np.pi, phi - 2.0 * np.pi, phi)
    return SphereGrid(phi=phi, psi=psi, pole_margin=pole_margin)
