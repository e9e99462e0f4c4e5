"""3D support functions as truncated real spherical-harmonic expansions.

The body is encoded by  p(phi, psi) = sum_{l,m} a_{l,m} Y_l^m(psi, phi)
with the orthonormal real harmonics of :mod:`supportshape.harmonics`.  The
boundary parametrization, its surface Jacobian (the Gaussian-curvature
positivity expression) and the pole-band evaluation rules live here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, PoleEvaluation
from .harmonics import DERIV_NAMES, HarmonicBasis, lm_index, n_harmonics
from .spheregrid import sphere_normal

__all__ = [
    "POLE_MARGIN",
    "SphericalSupport3D",
    "eval_sph",
    "boundary_point_3d",
    "surface_jacobian",
]

# Default width of the excluded band around psi in {0, pi}.  All constraint
# and quadrature grids stay outside it; 1/sin(psi) factors are safe there.
POLE_MARGIN = 1e-2


@dataclass(frozen=True)
class SphericalSupport3D:
    """Real spherical-harmonic coefficients of a 3D support function.

    ``coeffs[l*l + l + m]`` is the coefficient of Y_l^m; the vector has
    (degree+1)^2 entries.
    """

    coeffs: np.ndarray
    degree: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size != n_harmonics(self.degree):
            raise InvalidArgument(
                f"coefficient vector must have {(self.degree + 1) ** 2} entries for degree {self.degree}"
            )
        if not np.all(np.isfinite(c)):
            raise InvalidArgument("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_coeffs(self) -> int:
        return self.coeffs.size

    @classmethod
    def ball(cls, radius: float, degree: int = 1) -> "SphericalSupport3D":
        c = np.zeros(n_harmonics(degree))
        c[lm_index(0, 0)] = radius * np.sqrt(4.0 * np.pi)
        return cls(c, degree)

    def coefficient(self, l: int, m: int) -> float:
        return float(self.coeffs[lm_index(l, m)])


def _check_pole(psi: np.ndarray, margin: float, what: str):
    if np.any(psi < margin) or np.any(psi > np.pi - margin):
        raise PoleEvaluation(f"{what} requested within {margin} rad of a pole")


def eval_sph(p: SphericalSupport3D, phi, psi, deriv: str = "none"):
    """Evaluate the harmonic sum or one of its angular partial derivatives.

    Values are defined everywhere (poles included); any derivative is
    refused inside the pole band because the stable recurrences divide by
    sin(psi).
    """
    if deriv not in DERIV_NAMES:
        raise InvalidArgument(f"deriv must be one of {DERIV_NAMES}")
    phi_a = np.atleast_1d(np.asarray(phi, dtype=float))
    psi_a = np.atleast_1d(np.asarray(psi, dtype=float))
    phi_a, psi_a = np.broadcast_arrays(phi_a, psi_a)
    need_derivs = deriv != "none"
    if need_derivs:
        _check_pole(psi_a, POLE_MARGIN, f"derivative '{deriv}'")
    basis = HarmonicBasis(phi_a.ravel(), psi_a.ravel(), p.degree, derivs=need_derivs)
    out = basis.matrix(deriv) @ p.coeffs
    scalar = np.isscalar(phi) and np.isscalar(psi)
    return float(out[0]) if scalar else out.reshape(phi_a.shape)


def boundary_point_3d(p: SphericalSupport3D, phi, psi):
    """Boundary point(s) with outward normal n(phi, psi).

    x = p n + (p_phi / sin^2 psi) n_phi + p_psi n_psi, valid away from the
    pole band.
    """
    phi_a = np.atleast_1d(np.asarray(phi, dtype=float))
    psi_a = np.atleast_1d(np.asarray(psi, dtype=float))
    phi_a, psi_a = np.broadcast_arrays(phi_a, psi_a)
    _check_pole(psi_a, POLE_MARGIN, "boundary point")
    basis = HarmonicBasis(phi_a.ravel(), psi_a.ravel(), p.degree)
    pts = boundary_points_from_basis(basis, p.coeffs)
    scalar = np.isscalar(phi) and np.isscalar(psi)
    return pts[0] if scalar else pts.reshape(phi_a.shape + (3,))


def boundary_points_from_basis(basis: HarmonicBasis, coeffs: np.ndarray) -> np.ndarray:
    """Vectorized boundary map over a prebuilt basis; returns (M, 3)."""
    val = basis.y @ coeffs
    dph = basis.dphi @ coeffs
    dps = basis.dpsi @ coeffs
    sp, cp = basis.sin_psi, basis.cos_psi
    phi, psi = basis.phi, basis.psi
    n = sphere_normal(phi, psi)
    n_phi = np.stack([np.cos(phi) * sp, -np.sin(phi) * sp, np.zeros_like(phi)], axis=-1)
    n_psi = np.stack([np.sin(phi) * cp, np.cos(phi) * cp, -sp], axis=-1)
    return val[:, None] * n + (dph / sp**2)[:, None] * n_phi + dps[:, None] * n_psi


def surface_jacobian(p: SphericalSupport3D, phi, psi):
    """Surface Jacobian ||d_phi x ^ d_psi x|| for convex p.

    Equals (p sin psi + p_phiphi/sin psi + p_psi cos psi)(p + p_psipsi)
    - (p_psiphi - p_phi cos psi/sin psi)^2 / sin psi; positivity at every
    point is the 3D convexity condition.
    """
    phi_a = np.atleast_1d(np.asarray(phi, dtype=float))
    psi_a = np.atleast_1d(np.asarray(psi, dtype=float))
    phi_a, psi_a = np.broadcast_arrays(phi_a, psi_a)
    _check_pole(psi_a, POLE_MARGIN, "surface Jacobian")
    basis = HarmonicBasis(phi_a.ravel(), psi_a.ravel(), p.degree)
    out = jacobian_from_basis(basis, p.coeffs)
    scalar = np.isscalar(phi) and np.isscalar(psi)
    return float(out[0]) if scalar else out.reshape(phi_a.shape)


def jacobian_from_basis(basis: HarmonicBasis, coeffs: np.ndarray) -> np.ndarray:
    """Vectorized surface Jacobian over a prebuilt basis."""
    r1, r2, r3 = basis.jacobian_forms()
    u1, u2, u3 = r1 @ coeffs, r2 @ coeffs, r3 @ coeffs
    return u1 * u2 - u3**2 / basis.sin_psi


def jacobian_gradient_from_basis(basis: HarmonicBasis, coeffs: np.ndarray) -> np.ndarray:
    """Gradient of every Jacobian sample w.r.t. the coefficients; (M, K)."""
    r1, r2, r3 = basis.jacobian_forms()
    u1, u2, u3 = r1 @ coeffs, r2 @ coeffs, r3 @ coeffs
    w = u3 / basis.sin_psi
    return u2[:, None] * r1 + u1[:, None] * r2 - 2.0 * w[:, None] * r3
