"""Geometric shape functionals with coefficient-space gradients and Hessians.

Every functional returns a :class:`GradedValue` whose gradient (and Hessian,
when cheap) is taken with respect to the flat coefficient vector of the
shape.  Boundary-integral densities are converted to coefficient gradients
by the quadratures at the bottom of the module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NonConvexSample
from .fourier2d import FourierSupport2D, eval_2d, radius_of_curvature_2d
from .harmonics import HarmonicBasis, degree_of_index, lm_index, n_harmonics
from .spheregrid import SphereGrid
from .spherical3d import SphericalSupport3D

__all__ = [
    "GradedValue",
    "perimeter_2d",
    "area_2d",
    "width",
    "energy_E",
    "volume_cw_3d",
    "area_3d",
    "volume_general_3d",
    "coeff_gradient_from_density_2d",
    "coeff_gradient_from_density_3d",
]


@dataclass
class GradedValue:
    """Functional value with its coefficient gradient and optional Hessian."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray | None = None

    def __post_init__(self):
        self.gradient = np.asarray(self.gradient, dtype=float)
        if self.hessian is not None:
            self.hessian = np.asarray(self.hessian, dtype=float)


def perimeter_2d(p: FourierSupport2D) -> GradedValue:
    """Perimeter 2*pi*a0 (Cauchy formula); linear in the coefficients."""
    n = p.n_coeffs
    grad = np.zeros(n)
    grad[0] = 2.0 * np.pi
    return GradedValue(2.0 * np.pi * p.a0, grad, np.zeros((n, n)))


def _area_quadratic_weights(degree: int) -> np.ndarray:
    k = np.arange(1, degree + 1, dtype=float)
    w = np.concatenate(([np.pi], np.pi / 2.0 * (1.0 - k**2), np.pi / 2.0 * (1.0 - k**2)))
    return w


def area_2d(p: FourierSupport2D) -> GradedValue:
    """Area pi a0^2 + pi/2 sum (1-k^2)(a_k^2 + b_k^2)."""
    w = _area_quadratic_weights(p.degree)
    c = p.coeffs()
    return GradedValue(float(w @ c**2), 2.0 * w * c, np.diag(2.0 * w))


def width(p, direction):
    """Width p(u) + p(-u) in the given direction.

    2D shapes take an angle theta; 3D shapes an ``(phi, psi)`` pair.
    Vectorized over arrays of directions.
    """
    if isinstance(p, FourierSupport2D):
        theta = np.asarray(direction, dtype=float)
        return eval_2d(p, theta, 0) + eval_2d(p, theta + np.pi, 0)
    if isinstance(p, SphericalSupport3D):
        from .spherical3d import eval_sph

        phi, psi = direction
        phi = np.asarray(phi, dtype=float)
        psi = np.asarray(psi, dtype=float)
        return eval_sph(p, phi, psi) + eval_sph(p, phi + np.pi, np.pi - psi)
    raise InvalidArgument(f"unsupported shape type {type(p).__name__}")


def _energy_weights(degree: int) -> np.ndarray:
    """Per-coefficient weights l(l+1)/2 - 1 (zero on the constant term)."""
    l = degree_of_index(np.arange(n_harmonics(degree)))
    w = l * (l + 1) / 2.0 - 1.0
    w[0] = 0.0
    return w


def energy_E(p: SphericalSupport3D) -> GradedValue:
    """Quadratic energy sum (l(l+1)/2 - 1) a_lm^2 over the non-constant part.

    Equals the sphere integral of |grad_tau h|^2 / 2 - h^2 for
    h = p - mean(p); degree-1 terms (translations) contribute nothing.
    """
    w = _energy_weights(p.degree)
    c = p.coeffs
    return GradedValue(float(w @ c**2), 2.0 * w * c, np.diag(2.0 * w))


def volume_cw_3d(p: SphericalSupport3D, w: float) -> GradedValue:
    """Volume pi/6 w^3 - (w/2) E(h) of a constant-width-w body."""
    e = energy_E(p)
    return GradedValue(
        np.pi / 6.0 * w**3 - w / 2.0 * e.value,
        -w / 2.0 * e.gradient,
        -w / 2.0 * e.hessian,
    )


def area_3d(p: SphericalSupport3D) -> GradedValue:
    """Surface area pi w^2 - E(h) with mean width w = 2 a00 Y00 = a00/sqrt(pi).

    Valid for general convex bodies, so pi w^2 reduces to a00^2.
    """
    e = energy_E(p)
    a00 = p.coeffs[0]
    grad = -e.gradient
    grad[0] += 2.0 * a00
    hess = -e.hessian
    hess[0, 0] += 2.0
    return GradedValue(a00**2 - e.value, grad, hess)


def volume_general_3d(
    p: SphericalSupport3D,
    grid: SphereGrid,
    basis: HarmonicBasis | None = None,
    with_hessian: bool = True,
    check_convexity: bool = True,
) -> GradedValue:
    """Volume of a general convex body by the divergence theorem.

    V = (1/3) * integral of p over the boundary, evaluated with the
    equal-weight sphere quadrature; cubic in the coefficients, so gradient
    and Hessian follow from the product rule through the surface Jacobian.
    ``check_convexity=False`` skips the Jacobian-sign guard (for use inside
    optimization loops whose iterates may be transiently infeasible).
    """
    if basis is None:
        basis = HarmonicBasis(grid.phi, grid.psi, p.degree)
    c = p.coeffs
    r1, r2, r3 = basis.jacobian_forms()
    s = basis.sin_psi
    u1, u2, u3 = r1 @ c, r2 @ c, r3 @ c
    jac = u1 * u2 - u3**2 / s
    if check_convexity and jac.min() < -1e-10:
        raise NonConvexSample(
            f"surface Jacobian is {jac.min():.3e} at a grid point; body is not convex there"
        )
    pv = basis.y @ c
    q = jac / s
    kappa = grid.weight / 3.0
    value = kappa * float(pv @ q)
    # rows of dq: gradient of q_i = jac_i / sin(psi_i)
    z = (u2 / s)[:, None] * r1 + (u1 / s)[:, None] * r2 - 2.0 * (u3 / s**2)[:, None] * r3
    grad = kappa * (basis.y.T @ q + z.T @ pv)
    hess = None
    if with_hessian:
        yz = basis.y.T @ z
        hess = kappa * (
            yz
            + yz.T
            + r1.T @ (r2 * (pv / s)[:, None])
            + r2.T @ (r1 * (pv / s)[:, None])
            - 2.0 * r3.T @ (r3 * (pv / s**2)[:, None])
        )
    return GradedValue(value, grad, hess)


def coeff_gradient_from_density_2d(f, p: FourierSupport2D, quad_points: int) -> np.ndarray:
    """Coefficient gradient of a functional with Hadamard boundary density f.

    Computes integral of f(theta) * {1, cos k theta, sin k theta} * (p + p'')
    d theta with the periodic trapezoid rule; f is a callable on angle
    arrays.
    """
    if quad_points < 4 * p.degree:
        raise InvalidArgument("need at least 4N quadrature points")
    theta = 2.0 * np.pi * np.arange(quad_points) / quad_points
    fv = np.asarray(f(theta), dtype=float)
    speed = radius_of_curvature_2d(p, theta)
    k = np.arange(1, p.degree + 1, dtype=float)
    kt = theta[:, None] * k[None, :]
    basis = np.concatenate([np.ones((quad_points, 1)), np.cos(kt), np.sin(kt)], axis=1)
    return (2.0 * np.pi / quad_points) * (basis.T @ (fv * speed))


def coeff_gradient_from_density_3d(
    f,
    p: SphericalSupport3D,
    grid: SphereGrid,
    basis: HarmonicBasis | None = None,
    check_convexity: bool = True,
) -> np.ndarray:
    """3D analogue: integral of f * Y_lm * Jac over the parameter rectangle.

    f is a callable on (phi, psi) arrays; the equal-weight sphere quadrature
    absorbs one sin(psi) factor of the Jacobian.
    """
    if basis is None:
        basis = HarmonicBasis(grid.phi, grid.psi, p.degree)
    c = p.coeffs
    r1, r2, r3 = basis.jacobian_forms()
    s = basis.sin_psi
    jac = (r1 @ c) * (r2 @ c) - (r3 @ c) ** 2 / s
    if check_convexity and jac.min() < -1e-10:
        raise NonConvexSample(
            f"surface Jacobian is {jac.min():.3e} at a grid point; body is not convex there"
        )
    fv = np.asarray(f(grid.phi, grid.psi), dtype=float)
    return grid.weight * (basis.y.T @ (fv * jac / s))
