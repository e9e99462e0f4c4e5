"""Dirichlet-Laplace eigenvalues on support-function domains via the MFS.

For a trial value lambda, Helmholtz fundamental solutions centered at
exterior source points are collocated on the boundary and at random
interior points; after a QR factorization of the stacked matrix, the
smallest singular value sigma_1 of the boundary block of Q (the
Betcke-Trefethen subspace angle) dips to zero exactly at eigenvalues.
Localized minima are refined and packaged with the eigenfunction's normal
derivative, which feeds the eigenvalue shape-derivative density
f = -(du/dn)^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar
from scipy.special import hankel1

from .errors import (
    DegenerateEigenvalue,
    InvalidArgument,
    RankDeficiency,
    SingularPoint,
)
from .fourier2d import FourierSupport2D, boundary_point_2d, eval_2d, radius_of_curvature_2d
from .functionals import area_2d, volume_general_3d, width
from .harmonics import HarmonicBasis
from .spheregrid import SphereGrid, make_sphere_grid, sphere_normal
from .spherical3d import SphericalSupport3D, boundary_points_from_basis, jacobian_from_basis

__all__ = [
    "MfsConfig",
    "EigenResult",
    "EigenvalueScan",
    "MissedEigenvalueWarning",
    "fundamental_solution",
    "sigma1",
    "find_eigenvalues",
    "eigen_gradient_density",
]


class MissedEigenvalueWarning(UserWarning):
    """Eigenvalue count over the bracket disagrees with the Weyl estimate."""


@dataclass(frozen=True)
class MfsConfig:
    """Collocation sizes and source offset for one MFS discretization."""

    n_sources: int = 120
    n_collocation: int = 300
    n_interior: int = 40
    offset: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if not self.n_sources < self.n_collocation:
            raise InvalidArgument("need n_sources < n_collocation")
        if not self.n_interior < self.n_collocation:
            raise InvalidArgument("need n_interior < n_collocation")
        if self.offset <= 0:
            raise InvalidArgument("source offset must be positive")

    @staticmethod
    def default_3d(seed: int = 0) -> "MfsConfig":
        return MfsConfig(n_sources=400, n_collocation=1000, n_interior=80, seed=seed)


@dataclass
class EigenResult:
    """One localized Dirichlet-Laplace eigenvalue."""

    lam: float
    sigma1: float
    mfs_coefficients: np.ndarray
    normal_derivative: callable  # boundary parameter(s) -> complex array
    multiplicity: int = 1
    _geom: object = None
    _norm_l2: float | None = None


def fundamental_solution(dim: int, lam: float, x):
    """Helmholtz fundamental solution at displacement(s) x.

    2D: (i/4) H0^(1)(sqrt(lam) |x|);  3D: exp(i sqrt(lam) |x|)/(4 pi |x|).
    """
    if lam <= 0:
        raise InvalidArgument("lambda must be positive")
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(np.atleast_1d(x), axis=-1) if x.shape[-1] == dim else None
    if r is None:
        raise InvalidArgument(f"points must have {dim} components")
    scalar = np.ndim(r) == 0
    r_arr = np.atleast_1d(r)
    if np.any(r_arr < 1e-12):
        raise SingularPoint("fundamental solution evaluated at its singularity")
    k = np.sqrt(lam)
    if dim == 2:
        out = 0.25j * hankel1(0, k * r_arr)
    elif dim == 3:
        out = np.exp(1j * k * r_arr) / (4.0 * np.pi * r_arr)
    else:
        raise InvalidArgument("dim must be 2 or 3")
    return complex(out[0]) if scalar else out.reshape(np.shape(r))


def _kernel_from_r(dim: int, k: float, r: np.ndarray) -> np.ndarray:
    if dim == 2:
        return 0.25j * hankel1(0, k * r)
    return np.exp(1j * k * r) / (4.0 * np.pi * r)


def _kernel_radial_derivative(dim: int, k: float, r: np.ndarray) -> np.ndarray:
    if dim == 2:
        return -0.25j * k * hankel1(1, k * r)
    return np.exp(1j * k * r) * (1j * k * r - 1.0) / (4.0 * np.pi * r**2)


class _MfsGeometry:
    """Lambda-independent point sets for one shape + config."""

    def __init__(self, shape, cfg: MfsConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        if isinstance(shape, FourierSupport2D):
            self.dim = 2
            th_w = 2.0 * np.pi * np.arange(cfg.n_sources) / cfg.n_sources
            th_x = 2.0 * np.pi * (np.arange(cfg.n_collocation) + 0.5) / cfg.n_collocation
            w_pts = boundary_point_2d(shape, th_w)
            w_nrm = np.stack([np.cos(th_w), np.sin(th_w)], axis=1)
            self.collocation = boundary_point_2d(shape, th_x)
            self.collocation_param = th_x
            self.normals = np.stack([np.cos(th_x), np.sin(th_x)], axis=1)
            alpha = cfg.offset * width(shape, 0.0)
            self.sources = w_pts + alpha * w_nrm
            self.interior = _interior_points_2d(shape, cfg.n_interior, rng)
            self.boundary_speed = radius_of_curvature_2d(shape, th_x)
        elif isinstance(shape, SphericalSupport3D):
            self.dim = 3
            g_w = make_sphere_grid(cfg.n_sources)
            g_x = make_sphere_grid(cfg.n_collocation, pole_margin=1.3e-2)
            bw = HarmonicBasis(g_w.phi, g_w.psi, shape.degree)
            bx = HarmonicBasis(g_x.phi, g_x.psi, shape.degree)
            w_pts = boundary_points_from_basis(bw, shape.coeffs)
            self.collocation = boundary_points_from_basis(bx, shape.coeffs)
            self.collocation_param = (g_x.phi, g_x.psi)
            self.normals = g_x.points
            alpha = cfg.offset * width(shape, (0.0, np.pi / 2))
            self.sources = w_pts + alpha * g_w.points
            self.interior = _interior_points_3d(shape, cfg.n_interior, rng)
            self.support_values = bx.y @ shape.coeffs
            self.jacobian = jacobian_from_basis(bx, shape.coeffs)
            self.sin_psi = bx.sin_psi
        else:
            raise InvalidArgument(f"unsupported shape type {type(shape).__name__}")
        self.shape = shape

    def _dist(self, pts: np.ndarray) -> np.ndarray:
        d = pts[:, None, :] - self.sources[None, :, :]
        return np.linalg.norm(d, axis=2)

    def matrices(self, lam: float):
        k = np.sqrt(lam)
        m1 = _kernel_from_r(self.dim, k, self._dist(self.collocation))
        m2 = _kernel_from_r(self.dim, k, self._dist(self.interior))
        return m1, m2

    def sigma_values(self, lam: float, count: int = 1):
        """Smallest singular value(s) of Q1 plus the R factor and Q1 itself."""
        if lam <= 0:
            raise InvalidArgument("lambda must be positive")
        m1, m2 = self.matrices(lam)
        a = np.vstack([m1, m2])
        q, r = scipy.linalg.qr(a, mode="economic", check_finite=False)
        diag = np.abs(np.diag(r))
        if diag.min() <= 1e-14 * diag.max():
            raise RankDeficiency("collocation matrix is numerically singular")
        q1 = q[: m1.shape[0], :]
        sv = scipy.linalg.svd(q1, compute_uv=False, check_finite=False)
        return sv[-count:][::-1], q1, r

    def sigma1(self, lam: float) -> float:
        return float(self.sigma_values(lam)[0][0])

    def eigenvector(self, lam: float) -> np.ndarray:
        """MFS coefficients of the localized eigenfunction at lam."""
        m1, m2 = self.matrices(lam)
        a = np.vstack([m1, m2])
        q, r = scipy.linalg.qr(a, mode="economic", check_finite=False)
        q1 = q[: m1.shape[0], :]
        _, _, vh = scipy.linalg.svd(q1, check_finite=False)
        beta = vh[-1].conj()
        coeff = scipy.linalg.solve_triangular(r, beta, check_finite=False)
        # normalize by the largest interior magnitude to keep scales sane
        u_int = m2 @ coeff
        peak = np.abs(u_int).max()
        if peak > 0:
            coeff = coeff / peak
        return coeff

    def evaluate(self, coeff: np.ndarray, lam: float, pts: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(pts[:, None, :] - self.sources[None, :, :], axis=2)
        return _kernel_from_r(self.dim, np.sqrt(lam), r) @ coeff

    def normal_derivative_at(self, coeff: np.ndarray, lam: float,
                             pts: np.ndarray, normals: np.ndarray) -> np.ndarray:
        diff = pts[:, None, :] - self.sources[None, :, :]
        r = np.linalg.norm(diff, axis=2)
        radial = _kernel_radial_derivative(self.dim, np.sqrt(lam), r)
        proj = np.einsum("ijk,ik->ij", diff, normals) / r
        return (radial * proj) @ coeff


def _interior_points_2d(shape: FourierSupport2D, count: int, rng) -> np.ndarray:
    thetas = 2.0 * np.pi * np.arange(256) / 256
    support = eval_2d(shape, thetas, 0)
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    hi = support.max()
    pts = []
    while len(pts) < count:
        cand = rng.uniform(-hi, hi, size=(4 * count, 2))
        inside = np.all(cand @ dirs.T <= 0.98 * support[None, :], axis=1)
        pts.extend(cand[inside])
    return np.asarray(pts[:count])


def _interior_points_3d(shape: SphericalSupport3D, count: int, rng) -> np.ndarray:
    grid = make_sphere_grid(400)
    basis = HarmonicBasis(grid.phi, grid.psi, shape.degree, derivs=False)
    support = basis.y @ shape.coeffs
    hi = support.max()
    pts = []
    while len(pts) < count:
        cand = rng.uniform(-hi, hi, size=(6 * count, 3))
        inside = np.all(cand @ grid.points.T <= 0.98 * support[None, :], axis=1)
        pts.extend(cand[inside])
    return np.asarray(pts[:count])


def sigma1(shape, lam: float, cfg: MfsConfig | None = None) -> float:
    """Betcke-Trefethen subspace-angle indicator at trial value lam.

    Near zero exactly when lam is a Dirichlet eigenvalue of the body.
    """
    cfg = cfg or (MfsConfig() if isinstance(shape, FourierSupport2D) else MfsConfig.default_3d())
    return _MfsGeometry(shape, cfg).sigma1(lam)


class EigenvalueScan(list):
    """List of EigenResult with scan bookkeeping attached."""

    def __init__(self, results, missed_eigenvalue: bool, weyl_expected: float):
        super().__init__(results)
        self.missed_eigenvalue = missed_eigenvalue
        self.weyl_expected = weyl_expected


def _measure(shape) -> float:
    if isinstance(shape, FourierSupport2D):
        return area_2d(shape).value
    grid = make_sphere_grid(max(2000, 4 * shape.n_coeffs))
    return volume_general_3d(shape, grid, with_hessian=False, check_convexity=False).value


def _weyl_count(shape, lam: float) -> float:
    """Two-term Weyl counting function N(lam) with the Dirichlet boundary term."""
    if lam <= 0:
        return 0.0
    if isinstance(shape, FourierSupport2D):
        from .functionals import perimeter_2d

        n = (_measure(shape) * lam - perimeter_2d(shape).value * np.sqrt(lam)) / (4.0 * np.pi)
    else:
        from .functionals import area_3d

        n = (_measure(shape) * lam**1.5 / (6.0 * np.pi**2)
             - area_3d(shape).value * lam / (16.0 * np.pi))
    return max(0.0, n)


def find_eigenvalues(shape, lam_range, k_max: int, cfg: MfsConfig | None = None,
                     grid_step: float | None = None, accept_sigma: float = 1e-2,
                     refine_rel_tol: float = 1e-8) -> EigenvalueScan:
    """Scan sigma_1 over a bracket and refine its local minima.

    Returns the ascending eigenvalues found (at most ``k_max``), with
    multiplicities resolved by counting how many singular values of the
    boundary block dip together.  Emits :class:`MissedEigenvalueWarning`
    (and sets the scan flag) when the count disagrees with the Weyl
    estimate over the bracket by more than 20 percent.
    """
    cfg = cfg or (MfsConfig() if isinstance(shape, FourierSupport2D) else MfsConfig.default_3d())
    geom = _MfsGeometry(shape, cfg)
    lo, hi = lam_range
    if not 0 < lo < hi:
        raise InvalidArgument("need 0 < lam_lo < lam_hi")
    if grid_step is None:
        # a third of the local Weyl gap at the bracket's midpoint
        mid = 0.5 * (lo + hi)
        measure = _measure(shape)
        if geom.dim == 2:
            gap = 4.0 * np.pi / measure
        else:
            gap = 4.0 * np.pi**2 / (measure * np.sqrt(mid))
        grid_step = max(gap / 3.0, (hi - lo) / 400.0)
    lams = np.arange(lo, hi + grid_step, grid_step)
    sig = np.array([geom.sigma1(l) for l in lams])

    results = []
    for i in range(1, len(lams) - 1):
        if sig[i] <= sig[i - 1] and sig[i] < sig[i + 1]:
            res = minimize_scalar(
                geom.sigma1,
                bracket=None,
                bounds=(lams[i - 1], lams[i + 1]),
                method="bounded",
                options={"xatol": refine_rel_tol * lams[i]},
            )
            lam_star, sig_star = float(res.x), float(res.fun)
            if sig_star > accept_sigma:
                continue
            if results and abs(lam_star - results[-1][0]) < 1e-6 * lam_star:
                continue
            results.append((lam_star, sig_star))

    out = []
    for lam_star, sig_star in results:
        sv, _, _ = geom.sigma_values(lam_star, count=min(6, cfg.n_sources))
        mult = int(np.sum(sv <= max(100.0 * sig_star, 1e-6)))
        mult = max(1, mult)
        coeff = geom.eigenvector(lam_star)

        def normal_derivative(param, coeff=coeff, lam=lam_star):
            return _normal_derivative_on_boundary(geom, coeff, lam, param)

        res = EigenResult(lam_star, sig_star, coeff, normal_derivative,
                          multiplicity=mult, _geom=geom)
        out.extend([res] * mult)
    found = len(out)
    out = out[: k_max if k_max else None]

    expected = _weyl_count(shape, hi) - _weyl_count(shape, lo)
    missed = expected > 2 and abs(found - expected) > 0.2 * expected
    if missed:
        warnings.warn(
            f"found {found} eigenvalues in bracket but Weyl estimate is {expected:.1f}",
            MissedEigenvalueWarning,
        )
    return EigenvalueScan(out, missed, expected)


def _normal_derivative_on_boundary(geom: _MfsGeometry, coeff, lam, param):
    if geom.dim == 2:
        th = np.atleast_1d(np.asarray(param, dtype=float))
        pts = boundary_point_2d(geom.shape, th)
        normals = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        phi, psi = param
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        basis = HarmonicBasis(phi, psi, geom.shape.degree)
        pts = boundary_points_from_basis(basis, geom.shape.coeffs)
        normals = sphere_normal(phi, psi)
    return geom.normal_derivative_at(coeff, lam, pts, normals)


def _l2_norm_squared(result: EigenResult) -> float:
    """Interior integral of |u|^2 for the localized eigenfunction."""
    geom = result._geom
    coeff, lam = result.mfs_coefficients, result.lam
    if geom.dim == 2:
        # fan triangulation from the origin over the collocation polygon,
        # collapsed Gauss-Legendre rule (radial x chord) per triangle: the
        # eigenfunction varies over the full radius, so one low-order sample
        # per triangle is not enough
        pts = geom.collocation
        nxt = np.roll(pts, -1, axis=0)
        areas = 0.5 * np.abs(pts[:, 0] * nxt[:, 1] - pts[:, 1] * nxt[:, 0])
        tn, tw = np.polynomial.legendre.leggauss(12)
        sn, sw = np.polynomial.legendre.leggauss(2)
        tn, tw = 0.5 * (tn + 1.0), 0.5 * tw
        sn, sw = 0.5 * (sn + 1.0), 0.5 * sw
        total = 0.0
        for t, wt in zip(tn, tw):
            for s, ws in zip(sn, sw):
                chord = pts + s * (nxt - pts)
                vals = np.abs(geom.evaluate(coeff, lam, t * chord)) ** 2
                total += 2.0 * wt * ws * t * float(areas @ vals)
        return total
    # 3D: radial shells along rays through the boundary samples; the solid
    # angle weight comes from projecting the boundary patch onto directions
    pts = geom.collocation
    radii = np.linalg.norm(pts, axis=1)
    omega = pts / radii[:, None]
    dsigma = geom.jacobian / geom.sin_psi * (4.0 * np.pi / pts.shape[0])
    solid = dsigma * geom.support_values / radii**3
    nodes, wts = np.polynomial.legendre.leggauss(12)
    total = 0.0
    for t, wq in zip(0.5 * (nodes + 1.0), 0.5 * wts):
        sample = omega * (t * radii)[:, None]
        vals = np.abs(geom.evaluate(coeff, lam, sample)) ** 2
        total += wq * float(solid @ (vals * (t * radii) ** 2 * radii))
    return total


def eigen_gradient_density(result: EigenResult, shape, gap_check: float | None = None,
                           strict: bool = True):
    """Hadamard density f = -(du/dn)^2 of a simple eigenvalue.

    The eigenfunction is normalized to unit interior L2 norm; the returned
    callable samples boundary parameters (theta, or (phi, psi)).  Raises
    :class:`DegenerateEigenvalue` when the eigenvalue is not simple;
    ``strict=False`` downgrades that to the localized-vector surrogate used
    inside optimization loops.
    """
    if strict and result.multiplicity > 1:
        raise DegenerateEigenvalue(
            f"eigenvalue {result.lam:.6f} has multiplicity {result.multiplicity}"
        )
    if strict and gap_check is not None and gap_check < 1e-6 * result.lam:
        raise DegenerateEigenvalue(
            f"gap {gap_check:.3e} below 1e-6 * lambda; density undefined"
        )
    if result._norm_l2 is None:
        result._norm_l2 = _l2_norm_squared(result)
    norm2 = result._norm_l2

    def density(*param):
        param_in = param[0] if len(param) == 1 else param
        dudn = result.normal_derivative(param_in)
        return -np.abs(dudn) ** 2 / norm2

    return density
