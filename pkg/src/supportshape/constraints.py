"""Discrete constraint systems over support-function coefficients.

Convexity, width/diameter, inclusion and rotor sparsity constraints are
assembled here as either linear inequality rows, nonlinear residual systems
(the 3D Gaussian-curvature condition), or coefficient fixing patterns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .harmonics import HarmonicBasis, degree_of_index, lm_index, n_harmonics
from .spheregrid import SphereGrid

__all__ = [
    "LinearConstraints",
    "NonlinearConstraints",
    "CoefficientPattern",
    "PolytopeContainer",
    "convexity_2d",
    "convexity_3d",
    "constant_width_pattern",
    "diameter_bounds",
    "inclusion_constraints",
    "rotor_pattern",
]


@dataclass(frozen=True)
class LinearConstraints:
    """Rows of  lower <= matrix @ coeffs <= upper  (entries may be +-inf)."""

    matrix: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (m.shape[0],)).copy()
        up = np.broadcast_to(np.asarray(self.upper, dtype=float), (m.shape[0],)).copy()
        if np.any(lo > up):
            raise InvalidArgument("constraint rows with lower > upper")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def violation(self, coeffs: np.ndarray) -> np.ndarray:
        """Per-row constraint violation (0 when satisfied)."""
        r = self.matrix @ coeffs
        return np.maximum(np.maximum(self.lower - r, r - self.upper), 0.0)

    @staticmethod
    def stack(systems) -> "LinearConstraints":
        systems = [s for s in systems if s is not None and s.n_rows > 0]
        if not systems:
            raise InvalidArgument("nothing to stack")
        return LinearConstraints(
            np.vstack([s.matrix for s in systems]),
            np.concatenate([s.lower for s in systems]),
            np.concatenate([s.upper for s in systems]),
        )


@dataclass
class NonlinearConstraints:
    """Residual system residual(coeffs) >= 0 with analytic Jacobian.

    ``weighted_hessian(w)``, when available, returns sum_i w_i * H_i for the
    per-row residual Hessians H_i (the residuals here are quadratic, so this
    is exact and cheap).
    """

    residual: callable
    jacobian: callable
    n_rows: int
    kind: str = "ge"
    weighted_hessian: callable | None = None


@dataclass(frozen=True)
class CoefficientPattern:
    """Partition of the coefficient indices into fixed values and free ones."""

    n_total: int
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        fixed = {int(k): float(v) for k, v in self.fixed.items()}
        if any(not 0 <= k < self.n_total for k in fixed):
            raise InvalidArgument("fixed index out of range")
        object.__setattr__(self, "fixed", fixed)
        free = tuple(sorted(set(range(self.n_total)) - set(fixed)))
        object.__setattr__(self, "_free", free)

    @property
    def free(self) -> tuple:
        return self._free

    @property
    def n_free(self) -> int:
        return len(self._free)

    def expand(self, z: np.ndarray) -> np.ndarray:
        """Full coefficient vector from free entries."""
        c = np.zeros(self.n_total)
        for k, v in self.fixed.items():
            c[k] = v
        c[list(self._free)] = z
        return c

    def reduce(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs, dtype=float)[list(self._free)]

    def satisfied_by(self, coeffs: np.ndarray, tol: float = 0.0) -> bool:
        c = np.asarray(coeffs, dtype=float)
        return all(abs(c[k] - v) <= tol for k, v in self.fixed.items())


def convexity_2d(N: int, M: int) -> LinearConstraints:
    """M linear rows enforcing p + p'' >= 0 at theta_m = 2 pi m / M.

    Row entries are 1 for a0 and (1-n^2) cos/sin(n theta_m) for a_n/b_n;
    requires M >= 2N so the highest frequency is resolved.
    """
    if M < 2 * N:
        raise InvalidArgument("need at least 2N convexity sampling angles")
    theta = 2.0 * np.pi * np.arange(1, M + 1) / M
    n = np.arange(1, N + 1, dtype=float)
    fac = 1.0 - n**2
    nt = theta[:, None] * n[None, :]
    rows = np.concatenate(
        [np.ones((M, 1)), fac * np.cos(nt), fac * np.sin(nt)], axis=1
    )
    return LinearConstraints(rows, 0.0, np.inf)


def convexity_3d(N: int, grid: SphereGrid, basis: HarmonicBasis | None = None) -> NonlinearConstraints:
    """Gaussian-curvature positivity at every grid point, as residuals >= 0.

    Each residual is the surface Jacobian, a quadratic form of the
    coefficients; the Jacobian matrix and weighted Hessians are exact.
    """
    if basis is None:
        basis = HarmonicBasis(grid.phi, grid.psi, N)
    r1, r2, r3 = basis.jacobian_forms()
    s = basis.sin_psi

    def residual(c):
        return (r1 @ c) * (r2 @ c) - (r3 @ c) ** 2 / s

    def jacobian(c):
        u1, u2, u3 = r1 @ c, r2 @ c, r3 @ c
        return u2[:, None] * r1 + u1[:, None] * r2 - 2.0 * (u3 / s)[:, None] * r3

    def weighted_hessian(w):
        r1w = r1 * w[:, None]
        r3w = r3 * (w / s)[:, None]
        h = r1w.T @ r2
        return h + h.T - 2.0 * r3w.T @ r3
    return NonlinearConstraints(
        residual=residual,
        jacobian=jacobian,
        n_rows=grid.size,
        weighted_hessian=weighted_hessian,
    )


def constant_width_pattern(dim: int, N: int, w: float) -> CoefficientPattern:
    """Coefficient pattern of a constant-width-w body.

    Fixes the constant term from w and zeroes every even-index (2D) or
    even-degree (3D) coefficient; degree-1 terms are pinned to zero as well
    since they only translate the body.
    """
    if dim == 2:
        fixed = {0: w / 2.0, 1: 0.0, N + 1: 0.0}
        for k in range(2, N + 1, 2):
            fixed[k] = 0.0
            fixed[N + k] = 0.0
        return CoefficientPattern(2 * N + 1, fixed)
    if dim == 3:
        fixed = {0: w / 2.0 * np.sqrt(4.0 * np.pi)}
        for idx in range(1, n_harmonics(N)):
            l = int(degree_of_index(idx))
            if l == 1 or l % 2 == 0:
                fixed[idx] = 0.0
        return CoefficientPattern(n_harmonics(N), fixed)
    raise InvalidArgument("dim must be 2 or 3")


def diameter_bounds(dim: int, N: int, directions, w_lo=-np.inf, w_hi=np.inf) -> LinearConstraints:
    """Rows encoding w_lo <= p(u) + p(-u) <= w_hi per direction.

    Odd-index basis functions cancel in the antipodal sum, so their columns
    are exactly zero; directions are angles theta (2D) or (phi, psi) pairs
    (3D); bounds may be scalars or per-direction arrays.
    """
    if dim == 2:
        theta = np.atleast_1d(np.asarray(directions, dtype=float))
        k = np.arange(1, N + 1, dtype=float)
        par = 1.0 + (-1.0) ** k  # 2 for even k, 0 for odd
        kt = theta[:, None] * k[None, :]
        rows = np.concatenate(
            [np.full((theta.size, 1), 2.0), par * np.cos(kt), par * np.sin(kt)], axis=1
        )
        return LinearConstraints(rows, w_lo, w_hi)
    if dim == 3:
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        if d.shape[1] != 2:
            raise InvalidArgument("3D directions must be (phi, psi) pairs")
        basis = HarmonicBasis(d[:, 0], d[:, 1], N, derivs=False)
        l = degree_of_index(np.arange(n_harmonics(N)))
        par = 1.0 + (-1.0) ** l
        rows = basis.y * par[None, :]
        return LinearConstraints(rows, w_lo, w_hi)
    raise InvalidArgument("dim must be 2 or 3")


@dataclass(frozen=True)
class PolytopeContainer:
    """Intersection of half-spaces {x : normals[i] . x <= offsets[i]}."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normals, dtype=float)
        o = np.asarray(self.offsets, dtype=float)
        if n.ndim != 2 or n.shape[1] not in (2, 3) or o.shape != (n.shape[0],):
            raise InvalidArgument("normals must be (F, 2) or (F, 3), offsets (F,)")
        norms = np.linalg.norm(n, axis=1)
        object.__setattr__(self, "normals", n / norms[:, None])
        object.__setattr__(self, "offsets", o / norms)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        return np.all(points @ self.normals.T <= self.offsets[None, :] + tol, axis=-1)


def _angles_of_vectors(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # inverse of n(phi,psi) = (sin phi sin psi, cos phi sin psi, cos psi)
    psi = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
    phi = np.arctan2(u[:, 0], u[:, 1])
    return phi, psi


def inclusion_constraints(container, N: int, directions=None) -> LinearConstraints:
    """Rows p(u_j) <= p_container(u_j) over the chosen directions.

    For a :class:`PolytopeContainer` the face normals are sufficient (and
    used when ``directions`` is omitted); otherwise ``container`` must be a
    support-function sampler and a dense direction set is required.
    """
    if isinstance(container, PolytopeContainer):
        if directions is not None:
            raise InvalidArgument(
                "polytope containers use exactly their face normals; "
                "pass a support-function sampler for other direction sets"
            )
        u = container.normals
        offsets = container.offsets
        dim = container.dim
    else:
        if directions is None:
            raise InvalidArgument("sampler containers need an explicit direction set")
        u = np.atleast_2d(np.asarray(directions, dtype=float))
        dim = u.shape[1]
        offsets = np.asarray(container(u), dtype=float)
    if dim == 2:
        theta = np.arctan2(u[:, 1], u[:, 0])
        k = np.arange(1, N + 1, dtype=float)
        kt = theta[:, None] * k[None, :]
        rows = np.concatenate([np.ones((theta.size, 1)), np.cos(kt), np.sin(kt)], axis=1)
    else:
        phi, psi = _angles_of_vectors(u)
        rows = HarmonicBasis(phi, psi, N, derivs=False).y
    return LinearConstraints(rows, -np.inf, offsets)


def rotor_pattern(kind: str, N: int, inradius: float) -> CoefficientPattern:
    """Sparsity pattern of rotors in regular polygons and polyhedra.

    Polygon-n rotors keep Fourier indices of the form n*q +- 1; tetrahedron
    rotors keep spherical-harmonic degrees {2, 5}, octahedron rotors {5},
    and cube rotors are exactly the constant-width bodies.  The constant
    term is fixed by the inradius and index/degree-1 terms are pinned to
    zero (translations).
    """
    if kind.startswith("polygon-"):
        try:
            sides = int(kind.split("-", 1)[1])
        except ValueError:
            raise InvalidArgument(f"bad polygon rotor kind {kind!r}")
        if sides < 3:
            raise InvalidArgument("polygon rotors need at least 3 sides")
        allowed = set()
        q = 1
        while sides * q - 1 <= N:
            allowed.add(sides * q - 1)
            if sides * q + 1 <= N:
                allowed.add(sides * q + 1)
            q += 1
        allowed.discard(1)
        if not allowed:
            raise InvalidArgument(f"truncation N={N} below the smallest rotor index {sides - 1}")
        fixed = {0: float(inradius)}
        for k in range(1, N + 1):
            if k not in allowed:
                fixed[k] = 0.0
                fixed[N + k] = 0.0
        return CoefficientPattern(2 * N + 1, fixed)
    if kind == "cube":
        return constant_width_pattern(3, N, 2.0 * inradius)
    if kind in ("tetrahedron", "octahedron"):
        degrees = {2, 5} if kind == "tetrahedron" else {5}
        if N < max(degrees):
            raise InvalidArgument(f"truncation N={N} below rotor degree {max(degrees)}")
        fixed = {0: float(inradius) * np.sqrt(4.0 * np.pi)}
        for idx in range(1, n_harmonics(N)):
            if int(degree_of_index(idx)) not in degrees:
                fixed[idx] = 0.0
        return CoefficientPattern(n_harmonics(N), fixed)
    raise InvalidArgument(f"unknown rotor kind {kind!r}")
