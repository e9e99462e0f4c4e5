"""Catalog of shape-optimization problems wired into solvable NLPs.

Each named problem builds an :class:`~supportshape.nlp.NlpProblem` with the
right coefficient pattern, constraint systems, objective (with gradients and
Hessians where the functional is polynomial in the coefficients), start
point and start sampler.  Reference values ship with provenance strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bodies
from .constraints import (
    CoefficientPattern,
    LinearConstraints,
    PolytopeContainer,
    constant_width_pattern,
    convexity_2d,
    convexity_3d,
    diameter_bounds,
    inclusion_constraints,
    rotor_pattern,
)
from .errors import InvalidArgument, InvalidParams, UnknownProblem
from .fourier2d import FourierSupport2D, eval_2d
from .functionals import (
    GradedValue,
    area_2d,
    area_3d,
    coeff_gradient_from_density_2d,
    perimeter_2d,
    volume_cw_3d,
    volume_general_3d,
    width,
)
from .harmonics import HarmonicBasis, degree_of_index, n_harmonics
from .mfs import MfsConfig, eigen_gradient_density, find_eigenvalues
from .nlp import NlpProblem
from .spheregrid import make_sphere_grid
from .spherical3d import SphericalSupport3D

__all__ = ["ProblemSpec", "build", "reference_table", "canonicalize_2d", "PROBLEM_NAMES"]

PROBLEM_NAMES = (
    "min_area_cw_2d",
    "min_vol_cw_3d",
    "eig_convex",
    "eig_cw_3d",
    "rotor_min",
    "j_gamma",
    "min_area_width_3d",
    "cheeger",
)


@dataclass
class ProblemSpec:
    """Resolved parameters and reference metadata of a catalog problem."""

    name: str
    dim: int
    degree: int
    grid_size: int
    params: dict = field(default_factory=dict)
    reference: dict | None = None


def _pattern_start(pattern: CoefficientPattern) -> np.ndarray:
    start = np.zeros(pattern.n_total)
    for k, v in pattern.fixed.items():
        start[k] = v
    return start


def _decay_sampler(pattern: CoefficientPattern, scale: float, orders: np.ndarray,
                   base: np.ndarray | None = None):
    """Random starts: base + uniform [-0.1, 0.1] * scale damped by 1/(1+order)^2.

    The constant coefficient keeps its base value (up to noise) so free-scale
    problems never start from a degenerate shape.
    """

    def sampler(rng):
        start = rng.uniform(-0.1, 0.1, pattern.n_total) * scale / (1.0 + orders) ** 2
        if base is not None:
            start = start + base
        for k, v in pattern.fixed.items():
            start[k] = v
        return start

    return sampler


def _orders_2d(N: int) -> np.ndarray:
    k = np.arange(1, N + 1, dtype=float)
    return np.concatenate(([0.0], k, k))


def _quadratic_objective(factory):
    def objective(coeffs):
        return factory(coeffs)

    return objective


def _min_area_cw_2d(params):
    w = float(params.get("width", 2.0))
    N = int(params.get("degree", 50))
    M = int(params.get("grid", 8 * N))
    pattern = constant_width_pattern(2, N, w)
    rows = convexity_2d(N, M)

    def objective(coeffs):
        return area_2d(FourierSupport2D.from_coeffs(coeffs))

    sampler = _decay_sampler(pattern, w, _orders_2d(N))
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), linear=rows,
        name="min_area_cw_2d", start_sampler=sampler,
    )
    spec = ProblemSpec("min_area_cw_2d", 2, N, M, {"width": w},
                       reference=_REFERENCES["min_area_cw_2d"] if w == 2.0 else None)
    return problem, spec


def _min_vol_cw_3d(params):
    w = float(params.get("width", 1.0))
    N = int(params.get("degree", 9))
    Md = int(params.get("grid", 2 * (N + 1) ** 2))
    pattern = constant_width_pattern(3, N, w)
    grid = make_sphere_grid(Md)
    nl = convexity_3d(N, grid)

    def objective(coeffs):
        return volume_cw_3d(SphericalSupport3D(coeffs, N), w)

    orders = degree_of_index(np.arange(n_harmonics(N))).astype(float)
    sampler = _decay_sampler(pattern, w, orders)
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), nonlinear=nl,
        name="min_vol_cw_3d", start_sampler=sampler,
    )
    spec = ProblemSpec("min_vol_cw_3d", 3, N, Md, {"width": w},
                       reference=_REFERENCES["min_vol_cw_3d"] if w == 1.0 else None)
    return problem, spec


class _EigenObjective:
    """lambda_k (optionally area-normalized) with its Hadamard gradient.

    Localizes the k-th eigenvalue with a bracket warm-started from the
    previous evaluation; the coefficient gradient comes from the
    -(du/dn)^2 density (localized-vector surrogate when the eigenvalue is
    numerically multiple).
    """

    def __init__(self, k: int, dim: int, degree: int, cfg: MfsConfig,
                 normalize_by_measure: bool, quad_points: int = 0):
        self.k = k
        self.dim = dim
        self.degree = degree
        self.cfg = cfg
        self.normalize = normalize_by_measure
        self.quad_points = quad_points or max(4 * degree, 256)

    def _shape(self, coeffs):
        if self.dim == 2:
            return FourierSupport2D.from_coeffs(coeffs)
        return SphericalSupport3D(coeffs, self.degree)

    def _bracket(self, shape):
        if self.dim == 2:
            measure = area_2d(shape).value
            lam_w = 4.0 * np.pi / measure
            return 0.2 * lam_w, 1.9 * lam_w * (self.k + 1)
        w = width(shape, (0.0, np.pi / 2))
        lam_ball = (np.pi / (w / 2.0)) ** 2  # first eigenvalue of the inscribed-scale ball
        return 0.4 * lam_ball, 1.6 * lam_ball * (self.k + 1) ** (2.0 / 3.0)

    def __call__(self, coeffs) -> GradedValue:
        shape = self._shape(coeffs)
        lo, hi = getattr(self, "_warm", (None, None))
        if lo is None:
            lo, hi = self._bracket(shape)
        scan = find_eigenvalues(shape, (lo, hi), self.k + 1, self.cfg)
        attempts = 0
        while len(scan) < self.k + 1 and attempts < 3:
            lo, hi = 0.5 * lo, 1.7 * hi
            scan = find_eigenvalues(shape, (lo, hi), self.k + 1, self.cfg)
            attempts += 1
        if len(scan) < self.k:
            raise InvalidParams(
                f"could not localize {self.k} eigenvalues in bracket ({lo:.3g}, {hi:.3g})"
            )
        result = scan[self.k - 1]
        lam = result.lam
        self._warm = (0.55 * scan[0].lam, 1.45 * scan[min(self.k, len(scan) - 1)].lam)

        density = eigen_gradient_density(result, shape, strict=False)
        if self.dim == 2:
            grad_lam = coeff_gradient_from_density_2d(density, shape, self.quad_points)
        else:
            from .functionals import coeff_gradient_from_density_3d

            grid = make_sphere_grid(max(2 * (self.degree + 1) ** 2, 400))
            grad_lam = coeff_gradient_from_density_3d(
                density, shape, grid, check_convexity=False)
        if not self.normalize:
            return GradedValue(lam, grad_lam)
        measure = area_2d(shape) if self.dim == 2 else volume_general_3d(
            self._shape(coeffs), make_sphere_grid(2 * (self.degree + 1) ** 2),
            with_hessian=False, check_convexity=False)
        power = 2.0 / self.dim
        scale = measure.value ** power
        value = lam * scale
        grad = scale * grad_lam + lam * power * measure.value ** (power - 1.0) * measure.gradient
        return GradedValue(value, grad)


def _eig_convex(params):
    k = int(params.get("k", 2))
    N = int(params.get("degree", 20))
    M = int(params.get("grid", 8 * N))
    if k < 1:
        raise InvalidParams("eigenvalue index k must be >= 1")
    pattern = CoefficientPattern(2 * N + 1, {0: 0.5, 1: 0.0, N + 1: 0.0})
    rows = convexity_2d(N, M)
    # keep the origin (the Steiner point, pinned by the degree-1 zeros)
    # well inside so interior sampling and fan quadrature stay valid
    theta = 2.0 * np.pi * np.arange(64) / 64
    kk = np.arange(1, N + 1, dtype=float)
    kt = theta[:, None] * kk[None, :]
    floor_rows = LinearConstraints(
        np.concatenate([np.ones((64, 1)), np.cos(kt), np.sin(kt)], axis=1), 0.05, np.inf)
    rows = LinearConstraints.stack([rows, floor_rows])
    cfg = MfsConfig(seed=int(params.get("seed", 0)))
    objective = _EigenObjective(k, 2, N, cfg, normalize_by_measure=True)
    sampler = _decay_sampler(pattern, 1.0, _orders_2d(N))
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), linear=rows,
        name="eig_convex", start_sampler=sampler,
    )
    ref = _REFERENCES["eig_convex_lam2"] if k == 2 else None
    return problem, ProblemSpec("eig_convex", 2, N, M, {"k": k}, reference=ref)


def _eig_cw_3d(params):
    k = int(params.get("k", 10))
    N = int(params.get("degree", 6))
    Md = int(params.get("grid", 2 * (N + 1) ** 2))
    w = float(params.get("width", 1.0))
    pattern = constant_width_pattern(3, N, w)
    nl = convexity_3d(N, make_sphere_grid(Md))
    cfg = MfsConfig(
        n_sources=int(params.get("n_sources", 250)),
        n_collocation=int(params.get("n_collocation", 600)),
        n_interior=60,
        seed=int(params.get("seed", 0)),
    )
    objective = _EigenObjective(k, 3, N, cfg, normalize_by_measure=False)
    orders = degree_of_index(np.arange(n_harmonics(N))).astype(float)
    sampler = _decay_sampler(pattern, w, orders)
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), nonlinear=nl,
        name="eig_cw_3d", start_sampler=sampler,
    )
    return problem, ProblemSpec("eig_cw_3d", 3, N, Md, {"k": k, "width": w})


def _rotor_min(params):
    kind = params.get("kind", "tetrahedron")
    inradius = float(params.get("inradius", 0.5))
    if kind.startswith("polygon-"):
        N = int(params.get("degree", 30))
        M = int(params.get("grid", 8 * N))
        pattern = rotor_pattern(kind, N, inradius)
        rows = convexity_2d(N, M)

        def objective(coeffs):
            return area_2d(FourierSupport2D.from_coeffs(coeffs))

        sampler = _decay_sampler(pattern, 2 * inradius, _orders_2d(N))
        problem = NlpProblem(
            objective, pattern, sampler(np.random.default_rng(0)), linear=rows,
            name=f"rotor_min[{kind}]", start_sampler=sampler,
        )
        return problem, ProblemSpec("rotor_min", 2, N, M, {"kind": kind, "inradius": inradius})
    N = int(params.get("degree", 5))
    Md = int(params.get("grid", 2000))
    pattern = rotor_pattern(kind, N, inradius)
    if "degrees" in params:  # e.g. degree-2-only tetrahedron rotors
        allowed = set(int(d) for d in params["degrees"])
        fixed = dict(pattern.fixed)
        for idx in range(1, n_harmonics(N)):
            if int(degree_of_index(idx)) not in allowed:
                fixed.setdefault(idx, 0.0)
        pattern = CoefficientPattern(pattern.n_total, fixed)
    grid = make_sphere_grid(Md)
    basis = HarmonicBasis(grid.phi, grid.psi, N)
    nl = convexity_3d(N, grid, basis)

    def objective(coeffs):
        return volume_general_3d(SphericalSupport3D(coeffs, N), grid, basis,
                                 check_convexity=False)

    orders = degree_of_index(np.arange(n_harmonics(N))).astype(float)
    sampler = _decay_sampler(pattern, 2 * inradius, orders)
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), nonlinear=nl,
        name=f"rotor_min[{kind}]", start_sampler=sampler,
    )
    ref_key = {"tetrahedron": "rotor_tetrahedron", "octahedron": "rotor_octahedron"}.get(kind)
    ref = _REFERENCES.get(ref_key) if inradius == 0.5 else None
    return problem, ProblemSpec("rotor_min", 3, N, Md, {"kind": kind, "inradius": inradius},
                                reference=ref)


def _j_gamma(params):
    gamma = float(params.get("gamma", 0.4))
    N = int(params.get("degree", 100))
    M = int(params.get("grid", 8 * N))
    W = float(params.get("diameter", 1.0))
    n_dirs = int(params.get("n_width_dirs", M // 2))
    pattern = CoefficientPattern(2 * N + 1, {1: 0.0, N + 1: 0.0})
    theta = np.pi * np.arange(n_dirs) / n_dirs  # antipodal pairs: half circle suffices
    rows = LinearConstraints.stack([
        convexity_2d(N, M),
        diameter_bounds(2, N, theta, -np.inf, W),
    ])

    def objective(coeffs):
        a = area_2d(FourierSupport2D.from_coeffs(coeffs))
        p = perimeter_2d(FourierSupport2D.from_coeffs(coeffs))
        return GradedValue(gamma * a.value - p.value,
                           gamma * a.gradient - p.gradient,
                           gamma * a.hessian - p.hessian)

    base = _pattern_start(pattern)
    base[0] = 0.4 * W
    sampler = _decay_sampler(pattern, 0.4 * W, _orders_2d(N), base)
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), linear=rows,
        name="j_gamma", start_sampler=sampler,
    )
    return problem, ProblemSpec("j_gamma", 2, N, M, {"gamma": gamma, "diameter": W})


def _min_area_width_3d(params):
    N = int(params.get("degree", 10))
    Md = int(params.get("grid", 800))
    w_lo = float(params.get("min_width", 1.0))
    n_dirs = int(params.get("n_width_dirs", 500))
    fixed = {idx: 0.0 for idx in range(1, 4)}  # pin translations (degree 1)
    pattern = CoefficientPattern(n_harmonics(N), fixed)
    grid = make_sphere_grid(Md)
    nl = convexity_3d(N, grid)
    dir_grid = make_sphere_grid(n_dirs)
    rows = diameter_bounds(3, N, np.stack([dir_grid.phi, dir_grid.psi], axis=1), w_lo, np.inf)

    def objective(coeffs):
        return area_3d(SphericalSupport3D(coeffs, N))

    base = _pattern_start(pattern)
    base[0] = (w_lo / 2.0) * np.sqrt(4.0 * np.pi)
    orders = degree_of_index(np.arange(n_harmonics(N))).astype(float)
    sampler = _decay_sampler(pattern, w_lo, orders, base)
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), linear=rows, nonlinear=nl,
        name="min_area_width_3d", start_sampler=sampler,
    )
    return problem, ProblemSpec("min_area_width_3d", 3, N, Md, {"min_width": w_lo},
                                reference=_REFERENCES["min_area_width_3d"] if w_lo == 1.0 else None)


_CONTAINERS = {
    "square": bodies.square_container,
    "tetrahedron": bodies.tetrahedron_container,
    "cube": bodies.cube_container,
    "dodecahedron": bodies.dodecahedron_container,
}


def _cheeger(params):
    container = params.get("container", "square")
    if isinstance(container, str):
        try:
            container = _CONTAINERS[container]()
        except KeyError:
            raise InvalidParams(
                f"unknown container {container!r}; choose from {sorted(_CONTAINERS)}")
    if not isinstance(container, PolytopeContainer):
        raise InvalidParams("cheeger needs a polytope container")
    dim = container.dim
    inradius = container.offsets.min()
    if dim == 2:
        N = int(params.get("degree", 80))
        M = int(params.get("grid", 8 * N))
        pattern = CoefficientPattern(2 * N + 1, {1: 0.0, N + 1: 0.0})
        rows = LinearConstraints.stack([
            convexity_2d(N, M),
            inclusion_constraints(container, N),
        ])

        def objective(coeffs):
            shape = FourierSupport2D.from_coeffs(coeffs)
            return _ratio_graded(perimeter_2d(shape), area_2d(shape))

        base = _pattern_start(pattern)
        base[0] = 0.6 * inradius
        sampler = _decay_sampler(pattern, 0.6 * inradius, _orders_2d(N), base)
        problem = NlpProblem(
            objective, pattern, sampler(np.random.default_rng(0)), linear=rows,
            name="cheeger", start_sampler=sampler,
        )
        ref = _REFERENCES["cheeger_square"] if container.offsets.max() == 0.5 and dim == 2 else None
        return problem, ProblemSpec("cheeger", 2, N, M, {"container": "polytope"}, reference=ref)
    N = int(params.get("degree", 8))
    Md = int(params.get("grid", max(2 * (N + 1) ** 2, 400)))
    pattern = CoefficientPattern(n_harmonics(N), {idx: 0.0 for idx in range(1, 4)})
    grid = make_sphere_grid(Md)
    basis = HarmonicBasis(grid.phi, grid.psi, N)
    nl = convexity_3d(N, grid, basis)
    rows = inclusion_constraints(container, N)

    def objective(coeffs):
        shape = SphericalSupport3D(coeffs, N)
        return _ratio_graded(
            area_3d(shape),
            volume_general_3d(shape, grid, basis, check_convexity=False),
        )

    base = _pattern_start(pattern)
    base[0] = 0.6 * inradius * np.sqrt(4.0 * np.pi)
    orders = degree_of_index(np.arange(n_harmonics(N))).astype(float)
    sampler = _decay_sampler(pattern, 0.6 * inradius, orders, base)
    problem = NlpProblem(
        objective, pattern, sampler(np.random.default_rng(0)), linear=rows, nonlinear=nl,
        name="cheeger", start_sampler=sampler,
    )
    return problem, ProblemSpec("cheeger", 3, N, Md, {"container": "polytope"})


def _ratio_graded(num: GradedValue, den: GradedValue) -> GradedValue:
    """Quotient rule for GradedValues (Hessian included when both carry one)."""
    if not den.value > 1e-12:
        # degenerate trial shape: let the line search reject it
        return GradedValue(np.inf, np.zeros_like(num.gradient), None)
    v = num.value / den.value
    grad = num.gradient / den.value - num.value * den.gradient / den.value**2
    hess = None
    if num.hessian is not None and den.hessian is not None:
        gn, gd = num.gradient, den.gradient
        d = den.value
        hess = (num.hessian / d
                - (np.outer(gn, gd) + np.outer(gd, gn)) / d**2
                - num.value * den.hessian / d**2
                + 2.0 * num.value * np.outer(gd, gd) / d**3)
    return GradedValue(v, grad, hess)


_BUILDERS = {
    "min_area_cw_2d": _min_area_cw_2d,
    "min_vol_cw_3d": _min_vol_cw_3d,
    "eig_convex": _eig_convex,
    "eig_cw_3d": _eig_cw_3d,
    "rotor_min": _rotor_min,
    "j_gamma": _j_gamma,
    "min_area_width_3d": _min_area_width_3d,
    "cheeger": _cheeger,
}

_REFERENCES = {
    "min_area_cw_2d": {
        "value": 2.0 * (np.pi - np.sqrt(3.0)),
        "tolerance": 0.005,
        "provenance": "closed form 2(pi - sqrt(3)): area of the width-2 Reuleaux triangle",
    },
    "min_vol_cw_3d": {
        "value": float(np.pi * (2.0 / 3.0 - np.sqrt(3.0) / 4.0 * np.arccos(1.0 / 3.0))),
        "tolerance": 0.05,
        "provenance": "closed form pi(2/3 - sqrt(3)/4 arccos(1/3)): Meissner body volume at width 1",
    },
    "eig_convex_lam2": {
        "value": 37.987,
        "tolerance": 0.02,
        "provenance": "literature value of min lambda_2 over unit-area convex sets (parametric search)",
    },
    "rotor_tetrahedron": {
        "value": 0.3936,
        "tolerance": 0.02,
        "provenance": "reported minimal volume of tetrahedron rotors at inradius 1/2",
    },
    "rotor_octahedron": {
        "value": 0.5041,
        "tolerance": 0.01,
        "provenance": "reported minimal volume of octahedron rotors at inradius 1/2",
    },
    "rotor_tetra_deg2": {
        "value": 0.4024,
        "tolerance": 0.01,
        "provenance": "reported minimal volume of degree-{1,2} tetrahedron rotors at inradius 1/2",
    },
    "min_area_width_3d": {
        "value": 2.9154,
        "tolerance": 0.02,
        "provenance": "reported minimal area of 3D bodies with width >= 1 (2.9249 is the prior record)",
    },
    "cheeger_square": {
        "value": float(2.0 + np.sqrt(np.pi)),
        "tolerance": 0.005,
        "provenance": "closed form 2 + sqrt(pi): rounded-square Cheeger set of the unit square",
    },
    "ball_unit_diameter_volume": {
        "value": float(np.pi / 6.0),
        "tolerance": 0.0,
        "provenance": "closed form pi/6: volume of the ball with unit diameter",
    },
}


def build(name: str, params: dict | None = None) -> NlpProblem:
    """Build a catalog problem; see :data:`PROBLEM_NAMES` for valid names."""
    problem, _ = build_with_spec(name, params)
    return problem


def build_with_spec(name: str, params: dict | None = None):
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownProblem(
            f"unknown problem {name!r}; catalog: {', '.join(PROBLEM_NAMES)}")
    try:
        return builder(params or {})
    except (InvalidParams, InvalidArgument):
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise InvalidParams(f"bad parameters for {name}: {exc}")


def reference_table() -> list[dict]:
    """Known target values with provenance, keyed by problem."""
    return [{"name": k, **v} for k, v in sorted(_REFERENCES.items())]


def canonicalize_2d(p: FourierSupport2D, samples: int = 4096) -> FourierSupport2D:
    """Rotate the shape so its width function peaks at theta = 0."""
    theta = np.pi * np.arange(samples) / samples
    widths = width(p, theta)
    t = float(theta[np.argmax(widths)])
    k = np.arange(1, p.degree + 1, dtype=float)
    c, s = np.cos(k * t), np.sin(k * t)
    return FourierSupport2D(p.a0, p.a * c + p.b * s, p.b * c - p.a * s)
