"""Deterministic constrained minimizer for coefficient-space shape problems.

The solver runs a Powell-Hestenes-Rockafellar augmented-Lagrangian outer
loop over all inequality constraints (linear rows and nonlinear residual
systems alike, in scaled >= 0 form) with an unconstrained modified-Newton
inner loop and Armijo backtracking, so the merit function decreases
monotonically across accepted steps.  Quadratic objectives supply exact
Hessians; otherwise the objective curvature is tracked by damped BFGS while
constraint curvature stays analytic.  Fixed coefficients are eliminated
before solving.  Everything is deterministic for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .constraints import CoefficientPattern, LinearConstraints, NonlinearConstraints
from .errors import AuditFailure, InfeasibleStart, InvalidArgument
from .functionals import GradedValue

__all__ = [
    "NlpProblem",
    "SolverOptions",
    "SolveReport",
    "solve",
    "audit_gradient",
    "multistart",
]


@dataclass
class NlpProblem:
    """Objective + constraint bundle over a full coefficient vector."""

    objective: callable  # full coeffs -> GradedValue
    pattern: CoefficientPattern
    start: np.ndarray
    linear: LinearConstraints | None = None
    nonlinear: NonlinearConstraints | None = None
    name: str = "problem"
    start_sampler: callable | None = None  # rng -> full coeffs

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        if self.start.shape != (self.pattern.n_total,):
            raise InvalidArgument("start length does not match the pattern")
        if not self.pattern.satisfied_by(self.start):
            raise InvalidArgument("start must satisfy the pattern's fixed entries exactly")


@dataclass
class SolverOptions:
    tol_kkt: float = 1e-7
    tol_feas: float = 1e-8
    max_iter: int = 500
    seed: int = 0
    audit: bool = True
    audit_tol: float = 1e-3
    rho0: float | None = None
    max_outer: int = 30
    inner_max: int = 200
    log_sink: callable | None = None

    @staticmethod
    def make(opts) -> "SolverOptions":
        if opts is None:
            return SolverOptions()
        if isinstance(opts, SolverOptions):
            return opts
        return SolverOptions(**opts)


@dataclass
class SolveReport:
    final: np.ndarray
    value: float
    kkt_residual: float
    max_violation: float
    iterations: int
    status: str  # converged | max_iter | infeasible
    multipliers: dict = field(default_factory=dict)
    name: str = ""
    seed: int | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "converged"


class _ReducedObjective:
    """Caches reduced objective evaluations keyed by the iterate bytes."""

    def __init__(self, fun, pattern: CoefficientPattern):
        self.fun = fun
        self.pattern = pattern
        self.free = list(pattern.free)
        self.cache = {}
        self.n_eval = 0

    def __call__(self, z: np.ndarray) -> GradedValue:
        key = z.tobytes()
        gv = self.cache.get(key)
        if gv is None:
            full = self.fun(self.pattern.expand(z))
            hess = None
            if full.hessian is not None:
                hess = full.hessian[np.ix_(self.free, self.free)]
            gv = GradedValue(full.value, full.gradient[self.free], hess)
            if len(self.cache) > 512:
                self.cache.clear()
            self.cache[key] = gv
            self.n_eval += 1
        return gv


class _ConstraintSet:
    """Stacked scaled >= 0 residual system over the reduced variables."""

    def __init__(self, problem: NlpProblem):
        pat = problem.pattern
        free = list(pat.free)
        base = pat.expand(np.zeros(pat.n_free))
        rows, rhs = [], []
        if problem.linear is not None and problem.linear.n_rows:
            A = problem.linear.matrix
            if A.shape[1] != pat.n_total:
                raise InvalidArgument("linear constraint width does not match the pattern")
            Af = A[:, free]
            shift = A @ base
            lo, up = problem.linear.lower, problem.linear.upper
            mask = np.isfinite(lo)
            rows.append(Af[mask])
            rhs.append(lo[mask] - shift[mask])
            mask = np.isfinite(up)
            rows.append(-Af[mask])
            rhs.append(-(up[mask] - shift[mask]))
        if rows:
            A = np.vstack(rows)
            b = np.concatenate(rhs)
            norms = np.linalg.norm(A, axis=1)
            degenerate = norms <= 1e-14
            if np.any(degenerate) and np.any(b[degenerate] > 1e-12):
                raise InfeasibleStart("a constraint on fixed coefficients is violated")
            keep = ~degenerate
            A, b, norms = A[keep], b[keep], norms[keep]
            self.A_lin = A / norms[:, None]
            self.b_lin = b / norms
            self.scale_lin = 1.0 / norms
        else:
            self.A_lin = np.zeros((0, pat.n_free))
            self.b_lin = np.zeros(0)
            self.scale_lin = np.zeros(0)

        self.nl = problem.nonlinear
        self.pattern = pat
        self.free = free
        if self.nl is not None:
            j0 = self.nl.jacobian(problem.start)[:, free]
            norms = np.maximum(np.linalg.norm(j0, axis=1), 1.0)
            self.scale_nl = 1.0 / norms
        else:
            self.scale_nl = np.zeros(0)
        self.n_lin = self.A_lin.shape[0]
        self.n_nl = 0 if self.nl is None else self.nl.n_rows
        self.n_rows = self.n_lin + self.n_nl

    def residual(self, z: np.ndarray) -> np.ndarray:
        parts = [self.A_lin @ z - self.b_lin]
        if self.nl is not None:
            parts.append(self.scale_nl * self.nl.residual(self.pattern.expand(z)))
        return np.concatenate(parts)

    def jacobian_nl(self, z: np.ndarray) -> np.ndarray:
        return self.scale_nl[:, None] * self.nl.jacobian(self.pattern.expand(z))[:, self.free]

    def raw_violation(self, g_scaled: np.ndarray) -> float:
        """Max violation in original residual units."""
        if self.n_rows == 0:
            return 0.0
        scale = np.concatenate([self.scale_lin, self.scale_nl])
        v = np.maximum(-g_scaled, 0.0) / scale
        return float(v.max()) if v.size else 0.0

    def weighted_hessian(self, w_nl: np.ndarray) -> np.ndarray | None:
        if self.nl is None or self.nl.weighted_hessian is None:
            return None
        h = self.nl.weighted_hessian(w_nl * self.scale_nl)
        return h[np.ix_(self.free, self.free)]


def _newton_direction(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Descent direction from the (modified) Newton system H d = -g.

    Positive definite H takes the Cholesky fast path; otherwise the
    absolute-value eigenvalue modification is used, which keeps Newton
    scaling along negative-curvature directions instead of collapsing to
    tiny gradient steps.
    """
    try:
        c, low = scipy.linalg.cho_factor(H, check_finite=False)
        d = scipy.linalg.cho_solve((c, low), -g, check_finite=False)
        if np.all(np.isfinite(d)):
            return d
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        pass
    w, q = scipy.linalg.eigh(H, check_finite=False)
    floor = 1e-8 * max(1.0, float(np.abs(w).max()))
    wa = np.maximum(np.abs(w), floor)
    return -q @ ((q.T @ g) / wa)


class _BfgsModel:
    """Damped BFGS approximation of the objective Hessian."""

    def __init__(self, n: int, gamma: float):
        self.B = gamma * np.eye(n)
        self.first = True

    def update(self, s: np.ndarray, y: np.ndarray):
        sy = float(s @ y)
        Bs = self.B @ s
        sBs = float(s @ Bs)
        if sBs <= 1e-16 or not np.isfinite(sBs):
            return
        if self.first and sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            self.B *= float(y @ y) / sy / self.B[0, 0]
            Bs = self.B @ s
            sBs = float(s @ Bs)
            self.first = False
        if sy < 0.2 * sBs:  # Powell damping keeps B positive definite
            theta = 0.8 * sBs / (sBs - sy)
            y = theta * y + (1.0 - theta) * Bs
            sy = float(s @ y)
        if sy <= 1e-16:
            return
        self.B += np.outer(y, y) / sy - np.outer(Bs, Bs) / sBs


class _AugLag:
    """One augmented-Lagrangian run over a reduced problem."""

    def __init__(self, objective: _ReducedObjective, cons: _ConstraintSet, opts: SolverOptions,
                 log_name: str = "", log_sink=None):
        self.objective = objective
        self.cons = cons
        self.opts = opts
        self.log_name = log_name
        self.log_sink = log_sink
        self.total_iters = 0

    def _phi(self, fval: float, g: np.ndarray, mu: np.ndarray, rho: float) -> float:
        t = np.maximum(mu - rho * g, 0.0)
        return fval + float(t @ t - mu @ mu) / (2.0 * rho)

    def run(self, z0: np.ndarray):
        opts = self.opts
        cons = self.cons
        z = z0.copy()
        gv = self.objective(z)
        use_newton = gv.hessian is not None
        bfgs = None
        if not use_newton:
            gamma = max(1.0, np.linalg.norm(gv.gradient) / max(1.0, np.linalg.norm(z)))
            bfgs = _BfgsModel(z.size, gamma)

        if cons.n_rows == 0:
            mu = np.zeros(0)
            rho = 1.0
        else:
            g = cons.residual(z)
            v0 = np.maximum(-g, 0.0)
            mu = np.zeros(cons.n_rows)
            if opts.rho0 is not None:
                rho = opts.rho0
            else:
                rho = 10.0 * max(1.0, abs(gv.value)) / max(1.0, 0.5 * float(v0 @ v0))
                if use_newton:
                    # penalty curvature must dominate any objective concavity,
                    # otherwise the AL is unbounded below along escape rays
                    lam_min = float(np.linalg.eigvalsh(gv.hessian).min()) if z.size else 0.0
                    rho = max(rho, 4.0 * max(0.0, -lam_min))
                rho = float(np.clip(rho, 1.0, 1e8))

        omega = max(10.0 * opts.tol_kkt, 1e-2 * (1.0 + float(np.abs(gv.gradient).max(initial=0.0))))
        v_prev = np.inf
        status = "max_iter"
        kkt = np.inf
        vmax = 0.0
        s_mult = np.zeros(cons.n_rows)
        z_safe, gv_safe = z.copy(), gv

        for outer in range(opts.max_outer):
            z, gv, reason = self._inner(z, gv, mu, rho, omega, bfgs, use_newton, outer)
            if cons.n_rows:
                g = cons.residual(z)
                v_scaled = float(np.maximum(-g, 0.0).max(initial=0.0))
            else:
                g = np.zeros(0)
                v_scaled = 0.0
            blown_up = (
                reason == "diverged"
                or not np.isfinite(gv.value)
                or v_scaled > 10.0 * max(1.0, v_prev if np.isfinite(v_prev) else 1.0)
            )
            if blown_up and cons.n_rows:
                # inner phase escaped along a concave direction: back off and
                # restart from the last sane iterate with a much stiffer penalty
                rho = min(rho * 25.0, 1e14)
                z, gv = z_safe.copy(), gv_safe
                if self.total_iters >= opts.max_iter or rho >= 1e14:
                    status = "max_iter"
                    g = cons.residual(z)
                    s_mult = np.maximum(mu - rho * g, 0.0)
                    vmax = cons.raw_violation(g)
                    kkt = self._kkt_residual(z, gv, s_mult)
                    break
                continue
            z_safe, gv_safe = z.copy(), gv
            if cons.n_rows:
                s_mult = np.maximum(mu - rho * g, 0.0)
                vmax = cons.raw_violation(g)
            else:
                vmax = 0.0
            kkt = self._kkt_residual(z, gv, s_mult)
            if vmax <= opts.tol_feas and kkt <= opts.tol_kkt:
                status = "converged"
                break
            if self.total_iters >= opts.max_iter:
                status = "max_iter"
                break
            if cons.n_rows:
                mu = np.minimum(s_mult, 1e12)
                if v_scaled > max(0.5 * v_prev, 0.9 * opts.tol_feas):
                    rho = min(rho * 5.0, 1e14)
                    if rho >= 1e14 and vmax > 1e3 * opts.tol_feas:
                        status = "infeasible"
                        break
                v_prev = v_scaled
            omega = max(opts.tol_kkt, 0.2 * omega)
        return {
            "z": z,
            "value": gv.value,
            "kkt": kkt,
            "vmax": vmax,
            "status": status,
            "mult": s_mult,
            "iters": self.total_iters,
        }

    def _kkt_residual(self, z, gv, s_mult) -> float:
        grad = gv.gradient.copy()
        cons = self.cons
        if cons.n_rows:
            sl = s_mult[: cons.n_lin]
            grad -= cons.A_lin.T @ sl
            if cons.n_nl:
                grad -= cons.jacobian_nl(z).T @ s_mult[cons.n_lin:]
        return float(np.abs(grad).max(initial=0.0))

    def _inner(self, z, gv, mu, rho, omega, bfgs, use_newton, outer):
        opts = self.opts
        cons = self.cons
        g = cons.residual(z) if cons.n_rows else np.zeros(0)
        phi = self._phi(gv.value, g, mu, rho)
        z_scale = 1.0 + float(np.linalg.norm(z))
        stagnant = 0
        plateau = 0
        for it in range(opts.inner_max):
            if self.total_iters >= opts.max_iter:
                return z, gv, "budget"
            s = np.maximum(mu - rho * g, 0.0)
            if cons.n_rows:
                jac_nl = cons.jacobian_nl(z) if cons.n_nl else None
                grad_phi = gv.gradient - cons.A_lin.T @ s[: cons.n_lin]
                if cons.n_nl:
                    grad_phi = grad_phi - jac_nl.T @ s[cons.n_lin:]
            else:
                jac_nl = None
                grad_phi = gv.gradient.copy()
            if float(np.abs(grad_phi).max(initial=0.0)) <= omega:
                return z, gv, "tol"
            H = gv.hessian.copy() if use_newton else bfgs.B.copy()
            if cons.n_rows:
                act_l = s[: cons.n_lin] > 0.0
                if np.any(act_l):
                    Aact = cons.A_lin[act_l]
                    H += rho * Aact.T @ Aact
                if cons.n_nl:
                    act_n = s[cons.n_lin:] > 0.0
                    if np.any(act_n):
                        Jact = jac_nl[act_n]
                        H += rho * Jact.T @ Jact
                        hw = cons.weighted_hessian(np.where(act_n, s[cons.n_lin:], 0.0))
                        if hw is not None:
                            H -= hw
            d = _newton_direction(H, grad_phi)
            slope = float(grad_phi @ d)
            if slope >= 0.0:
                d = -grad_phi
                slope = -float(grad_phi @ grad_phi)
            alpha = 1.0
            accepted = False
            for _ in range(60):
                z_try = z + alpha * d
                gv_try = self.objective(z_try)
                g_try = cons.residual(z_try) if cons.n_rows else np.zeros(0)
                phi_try = self._phi(gv_try.value, g_try, mu, rho)
                if np.isfinite(phi_try) and phi_try <= phi + 1e-4 * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                return z, gv, "linesearch"
            step = alpha * float(np.linalg.norm(d))
            if bfgs is not None:
                bfgs.update(z_try - z, gv_try.gradient - gv.gradient)
            drop = phi - phi_try
            plateau = plateau + 1 if drop <= 1e-13 * (1.0 + abs(phi)) else 0
            z, gv, g, phi = z_try, gv_try, g_try, phi_try
            self.total_iters += 1
            if self.log_sink is not None:
                self.log_sink({
                    "iteration": self.total_iters,
                    "outer": outer,
                    "value": gv.value,
                    "merit": phi,
                    "violation": cons.raw_violation(g) if cons.n_rows else 0.0,
                    "step_norm": step,
                    "problem": self.log_name,
                })
            if step <= 1e-14 * z_scale:
                stagnant += 1
                if stagnant >= 2:
                    return z, gv, "stagnant"
            else:
                stagnant = 0
            if plateau >= 4:
                return z, gv, "plateau"
            if np.linalg.norm(z) > 1e8 * z_scale:
                return z, gv, "diverged"
        return z, gv, "inner_max"


def _restore_feasibility(problem: NlpProblem, cons: _ConstraintSet, z0: np.ndarray,
                         opts: SolverOptions) -> np.ndarray:
    """Project the start onto the linear rows (nonlinear rows are left to AL)."""
    if cons.n_lin == 0:
        return z0
    v0 = np.maximum(cons.b_lin - cons.A_lin @ z0, 0.0)
    slack = 1e-8 * (1.0 + float(np.abs(cons.b_lin).max(initial=0.0)))
    if v0.max(initial=0.0) <= slack:
        return z0

    def dist_obj(c_full):
        z = problem.pattern.reduce(c_full)
        d = z - z0
        grad = np.zeros(problem.pattern.n_total)
        grad[list(problem.pattern.free)] = 2.0 * d
        hess = np.zeros((problem.pattern.n_total,) * 2)
        hess[np.ix_(list(problem.pattern.free), list(problem.pattern.free))] = 2.0 * np.eye(z0.size)
        return GradedValue(float(d @ d), grad, hess)

    sub = NlpProblem(dist_obj, problem.pattern, problem.pattern.expand(z0),
                     linear=problem.linear, name="restoration")
    sub_cons = _ConstraintSet(sub)
    sub_opts = replace(opts, audit=False, log_sink=None, max_iter=300, max_outer=25,
                       tol_kkt=max(opts.tol_kkt, 1e-9), rho0=None)
    core = _AugLag(_ReducedObjective(dist_obj, problem.pattern), sub_cons, sub_opts)
    out = core.run(z0)
    # the outer AL tolerates small residual infeasibility; only a projection
    # that stalls far from the rows marks the start as unrecoverable
    if out["vmax"] > max(1e-3 * (1.0 + float(np.abs(cons.b_lin).max(initial=0.0))), 1e3 * opts.tol_feas):
        raise InfeasibleStart(
            f"start violates linear constraints by {v0.max():.3e} and projection stalled at {out['vmax']:.3e}"
        )
    return out["z"]


def audit_gradient(problem: NlpProblem, point: np.ndarray, h: float = 1e-6) -> dict:
    """Compare analytic gradients against central finite differences.

    Audits the objective gradient and, when present, the nonlinear-constraint
    Jacobian at the given full coefficient vector; returns the elementwise
    worst relative error for each.
    """
    pat = problem.pattern
    point = np.asarray(point, dtype=float)
    z = pat.reduce(point)
    free = list(pat.free)

    gv = problem.objective(point)
    g_an = gv.gradient[free]
    g_fd = np.empty_like(g_an)
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g_fd[i] = (problem.objective(pat.expand(zp)).value
                   - problem.objective(pat.expand(zm)).value) / (2.0 * h)
    denom = max(1e-12, float(np.abs(g_an).max(initial=0.0)), float(np.abs(g_fd).max(initial=0.0)))
    obj_err = float(np.abs(g_an - g_fd).max(initial=0.0)) / denom

    con_err = 0.0
    if problem.nonlinear is not None:
        J_an = problem.nonlinear.jacobian(point)[:, free]
        J_fd = np.empty_like(J_an)
        for i in range(z.size):
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            J_fd[:, i] = (problem.nonlinear.residual(pat.expand(zp))
                          - problem.nonlinear.residual(pat.expand(zm))) / (2.0 * h)
        denom = max(1e-12, float(np.abs(J_an).max(initial=0.0)), float(np.abs(J_fd).max(initial=0.0)))
        con_err = float(np.abs(J_an - J_fd).max(initial=0.0)) / denom

    return {
        "objective_error": obj_err,
        "constraint_error": con_err,
        "max_rel_error": max(obj_err, con_err),
    }


def solve(problem: NlpProblem, opts=None) -> SolveReport:
    """Minimize the problem objective subject to its constraint systems.

    Returns a KKT point of the reduced problem; deterministic for fixed
    (problem, opts).  Raises :class:`AuditFailure` when the start-point
    gradient audit fails and :class:`InfeasibleStart` when the start cannot
    be projected onto the linear rows.
    """
    opts = SolverOptions.make(opts)
    if opts.audit:
        audit = audit_gradient(problem, problem.start)
        if audit["max_rel_error"] > opts.audit_tol:
            raise AuditFailure(
                f"gradient audit failed: max relative error {audit['max_rel_error']:.3e}"
            )
    cons = _ConstraintSet(problem)
    objective = _ReducedObjective(problem.objective, problem.pattern)
    z0 = problem.pattern.reduce(problem.start)
    z0 = _restore_feasibility(problem, cons, z0, opts)
    core = _AugLag(objective, cons, opts, log_name=problem.name, log_sink=opts.log_sink)
    out = core.run(z0)
    mult = out["mult"]
    multipliers = {
        "linear": mult[: cons.n_lin] * cons.scale_lin,
        "nonlinear": mult[cons.n_lin:] * cons.scale_nl,
    }
    return SolveReport(
        final=problem.pattern.expand(out["z"]),
        value=out["value"],
        kkt_residual=out["kkt"],
        max_violation=out["vmax"],
        iterations=out["iters"],
        status=out["status"],
        multipliers=multipliers,
        name=problem.name,
        seed=opts.seed,
    )


def multistart(problem_factory, n_starts: int, seed: int = 0, opts=None) -> list[SolveReport]:
    """Run :func:`solve` from ``n_starts`` seeded random initializations.

    ``problem_factory()`` must return a fresh :class:`NlpProblem`; its
    ``start_sampler`` (when set) draws each start.  Per-start failures are
    captured in the reports rather than aborting the batch; reports come
    back sorted by objective value with failed runs last.
    """
    if n_starts < 1:
        raise InvalidArgument("n_starts must be >= 1")
    opts = SolverOptions.make(opts)
    reports = []
    for i in range(n_starts):
        problem = problem_factory()
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        if i > 0 or problem.start_sampler is not None:
            if problem.start_sampler is not None:
                start = problem.start_sampler(rng)
            else:
                # fallback: decayed noise so high-frequency coefficients stay
                # small enough to be near-feasible for curvature constraints
                scale = 0.1 * max(1.0, float(np.abs(problem.start).max()))
                rank = np.arange(problem.pattern.n_total, dtype=float)
                noise = rng.uniform(-scale, scale, problem.pattern.n_total) / (1.0 + rank) ** 2
                start = problem.start + noise
                for k, v in problem.pattern.fixed.items():
                    start[k] = v
            problem.start = start
        run_opts = replace(opts, seed=i)
        try:
            reports.append(solve(problem, run_opts))
        except Exception as exc:  # noqa: BLE001 - per-start isolation is the contract
            reports.append(SolveReport(
                final=problem.start.copy(),
                value=np.inf,
                kkt_residual=np.inf,
                max_violation=np.inf,
                iterations=0,
                status="infeasible",
                name=problem.name,
                seed=i,
                error=f"{type(exc).__name__}: {exc}",
            ))
    reports.sort(key=lambda r: (not np.isfinite(r.value), r.value))
    return reports
