"""Command-line front end: run catalog problems and verify the toolkit.

``supportshape run`` executes one catalog problem from a config document
and/or flag overrides, writing result.json, geometry files and a solve log;
``supportshape verify`` runs the built-in oracle suites and prints a
pass/fail table.  Exit codes: 0 converged / all passed, 1 configuration
error, 2 iteration limit, 3 infeasible.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import problems
from .errors import SupportShapeError
from .fourier2d import FourierSupport2D
from .nlp import SolverOptions, multistart
from .output import write_boundary_csv, write_json, write_mesh_obj
from .spherical3d import SphericalSupport3D

EMIT_CHOICES = ("json", "boundary_csv", "mesh_obj", "log")


@dataclass
class RunConfig:
    problem: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    starts: int = 1
    out: str = "."
    emit: tuple = ("json", "log")
    solver: dict = field(default_factory=dict)

    @staticmethod
    def load(path: str | None, overrides: dict) -> "RunConfig":
        doc = {}
        if path:
            with open(path) as fh:
                doc = yaml.safe_load(fh) or {}
            if not isinstance(doc, dict):
                raise SupportShapeError("config document must be a mapping")
        params = dict(doc.get("params") or {})
        for key in ("width", "gamma", "k", "degree", "grid", "container", "kind", "inradius"):
            if key in doc:
                params[key] = doc[key]
            if overrides.get(key) is not None:
                params[key] = overrides[key]
        problem = overrides.get("problem") or doc.get("problem")
        if not problem:
            raise SupportShapeError("no problem selected; pass --problem or a config file")
        emit = overrides.get("emit") or doc.get("emit") or ("json", "log")
        if isinstance(emit, str):
            emit = tuple(s.strip() for s in emit.split(",") if s.strip())
        bad = set(emit) - set(EMIT_CHOICES)
        if bad:
            raise SupportShapeError(f"unknown emit targets {sorted(bad)}; valid: {EMIT_CHOICES}")
        return RunConfig(
            problem=problem,
            params=params,
            seed=int(overrides.get("seed") if overrides.get("seed") is not None
                     else doc.get("seed", 0)),
            starts=int(overrides.get("starts") if overrides.get("starts") is not None
                       else doc.get("starts", 1)),
            out=overrides.get("out") or doc.get("out") or ".",
            emit=tuple(emit),
            solver=dict(doc.get("solver") or {}),
        )


def run(config: RunConfig) -> int:
    """Execute one catalog problem and emit the requested artifacts."""
    try:
        problem, spec = problems.build_with_spec(config.problem, config.params)
    except SupportShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(config.out, exist_ok=True)

    log_lines = []

    def sink(rec):
        log_lines.append(
            "iteration={iteration} outer={outer} value={value:.12g} merit={merit:.12g} "
            "violation={violation:.3e} step_norm={step_norm:.3e}".format(**rec)
        )

    opts = SolverOptions.make({"log_sink": sink, **config.solver})
    reports = multistart(lambda: problems.build(config.problem, config.params),
                         config.starts, seed=config.seed, opts=opts)
    best = reports[0]

    reference = None
    if spec.reference is not None:
        rel = abs(best.value - spec.reference["value"]) / max(1e-300, abs(spec.reference["value"]))
        reference = {**spec.reference, "relative_error": rel}

    shape_payload: dict = {}
    if spec.dim == 2:
        shape = problems.canonicalize_2d(FourierSupport2D.from_coeffs(best.final))
        shape_payload["canonical_coefficients"] = shape.coeffs()
    else:
        shape = SphericalSupport3D(best.final, spec.degree)

    if "json" in config.emit:
        payload = {
            "schema_version": 1,
            "problem": config.problem,
            "params": {k: v for k, v in sorted(config.params.items())},
            "degree": spec.degree,
            "grid_size": spec.grid_size,
            "seed": config.seed,
            "starts": config.starts,
            "value": best.value,
            "status": best.status,
            "kkt_residual": best.kkt_residual,
            "max_violation": best.max_violation,
            "iterations": best.iterations,
            "reference": reference,
            "coefficients": best.final,
            **shape_payload,
            "all_start_values": [r.value for r in reports],
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        write_json(os.path.join(config.out, "result.json"), payload)
    if "boundary_csv" in config.emit and spec.dim == 2:
        write_boundary_csv(os.path.join(config.out, "boundary.csv"), shape)
    if "mesh_obj" in config.emit and spec.dim == 3:
        write_mesh_obj(os.path.join(config.out, "mesh.obj"), shape)
    if "log" in config.emit:
        from .output import atomic_write

        atomic_write(os.path.join(config.out, "solve.log"), "\n".join(log_lines) + "\n")

    print(f"{config.problem}: value={best.value:.10g} status={best.status} "
          f"violation={best.max_violation:.2e}")
    if reference is not None:
        print(f"reference {reference['value']:.6g} ({reference['provenance']}); "
              f"relative error {reference['relative_error']:.3%}")
    return {"converged": 0, "max_iter": 2, "infeasible": 3}.get(best.status, 2)


def _verify_suites(selected: str, corrupt: bool) -> list[tuple[str, bool, str]]:
    from scipy.special import jn_zeros

    from .functionals import area_2d, area_3d, perimeter_2d, volume_cw_3d, volume_general_3d
    from .mfs import find_eigenvalues
    from .nlp import NlpProblem, audit_gradient
    from .spheregrid import make_sphere_grid
    from .constraints import CoefficientPattern

    checks = []

    def geometry():
        ball = SphericalSupport3D.ball(0.5, 3)
        vol = volume_general_3d(ball, make_sphere_grid(4000), with_hessian=False).value
        ok1 = abs(vol - np.pi / 6.0) < 1e-6
        ok2 = abs(area_3d(ball).value - np.pi) < 1e-12
        disk = FourierSupport2D.disk(1.0, 2)
        ok3 = abs(area_2d(disk).value - np.pi) < 1e-12
        ok4 = abs(perimeter_2d(disk).value - 2 * np.pi) < 1e-12
        return ok1 and ok2 and ok3 and ok4, f"ball volume {vol:.8f} vs pi/6"

    def gradients():
        rng = np.random.default_rng(0)
        n = 9
        c = rng.normal(size=2 * n + 1) * 0.05
        c[0] = 1.0
        if corrupt:
            c = c  # corruption applied to the gradient below

        def obj(coeffs):
            gv = area_2d(FourierSupport2D.from_coeffs(coeffs))
            if corrupt:
                gv.gradient = gv.gradient + 0.05
            return gv

        prob = NlpProblem(obj, CoefficientPattern(2 * n + 1), c, name="verify")
        rep = audit_gradient(prob, c)
        return rep["max_rel_error"] < 1e-6, f"area gradient FD error {rep['max_rel_error']:.2e}"

    def spectra():
        disk = FourierSupport2D.disk(1.0, 2)
        scan = find_eigenvalues(disk, (4.0, 7.0), 1)
        lam1 = scan[0].lam
        target = jn_zeros(0, 1)[0] ** 2
        ok = abs(lam1 - target) / target < 1e-3
        return ok, f"disk lambda_1 {lam1:.5f} vs {target:.5f}"

    suites = {"geometry": geometry, "gradients": gradients, "spectra": spectra}
    for name, fn in suites.items():
        if selected not in ("all", name):
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - verification reports, never raises
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        checks.append((name, ok, detail))
    return checks


def verify(suite: str = "all", corrupt: bool = False) -> int:
    checks = _verify_suites(suite, corrupt)
    width_name = max(len(n) for n, _, _ in checks)
    for name, ok, detail in checks:
        print(f"{name:<{width_name}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return 0 if all(ok for _, ok, _ in checks) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="supportshape",
                                     description="support-function shape optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a catalog problem")
    p_run.add_argument("--config", help="YAML/JSON config document")
    p_run.add_argument("--problem", help=f"one of {', '.join(problems.PROBLEM_NAMES)}")
    p_run.add_argument("--width", type=float)
    p_run.add_argument("--gamma", type=float)
    p_run.add_argument("--k", type=int)
    p_run.add_argument("--degree", type=int)
    p_run.add_argument("--grid", type=int)
    p_run.add_argument("--kind", help="rotor kind, e.g. tetrahedron or polygon-3")
    p_run.add_argument("--container", help="cheeger container name")
    p_run.add_argument("--inradius", type=float)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--starts", type=int)
    p_run.add_argument("--out")
    p_run.add_argument("--emit", help=f"comma list from {','.join(EMIT_CHOICES)}")

    p_ver = sub.add_parser("verify", help="run the oracle suites")
    p_ver.add_argument("--suite", default="all", choices=("all", "geometry", "gradients", "spectra"))
    p_ver.add_argument("--inject-corruption", action="store_true", help=argparse.SUPPRESS)

    args = parser.parse_args(argv)
    if args.command == "verify":
        return verify(args.suite, args.inject_corruption)
    try:
        config = RunConfig.load(args.config, vars(args))
    except (SupportShapeError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
