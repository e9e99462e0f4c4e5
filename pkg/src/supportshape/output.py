"""Result emitters: 17-digit JSON, boundary CSV, OBJ meshes, solve logs.

All files are written atomically (temp file + rename) so partially written
artifacts never appear under the target names.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .fourier2d import FourierSupport2D, boundary_point_2d
from .harmonics import HarmonicBasis
from .spherical3d import POLE_MARGIN, SphericalSupport3D, boundary_points_from_basis

__all__ = ["dump_json17", "write_json", "write_boundary_csv", "write_mesh_obj", "atomic_write"]


def _fmt_float(x: float) -> str:
    if np.isnan(x):
        return "NaN"
    if np.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def dump_json17(obj, indent: int = 0) -> str:
    """JSON text with every float rendered to 17 significant digits."""
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad_in}"{k}": {dump_json17(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) for v in seq):
            return "[" + ", ".join(dump_json17(v) for v in seq) + "]"
        items = ",\n".join(pad_in + dump_json17(v, indent + 1) for v in seq)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    text = str(obj).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{text}"'


def atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, payload: dict):
    atomic_write(path, dump_json17(payload) + "\n")


def write_boundary_csv(path: str, shape: FourierSupport2D, samples: int = 2048):
    theta = 2.0 * np.pi * np.arange(samples) / samples
    pts = boundary_point_2d(shape, theta)
    lines = ["theta,x,y"]
    lines += [
        f"{_fmt_float(t)},{_fmt_float(x)},{_fmt_float(y)}"
        for t, (x, y) in zip(theta, pts)
    ]
    atomic_write(path, "\n".join(lines) + "\n")


def write_mesh_obj(path: str, shape: SphericalSupport3D,
                   n_phi: int = 128, n_psi: int = 64):
    """Triangulated boundary surface with fan-stitched pole caps.

    The structured grid stays outside the pole band; the two caps close the
    mesh with fans meeting at the analytic pole points p(pole) * n(pole).
    """
    phi = -np.pi + 2.0 * np.pi * np.arange(n_phi) / n_phi
    psi = np.linspace(POLE_MARGIN, np.pi - POLE_MARGIN, n_psi)
    PH, PS = np.meshgrid(phi, psi, indexing="ij")
    basis = HarmonicBasis(PH.ravel(), PS.ravel(), shape.degree)
    verts = boundary_points_from_basis(basis, shape.coeffs)

    # analytic pole contacts: the support point along +-z
    top_basis = HarmonicBasis(np.array([0.0]), np.array([0.0]), shape.degree, derivs=False)
    bot_basis = HarmonicBasis(np.array([0.0]), np.array([np.pi]), shape.degree, derivs=False)
    p_top = float(top_basis.y @ shape.coeffs)
    p_bot = float(bot_basis.y @ shape.coeffs)
    pole_top = np.array([0.0, 0.0, p_top])
    pole_bot = np.array([0.0, 0.0, -p_bot])

    lines = ["# convex body boundary mesh"]
    for v in verts:
        lines.append(f"v {_fmt_float(v[0])} {_fmt_float(v[1])} {_fmt_float(v[2])}")
    lines.append(f"v {_fmt_float(pole_top[0])} {_fmt_float(pole_top[1])} {_fmt_float(pole_top[2])}")
    lines.append(f"v {_fmt_float(pole_bot[0])} {_fmt_float(pole_bot[1])} {_fmt_float(pole_bot[2])}")
    idx_top = n_phi * n_psi + 1
    idx_bot = n_phi * n_psi + 2

    def vid(i, j):  # 1-based OBJ index of grid vertex (i: phi, j: psi)
        return (i % n_phi) * n_psi + j + 1

    faces = []
    for i in range(n_phi):
        for j in range(n_psi - 1):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    for i in range(n_phi):  # pole caps
        faces.append((idx_top, vid(i + 1, 0), vid(i, 0)))
        faces.append((idx_bot, vid(i, n_psi - 1), vid(i + 1, n_psi - 1)))
    lines += [f"f {a} {b} {c}" for a, b, c in faces]
    atomic_write(path, "\n".join(lines) + "\n")
