"""Real orthonormal spherical harmonics and their angular derivatives.

Conventions
-----------
Harmonics are indexed by degree l and order m, flattened as
``index = l*l + l + m`` for 0 <= l <= N, -l <= m <= l.  With
``C_l^m = sqrt((2l+1)(l-|m|)! / (4 pi (l+|m|)!))`` and P_l^m the associated
Legendre functions (no Condon-Shortley phase),

    Y_l^m(psi, phi) = sqrt(2) C_l^m cos(m phi) P_l^m(cos psi)   (m > 0)
                    = C_l^0 P_l^0(cos psi)                      (m = 0)
                    = sqrt(2) C_l^m sin(|m| phi) P_l^|m|(cos psi)  (m < 0)

which is an orthonormal family on the unit sphere.  Values are computed by
the stable order-by-order normalized recurrence (the normalization is folded
into the recurrence, so no rescaling is needed up to degree ~40); psi
derivatives divide by sin(psi) and must stay outside the pole band.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

__all__ = ["lm_index", "index_lm", "degree_of_index", "n_harmonics", "HarmonicBasis"]

DERIV_NAMES = ("none", "phi", "psi", "phiphi", "psipsi", "phipsi")


def n_harmonics(degree: int) -> int:
    return (degree + 1) ** 2


def lm_index(l: int, m: int) -> int:
    """Flat index of harmonic (l, m)."""
    if not (0 <= abs(m) <= l):
        raise InvalidArgument(f"invalid harmonic indices l={l}, m={m}")
    return l * l + l + m


def index_lm(index: int) -> tuple[int, int]:
    """Inverse of :func:`lm_index`."""
    l = int(np.floor(np.sqrt(index)))
    return l, index - l * l - l


def degree_of_index(indices) -> np.ndarray:
    """Degree l of each flat index (vectorized)."""
    idx = np.asarray(indices)
    return np.floor(np.sqrt(idx)).astype(int)


def _legendre_block(degree: int, t: np.ndarray, u: np.ndarray, derivs: bool):
    """Normalized associated Legendre values NP_lm(t) = C_l^m P_l^m(t).

    Returns (NP, D, S): each a list-of-lists indexed [m][l - m] of arrays over
    the evaluation points, where D = d NP / d psi and S = d^2 NP / d psi^2
    (t = cos psi, u = sin psi).  D and S are None when ``derivs`` is False.
    """
    NP = [[None] * (degree + 1 - m) for m in range(degree + 1)]
    NP[0][0] = np.full_like(t, 1.0 / np.sqrt(4.0 * np.pi))
    for m in range(1, degree + 1):
        NP[m][0] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * u * NP[m - 1][0]
    for m in range(degree + 1):
        if m + 1 <= degree:
            NP[m][1] = np.sqrt(2.0 * m + 3.0) * t * NP[m][0]
        for l in range(m + 2, degree + 1):
            alm = np.sqrt((2.0 * l + 1.0) * (2.0 * l - 1.0) / ((l - m) * (l + m)))
            blm = np.sqrt(
                (2.0 * l + 1.0) * (l - 1.0 - m) * (l - 1.0 + m)
                / ((2.0 * l - 3.0) * (l - m) * (l + m))
            )
            NP[m][l - m] = alm * t * NP[m][l - m - 1] - blm * NP[m][l - m - 2]
    if not derivs:
        return NP, None, None

    inv_u = 1.0 / u
    D = [[None] * (degree + 1 - m) for m in range(degree + 1)]
    S = [[None] * (degree + 1 - m) for m in range(degree + 1)]
    for m in range(degree + 1):
        for l in range(m, degree + 1):
            if l == m:
                # NP_mm ~ u^m: f_lm vanishes and the lower entry is absent
                D[m][0] = m * t * inv_u * NP[m][0] if m > 0 else np.zeros_like(t)
            else:
                flm = np.sqrt((l * l - m * m) * (2.0 * l + 1.0) / (2.0 * l - 1.0))
                D[m][l - m] = inv_u * (l * t * NP[m][l - m] - flm * NP[m][l - m - 1])
            # Legendre ODE: second psi-derivative from value and slope
            S[m][l - m] = -t * inv_u * D[m][l - m] - (
                l * (l + 1.0) - (m * inv_u) ** 2
            ) * NP[m][l - m]
    return NP, D, S


class HarmonicBasis:
    """Evaluation matrices of all harmonics up to ``degree`` at fixed points.

    Matrices are (n_points, (degree+1)^2); columns follow the flat (l, m)
    index.  ``y`` holds values; ``dphi``/``dpsi``/``dphiphi``/``dpsipsi``/
    ``dpsiphi`` the partial derivatives (built only when ``derivs`` is True,
    and only valid away from the poles).
    """

    def __init__(self, phi, psi, degree: int, derivs: bool = True):
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        if phi.shape != psi.shape or phi.ndim != 1:
            raise InvalidArgument("phi/psi must be equal-length 1-d arrays")
        if degree < 0:
            raise InvalidArgument("degree must be >= 0")
        self.phi = phi
        self.psi = psi
        self.degree = degree
        self.has_derivs = derivs
        M, K = phi.size, n_harmonics(degree)
        t, u = np.cos(psi), np.sin(psi)
        self.sin_psi = u
        self.cos_psi = t
        NP, D, S = _legendre_block(degree, t, u, derivs)

        self.y = np.empty((M, K))
        if derivs:
            self.dphi = np.zeros((M, K))
            self.dpsi = np.empty((M, K))
            self.dphiphi = np.empty((M, K))
            self.dpsipsi = np.empty((M, K))
            self.dpsiphi = np.zeros((M, K))

        sq2 = np.sqrt(2.0)
        for m in range(degree + 1):
            if m > 0:
                az_c = sq2 * np.cos(m * phi)
                az_s = sq2 * np.sin(m * phi)
            for l in range(m, degree + 1):
                np_lm = NP[m][l - m]
                if m == 0:
                    j = lm_index(l, 0)
                    self.y[:, j] = np_lm
                    if derivs:
                        self.dpsi[:, j] = D[m][l - m]
                        self.dpsipsi[:, j] = S[m][l - m]
                        self.dphiphi[:, j] = 0.0
                    continue
                jc, js = lm_index(l, m), lm_index(l, -m)
                self.y[:, jc] = az_c * np_lm
                self.y[:, js] = az_s * np_lm
                if derivs:
                    d, s2 = D[m][l - m], S[m][l - m]
                    self.dphi[:, jc] = -m * az_s * np_lm
                    self.dphi[:, js] = m * az_c * np_lm
                    self.dpsi[:, jc] = az_c * d
                    self.dpsi[:, js] = az_s * d
                    self.dphiphi[:, jc] = -(m * m) * self.y[:, jc]
                    self.dphiphi[:, js] = -(m * m) * self.y[:, js]
                    self.dpsipsi[:, jc] = az_c * s2
                    self.dpsipsi[:, js] = az_s * s2
                    self.dpsiphi[:, jc] = -m * az_s * d
                    self.dpsiphi[:, js] = m * az_c * d

    def matrix(self, deriv: str = "none") -> np.ndarray:
        if deriv not in DERIV_NAMES:
            raise InvalidArgument(f"deriv must be one of {DERIV_NAMES}")
        if deriv == "none":
            return self.y
        if not self.has_derivs:
            raise InvalidArgument("basis was built without derivatives")
        return {
            "phi": self.dphi,
            "psi": self.dpsi,
            "phiphi": self.dphiphi,
            "psipsi": self.dpsipsi,
            "phipsi": self.dpsiphi,
        }[deriv]

    def jacobian_forms(self):
        """Linear forms (R1, R2, R3) of the surface Jacobian.

        With u1 = R1 c, u2 = R2 c, u3 = R3 c for coefficients c, the surface
        Jacobian at each point is  u1 * u2 - u3^2 / sin(psi), i.e. the
        Gaussian-curvature positivity expression.  Cached after first call.
        """
        if not self.has_derivs:
            raise InvalidArgument("basis was built without derivatives")
        try:
            return self._jac_forms
        except AttributeError:
            pass
        u = self.sin_psi[:, None]
        t = self.cos_psi[:, None]
        r1 = u * self.y + self.dphiphi / u + t * self.dpsi
        r2 = self.y + self.dpsipsi
        r3 = self.dpsiphi - (t / u) * self.dphi
        self._jac_forms = (r1, r2, r3)
        return self._jac_forms
