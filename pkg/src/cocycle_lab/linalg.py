"""Exact 2x2 SL(2,R) algebra and the canonical R.Z.R decomposition.

The fiber matrices of the skew product are R(phi).Z(lam) with R a rotation
and Z = diag(lam, 1/lam).  A product Z(l2).R(phi).Z(l1) admits a closed-form
singular decomposition R(psi - chi).Z(mu).R(chi); the intermediates
(a, b, c, beta) of that closed form drive all asymptotic estimates used
downstream, so they are exposed alongside the angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DET_TOL = 1e-6
MU_ONE_TOL = 1e-9

_SQRT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Input outside an operation's documented domain."""


class ContractViolation(ValueError):
    """Matrix violates the unit-determinant contract."""


@dataclass(frozen=True)
class Mat2:
    """A 2x2 real matrix; all constructors here produce determinant 1."""

    m11: float
    m12: float
    m21: float
    m22: float

    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    def frobenius(self) -> float:
        return math.sqrt(self.m11 ** 2 + self.m12 ** 2 + self.m21 ** 2 + self.m22 ** 2)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def inv(self) -> "Mat2":
        d = self.det()
        return Mat2(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d)

    def transpose(self) -> "Mat2":
        return Mat2(self.m11, self.m21, self.m12, self.m22)

    def apply(self, v):
        x, y = v
        return (self.m11 * x + self.m12 * y, self.m21 * x + self.m22 * y)

    def to_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @staticmethod
    def from_array(arr) -> "Mat2":
        a = np.asarray(arr, dtype=float)
        return Mat2(float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1]))

    def __neg__(self) -> "Mat2":
        return Mat2(-self.m11, -self.m12, -self.m21, -self.m22)


@dataclass(frozen=True)
class RZRDecomposition:
    """Angles and norm of the canonical form R(psi - chi).Z(mu).R(chi).

    psi and chi follow the closed-form branch conventions of
    ``rzr_decompose``; a, b, c, beta are the closed-form intermediates
    (None when the decomposition came from a raw matrix).  mu is always
    the operator norm.
    """

    psi: float
    chi: float
    mu: float
    a: float | None = None
    b: float | None = None
    c: float | None = None
    beta: float | None = None

    @property
    def phi_left(self) -> float:
        """Angle of the left rotation factor."""
        return self.psi - self.chi

    def reconstruct(self) -> Mat2:
        return rot(self.psi - self.chi) @ diag(self.mu) @ rot(self.chi)


def rot(phi: float) -> Mat2:
    """Rotation by phi: [[cos, sin], [-sin, cos]]."""
    if not math.isfinite(phi):
        raise DomainError(f"rotation angle must be finite, got {phi}")
    c, s = math.cos(phi), math.sin(phi)
    return Mat2(c, s, -s, c)


def diag(lam: float) -> Mat2:
    """Diagonal matrix diag(lam, 1/lam), lam > 0."""
    if not (lam > 0.0) or not math.isfinite(lam):
        raise DomainError(f"diagonal parameter must be positive and finite, got {lam}")
    return Mat2(lam, 0.0, 0.0, 1.0 / lam)


def zrz(lambda2: float, phi: float, lambda1: float) -> Mat2:
    """The product Z(lambda2).R(phi).Z(lambda1)."""
    return diag(lambda2) @ rot(phi) @ diag(lambda1)


def operator_norm(m: Mat2) -> float:
    """Largest singular value from the closed 2x2 formula.

    Uses s^2 = sum of squared entries together with the determinant:
    sigma_max = (sqrt(s^2 + 2|det|) + sqrt(s^2 - 2|det|)) / 2, which is
    exact and avoids cancellation for well-conditioned matrices.
    """
    s2 = m.m11 ** 2 + m.m12 ** 2 + m.m21 ** 2 + m.m22 ** 2
    d = abs(m.det())
    hi = math.sqrt(max(s2 + 2.0 * d, 0.0))
    lo = math.sqrt(max(s2 - 2.0 * d, 0.0))
    return 0.5 * (hi + lo)


def operator_norm_arrays(m: np.ndarray) -> np.ndarray:
    """Vectorized operator norm for an (..., 2, 2) array stack."""
    s2 = np.einsum("...ij,...ij->...", m, m)
    d = np.abs(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0])
    hi = np.sqrt(np.maximum(s2 + 2.0 * d, 0.0))
    lo = np.sqrt(np.maximum(s2 - 2.0 * d, 0.0))
    return 0.5 * (hi + lo)


def _lem1_intermediates(l2, phi, l1):
    """Closed-form intermediates beta, gamma, a, b, c, mu (array-safe)."""
    il1, il2 = 1.0 / l1 ** 2, 1.0 / l2 ** 2
    beta = (il1 + il2) / (1.0 + il1 * il2)
    gamma = (1.0 - il2 ** 2) / (1.0 + il1 * il2)
    cp, sp = np.cos(phi), np.sin(phi)
    dd = l2 ** 2 * cp ** 2 + beta * sp ** 2
    a = (l1 / l2) * dd / np.sqrt(cp ** 2 + beta ** 2 * sp ** 2)
    b = (l2 / l1) ** 2 * gamma * sp * cp / dd
    c = b ** 2 + 1.0 / a ** 2
    disc = np.maximum((1.0 + c) ** 2 - 4.0 / a ** 2, 0.0)
    mu = 0.5 * a * (1.0 + c + np.sqrt(disc))
    return beta, gamma, a, b, c, mu


def _chi_from_surd(b, c):
    """chi from the closed-form surd; |tan chi| < 1 so |chi| < pi/4.

    The sign is +eta/sqrt(...): the -eta variant reconstructs the transposed
    product under this rotation convention (checked against the 2x2 SVD).
    """
    one_minus_c = 1.0 - c
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = _SQRT2 * b / one_minus_c
        eta = np.where((b == 0.0) & (one_minus_c == 0.0), 0.0, eta)
        big = np.abs(eta) > 1e150
        eta_safe = np.where(big, 1.0, eta)
        tanchi = eta_safe / np.sqrt(1.0 + eta_safe ** 2 + np.sqrt(1.0 + 2.0 * eta_safe ** 2))
        tanchi = np.where(big, np.sign(eta), tanchi)
    return np.arctan(tanchi)


def _psi_branch(beta, phi):
    """tan psi = beta tan phi, on the branch continuous in phi, psi in [0, pi]."""
    return np.arctan2(beta * np.sin(phi), np.cos(phi))


def _wrap_half_pi(x):
    """Reduce mod pi into (-pi/2, pi/2]."""
    r = (x + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    return np.where(r <= -0.5 * math.pi, r + math.pi, r)


def rzr_decompose_arrays(lambda2, phi, lambda1, mu_one_tol: float = MU_ONE_TOL):
    """Vectorized closed-form decomposition of Z(l2).R(phi).Z(l1).

    Returns a dict of arrays psi, chi, mu, a, b, c, beta.  The printed
    closed form resolves the left angle correctly on its principal branch
    a >= 1; for a < 1 (possible when l2 > l1 near phi = pi/2) the same
    formulas are applied to the transposed product and mapped back, which
    keeps the reconstruction exact.  Inputs phi are reduced mod pi with a
    compensating pi-shift of psi, so any finite angle is accepted.
    """
    l2 = np.asarray(lambda2, dtype=float)
    l1 = np.asarray(lambda1, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(l1 <= 1.0) or np.any(l2 <= 1.0):
        raise DomainError("rzr_decompose requires lambda1 > 1 and lambda2 > 1")
    if not np.all(np.isfinite(phi)):
        raise DomainError("rzr_decompose requires a finite angle")

    l2, phi, l1 = np.broadcast_arrays(l2, phi, l1)
    kwrap = np.floor_divide(phi, math.pi)
    phi0 = phi - kwrap * math.pi  # in [0, pi)
    odd = (kwrap.astype(np.int64) % 2) != 0

    beta, gamma, a, b, c, mu = _lem1_intermediates(l2, phi0, l1)

    # principal branch
    psi_p = _psi_branch(beta, phi0)
    chi_p = _chi_from_surd(b, c)

    # The printed pair forces |chi| < pi/4, which matches the true right
    # singular direction iff sin^2(l2^4 - l1^4) <= cos^2(l1^4 l2^4 - 1);
    # outside that region decompose the transposed product
    # Z(l1).R(pi - phi).Z(l2) (always principal) and map back:
    # psi = pi - psi_t, chi = chi_t - psi_t reduced into (-pi/2, pi/2].
    beta_t, _, _, b_t, c_t, _ = _lem1_intermediates(l1, math.pi - phi0, l2)
    psi_t = _psi_branch(beta_t, math.pi - phi0)
    chi_t = _chi_from_surd(b_t, c_t)
    psi_s = math.pi - psi_t
    chi_s = _wrap_half_pi(chi_t - psi_t)

    cp0, sp0 = np.cos(phi0), np.sin(phi0)
    swap = sp0 ** 2 * (l2 ** 4 - l1 ** 4) > cp0 ** 2 * (l1 ** 4 * l2 ** 4 - 1.0)
    psi = np.where(swap, psi_s, psi_p)
    chi = np.where(swap, chi_s, chi_p)

    # degenerate mu ~ 1: the product is numerically a rotation; return the
    # polar angle with chi = 0 (the surd is 0/0 there)
    degen = mu <= 1.0 + mu_one_tol
    if np.any(degen):
        cp, sp = np.cos(phi0), np.sin(phi0)
        pm11 = l2 * cp * l1
        pm12 = l2 * sp / l1
        pm21 = -sp * l1 / l2
        pm22 = cp / (l1 * l2)
        polar = np.arctan2(0.5 * (pm12 - pm21), 0.5 * (pm11 + pm22))
        psi = np.where(degen, polar, psi)
        chi = np.where(degen, 0.0, chi)

    psi = np.where(odd, psi + math.pi, psi)
    return {"psi": psi, "chi": chi, "mu": mu, "a": a, "b": b, "c": c,
            "beta": beta, "gamma": gamma}


def rzr_decompose(lambda2: float, phi: float, lambda1: float,
                  mu_one_tol: float = MU_ONE_TOL) -> RZRDecomposition:
    """Closed-form decomposition Z(l2).R(phi).Z(l1) = R(psi-chi).Z(mu).R(chi).

    psi lies in [0, pi) for phi in [0, pi) (plus pi per odd pi-wrap of phi),
    chi in (-pi/2, pi/2] with |chi| < pi/4 on the principal branch a >= 1,
    and mu >= 1 is the operator norm of the product.
    """
    out = rzr_decompose_arrays(lambda2, phi, lambda1, mu_one_tol=mu_one_tol)
    return RZRDecomposition(
        psi=float(out["psi"]), chi=float(out["chi"]), mu=float(out["mu"]),
        a=float(out["a"]), b=float(out["b"]), c=float(out["c"]),
        beta=float(out["beta"]),
    )


def rzr_of_matrix(m: Mat2, det_tol: float = DET_TOL,
                  mu_one_tol: float = 1e-12) -> RZRDecomposition:
    """Singular decomposition R(Phi).Z(mu).R(chi) of an SL(2,R) matrix.

    chi is normalized into (-pi/2, pi/2] and Phi = psi - chi into (-pi, pi];
    for mu within mu_one_tol of 1 the matrix is treated as a rotation and
    (psi, chi) = (polar angle, 0).  The closed-form intermediates a, b, c,
    beta have no meaning here and are left unset.
    """
    d = m.det()
    # evaluating det of a large-norm double matrix cancels ~eps * ||M||^2,
    # so the unit-determinant guard must widen with the squared norm
    s2 = m.m11 ** 2 + m.m12 ** 2 + m.m21 ** 2 + m.m22 ** 2
    tol_eff = max(det_tol, 1e-13 * s2)
    if abs(d - 1.0) > tol_eff:
        raise ContractViolation(f"determinant {d} outside 1 +- {tol_eff}")

    # Cancellation-free 2x2 singular decomposition: with M = R(p).Z(mu).R(q),
    #   (E, -H) = ((mu + 1/mu)/2)(cos(p+q), sin(p+q)),
    #   (F, -G) = ((mu - 1/mu)/2)(cos(p-q), sin(p-q)).
    e = 0.5 * (m.m11 + m.m22)
    f = 0.5 * (m.m11 - m.m22)
    g = 0.5 * (m.m21 + m.m12)
    h = 0.5 * (m.m21 - m.m12)
    splus = math.hypot(e, h)
    sminus = math.hypot(f, g)
    mu = splus + sminus
    if mu <= 1.0 + mu_one_tol:
        psi = math.atan2(-h, e)
        return RZRDecomposition(psi=psi, chi=0.0, mu=mu)
    ang_sum = math.atan2(-h, e)        # p + q
    ang_diff = math.atan2(-g, f)       # p - q
    phi_left = 0.5 * (ang_sum + ang_diff)
    chi = 0.5 * (ang_sum - ang_diff)
    # normalize: chi into (-pi/2, pi/2], shifting both angles by pi if needed
    if chi > 0.5 * math.pi:
        chi -= math.pi
        phi_left += math.pi
    elif chi <= -0.5 * math.pi:
        chi += math.pi
        phi_left -= math.pi
    phi_left = (phi_left + math.pi) % (2.0 * math.pi) - math.pi
    if phi_left <= -math.pi:
        phi_left += 2.0 * math.pi
    return RZRDecomposition(psi=phi_left + chi, chi=chi, mu=mu)
