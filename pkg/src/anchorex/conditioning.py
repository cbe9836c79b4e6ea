"""Deterministic extrapolation condition numbers.

``kappa_classical``  d * max ||phi_k||_Xi^2 / min ||phi_k||_Omega^2 for a basis
                     orthogonal on Omega.
``kappa_spec``       largest eigenvalue of the Xi Gram matrix of the
                     Omega-orthonormal basis; attained by its top eigenvector.
``kappa_r``          d M / (1 - d M) with M the largest squared Xi norm of the
                     basis orthonormalized on Omega u Xi, when d M <= 1.

Each bounds E_Xi <= kappa * E_Omega for squared errors inside the span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .bases import BasisFamily, OrthonormalBasis, orthonormalize_gram, whiten
from .errors import NonConvergence, NotOrthogonalOnOmega, ValidationError
from .geometry import Region


def _off_norm(A: np.ndarray) -> float:
    # summed directly; subtracting the diagonal from the full norm cancels badly
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def symmetric_eigen(matrix, max_sweeps: int = 100, tol: float = 1e-15):
    """Cyclic Jacobi eigensolver with threshold pivoting.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns. Rotations sweep ``(p, q)`` in row-major order;
    during the first three sweeps an off-diagonal entry is rotated only if it
    exceeds ``0.2 * off / d^2``.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("symmetric_eigen needs a square matrix")
    scale = np.abs(A).max() if A.size else 0.0
    if scale and np.abs(A - A.T).max() > 1e-10 * scale:
        raise ValidationError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    d = A.shape[0]
    V = np.eye(d)
    if d == 1 or scale == 0.0:
        return np.diag(A).copy(), V
    fro = np.linalg.norm(A)
    for sweep in range(max_sweeps):
        off = _off_norm(A)
        if off <= tol * fro:
            break
        thresh = 0.2 * off / (d * d) if sweep < 3 else 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= thresh or apq == 0.0:
                    continue
                diff = float(A[q, q] - A[p, p])
                if abs(apq) < 1e-150 * abs(diff):
                    t = float(apq) / diff  # theta would overflow; t ~ 1 / (2 theta)
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = A[p].copy(), A[q].copy()
                A[p], A[q] = c * rp - s * rq, s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        off = _off_norm(A)
        if off > 1e-12 * fro:
            raise NonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def _off_diagonal_ratio(G: np.ndarray) -> float:
    diag = np.sqrt(np.abs(np.diag(G)))
    rel = np.abs(G) / np.outer(diag, diag)
    np.fill_diagonal(rel, 0.0)
    return float(rel.max()) if rel.size else 0.0


def kappa_classical_gram(g_omega: np.ndarray, g_xi: np.ndarray, orth_tol: float = 1e-6):
    """``(kappa, m_omega, M_xi)`` from raw Gram matrices."""
    ratio = _off_diagonal_ratio(g_omega)
    if ratio > orth_tol:
        raise NotOrthogonalOnOmega(f"basis is not orthogonal on Omega (max |cos| = {ratio:.3e})")
    d = g_omega.shape[0]
    m_omega = float(np.min(np.diag(g_omega)))
    M_xi = float(np.max(np.diag(g_xi)))
    return d * M_xi / m_omega, m_omega, M_xi


def kappa_classical(basis: BasisFamily, omega: Region, xi: Region, orth_tol: float = 1e-6) -> float:
    gp = geometry.gram_matrices(basis, omega, xi)
    return kappa_classical_gram(gp.g_omega, gp.g_xi, orth_tol)[0]


def spectral_pair(onb: OrthonormalBasis) -> tuple[float, np.ndarray]:
    """Top eigenpair of the whitened Xi Gram matrix."""
    w, V = symmetric_eigen(onb.g_tilde_xi)
    return float(w[0]), V[:, 0]


def kappa_spec(onb: OrthonormalBasis) -> float:
    return spectral_pair(onb)[0]


def inner_domain_mhat(g_omega: np.ndarray, g_xi: np.ndarray) -> float:
    """Largest squared Xi norm after orthonormalizing on Omega u Xi."""
    W, _ = whiten(g_omega + g_xi)
    return float(np.max(np.diag(W.T @ g_xi @ W)))


def kappa_r_from_mhat(m_hat: float, d: int) -> float | None:
    dm = d * m_hat
    if dm > 1.0:
        return None
    return math.inf if dm == 1.0 else dm / (1.0 - dm)


def kappa_r(basis: BasisFamily, omega: Region, xi: Region) -> float | None:
    gp = geometry.gram_matrices(basis, omega, xi)
    return kappa_r_from_mhat(inner_domain_mhat(gp.g_omega, gp.g_xi), basis.d)


def certified_radius(kappa: float, e_omega_estimate: float) -> float:
    if kappa < 0 or e_omega_estimate < 0:
        raise ValidationError("certified_radius needs nonnegative kappa and error estimate")
    return math.sqrt(kappa) * e_omega_estimate


@dataclass
class CertificationReport:
    kappa_classical: float
    kappa_spec: float
    kappa_r: float | None
    spectrum: np.ndarray
    m_omega: float
    m_xi_max: float
    m_hat_xi: float
    condition_flag_r: bool
    kappa_basis: str = "raw"  # "raw" or "orthonormalized" (see certify)
    top_direction: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa_classical,
            "kappa_spec": self.kappa_spec,
            "kappa_r": self.kappa_r,
            "condition_flag_r": self.condition_flag_r,
            "spectrum": [float(v) for v in self.spectrum],
            "m_omega": self.m_omega,
            "m_xi_max": self.m_xi_max,
            "m_hat_xi": self.m_hat_xi,
            "kappa_basis": self.kappa_basis,
        }


def certify(basis: BasisFamily, omega: Region, xi: Region, orth_tol: float = 1e-6) -> CertificationReport:
    """All three constants for one (basis, Omega, Xi) configuration.

    The classical constant needs an Omega-orthogonal basis. When ``basis`` is
    not orthogonal (Chebyshev, say) it is evaluated on the Omega-orthonormal
    Gram-Schmidt basis instead and ``kappa_basis`` says so.
    """
    geometry.check_disjoint(omega, xi)
    gp = geometry.gram_matrices(basis, omega, xi)
    onb = orthonormalize_gram(basis, gp.g_omega, gp.g_xi)
    w, V = symmetric_eigen(onb.g_tilde_xi)
    try:
        k, m_o, M_x = kappa_classical_gram(gp.g_omega, gp.g_xi, orth_tol)
        kb = "raw"
    except NotOrthogonalOnOmega:
        k, m_o, M_x = kappa_classical_gram(np.eye(onb.d), onb.g_tilde_xi, np.inf)
        kb = "orthonormalized"
    m_hat = inner_domain_mhat(gp.g_omega, gp.g_xi)
    kr = kappa_r_from_mhat(m_hat, basis.d)
    return CertificationReport(k, float(w[0]), kr, w, m_o, M_x, m_hat, basis.d * m_hat <= 1.0, kb, V[:, 0])
