"""Basis families and Omega-orthonormalization.

Families
--------
``legendre_affine(d, omega)`` / ``chebyshev_affine(d, omega)``
    ``phi_k(t) = P_k((t - beta) / alpha)`` with ``alpha = (hi - lo)/2`` and
    ``beta = (hi + lo)/2``; for ``omega = (-1, c)`` this is
    ``alpha = (c+1)/2, beta = (c-1)/2``. ``omega = (-1, 1)`` gives the
    canonical polynomials. Evaluated by three-term recurrence.
``real_spherical_harmonics(l_max)``
    Orthonormal real harmonics on S^2, ordered ``(l, m)`` with
    ``m = -l..l``. Convention: ``Y_{l,m} = sqrt(2) (-1)^m Re Y_l^m`` for
    ``m > 0``, ``sqrt(2) (-1)^m Im Y_l^{|m|}`` for ``m < 0``, which cancels the
    Condon-Shortley phase carried by the complex harmonics.
``sine2d(K, modes)``
    ``sin(pi kx x) sin(pi ky y)``; ``modes`` defaults to all of ``{1..K}^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import sph_harm_y

from . import geometry
from .errors import SingularGram, ValidationError
from .geometry import QuadratureGrid, Region

FAMILIES = ("legendre_affine", "chebyshev_affine", "real_spherical_harmonics", "sine2d")


@dataclass(frozen=True)
class BasisFamily:
    family: str
    params: tuple
    indices: tuple[int, ...] | None = None  # sub-basis selection, in parent order

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown basis family {self.family!r}")
        if self.indices is not None:
            idx = tuple(int(i) for i in self.indices)
            if len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= self.full_dim:
                raise ValidationError(f"bad sub-basis indices {idx}")
            object.__setattr__(self, "indices", idx)

    @property
    def full_dim(self) -> int:
        if self.family in ("legendre_affine", "chebyshev_affine"):
            return int(self.params[0])
        if self.family == "real_spherical_harmonics":
            return (int(self.params[0]) + 1) ** 2
        return len(self.params[1])

    @property
    def d(self) -> int:
        return self.full_dim if self.indices is None else len(self.indices)

    @property
    def ambient_dim(self) -> int:
        return {"real_spherical_harmonics": 3, "sine2d": 2}.get(self.family, 1)

    def subset(self, indices: Sequence[int]) -> "BasisFamily":
        """Sub-basis of this family (indices refer to the full family)."""
        return BasisFamily(self.family, self.params, tuple(sorted(int(i) for i in indices)))

    def evaluate(self, points) -> np.ndarray:
        """``(d, n)`` matrix of basis values at ``points``."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1 and self.ambient_dim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != self.ambient_dim:
            raise ValidationError(
                f"{self.family} expects {self.ambient_dim}-d points, got shape {pts.shape}")
        if self.family in ("legendre_affine", "chebyshev_affine"):
            d, (lo, hi) = int(self.params[0]), self.params[1]
            u = (pts[:, 0] - (hi + lo) / 2.0) / ((hi - lo) / 2.0)
            V = _legendre(d, u) if self.family == "legendre_affine" else _chebyshev(d, u)
        elif self.family == "real_spherical_harmonics":
            V = _real_sh(int(self.params[0]), pts)
        else:
            V = _sine2d(self.params[1], pts)
        return V if self.indices is None else V[list(self.indices)]

    def describe(self) -> dict:
        out = {"family": self.family, "d": self.d}
        if self.family in ("legendre_affine", "chebyshev_affine"):
            out["omega"] = list(self.params[1])
        elif self.family == "real_spherical_harmonics":
            out["l_max"] = int(self.params[0])
        else:
            out["K"] = int(self.params[0])
            out["modes"] = [list(m) for m in self.params[1]]
        if self.indices is not None:
            out["indices"] = list(self.indices)
        return out


def legendre_affine(d: int, omega: Sequence[float] = (-1.0, 1.0)) -> BasisFamily:
    return BasisFamily("legendre_affine", (int(d), tuple(float(v) for v in omega)))


def chebyshev_affine(d: int, omega: Sequence[float] = (-1.0, 1.0)) -> BasisFamily:
    return BasisFamily("chebyshev_affine", (int(d), tuple(float(v) for v in omega)))


def real_spherical_harmonics(l_max: int) -> BasisFamily:
    return BasisFamily("real_spherical_harmonics", (int(l_max),))


def sine2d(K: int, modes: Sequence[Sequence[int]] | None = None) -> BasisFamily:
    if modes is None:
        modes = [(kx, ky) for kx in range(1, K + 1) for ky in range(1, K + 1)]
    return BasisFamily("sine2d", (int(K), tuple((int(a), int(b)) for a, b in modes)))


def sh_index(l: int, m: int) -> int:
    """Row of ``Y_{l,m}`` in a real spherical-harmonic basis."""
    return l * l + l + m


def _legendre(d: int, u: np.ndarray) -> np.ndarray:
    V = np.empty((d, len(u)))
    V[0] = 1.0
    if d > 1:
        V[1] = u
    for k in range(1, d - 1):
        V[k + 1] = ((2 * k + 1) * u * V[k] - k * V[k - 1]) / (k + 1)
    return V


def _chebyshev(d: int, u: np.ndarray) -> np.ndarray:
    V = np.empty((d, len(u)))
    V[0] = 1.0
    if d > 1:
        V[1] = u
    for k in range(1, d - 1):
        V[k + 1] = 2.0 * u * V[k] - V[k - 1]
    return V


def _real_sh(l_max: int, pts: np.ndarray) -> np.ndarray:
    theta, phi = geometry.cartesian_to_spherical(pts)
    V = np.empty(((l_max + 1) ** 2, len(pts)))
    for l in range(l_max + 1):
        for m in range(0, l + 1):
            Y = sph_harm_y(l, m, theta, phi)
            if m == 0:
                V[sh_index(l, 0)] = Y.real
            else:
                s = math.sqrt(2.0) * (-1) ** m
                V[sh_index(l, m)] = s * Y.real
                V[sh_index(l, -m)] = s * Y.imag
    return V


def _sine2d(modes, pts: np.ndarray) -> np.ndarray:
    kx = np.array([m[0] for m in modes], dtype=float)[:, None]
    ky = np.array([m[1] for m in modes], dtype=float)[:, None]
    return np.sin(np.pi * kx * pts[:, 0]) * np.sin(np.pi * ky * pts[:, 1])


def evaluate_basis(basis: BasisFamily, grid: QuadratureGrid) -> np.ndarray:
    return basis.evaluate(grid.points)


# coefficients -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Coefficients in the raw (not whitened) basis."""

    coeffs: np.ndarray
    basis: BasisFamily

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if len(c) != self.basis.d:
            raise ValidationError(f"{len(c)} coefficients for a basis of size {self.basis.d}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return len(self.coeffs)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)


def synthesize(coeffs: CoefficientVector, points) -> np.ndarray:
    pts = points.points if isinstance(points, QuadratureGrid) else points
    return np.asarray(coeffs.coeffs) @ coeffs.basis.evaluate(pts)


def embed(coeffs: np.ndarray, sub: BasisFamily) -> np.ndarray:
    """Lift sub-basis coefficients to the full family (zeros elsewhere)."""
    full = np.zeros(sub.full_dim)
    idx = range(sub.full_dim) if sub.indices is None else sub.indices
    full[list(idx)] = coeffs
    return full


# whitening --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Raw basis plus the map ``W`` with ``W^T G_omega W = I``.

    The whitened functions are ``phi_tilde_j = sum_i W[i, j] phi_i``; raw
    coefficients ``beta`` and whitened coefficients ``c`` are related by
    ``beta = W c``.
    """

    source: BasisFamily
    whitening: np.ndarray
    g_tilde_xi: np.ndarray
    g_omega: np.ndarray
    g_xi: np.ndarray
    method: str = "cholesky"

    @property
    def d(self) -> int:
        return self.whitening.shape[1]

    def to_raw(self, c) -> np.ndarray:
        return self.whitening @ np.asarray(c, dtype=float)

    def to_orthonormal(self, beta) -> np.ndarray:
        return np.linalg.solve(self.whitening, np.asarray(beta, dtype=float))

    def evaluate(self, points) -> np.ndarray:
        return self.whitening.T @ self.source.evaluate(points)


def whiten(g_omega: np.ndarray) -> tuple[np.ndarray, str]:
    """``W = L^{-T}`` from the Cholesky factor of ``g_omega``.

    One retry with diagonal jitter ``1e-12 trace/d``; after that, eigen
    whitening ``Q diag(lambda^{-1/2})`` when the matrix is still numerically
    nonsingular.
    """
    G = np.asarray(g_omega, dtype=float)
    d = G.shape[0]
    jitter = 1e-12 * np.trace(G) / d
    for j, label in ((0.0, "cholesky"), (jitter, "cholesky+jitter")):
        try:
            L = np.linalg.cholesky(G + j * np.eye(d))
        except np.linalg.LinAlgError:
            continue
        W = np.linalg.solve(L, np.eye(d)).T
        return W, label
    lam, Q = np.linalg.eigh(G)
    if lam[0] <= 1e-12 * lam[-1]:
        raise SingularGram(
            f"Omega Gram matrix is numerically singular (eigenvalues in [{lam[0]:.3e}, {lam[-1]:.3e}])")
    return Q / np.sqrt(lam), "eigen"


def orthonormalize_on(basis: BasisFamily, omega: Region, xi: Region) -> OrthonormalBasis:
    gp = geometry.gram_matrices(basis, omega, xi)
    return orthonormalize_gram(basis, gp.g_omega, gp.g_xi)


def orthonormalize_gram(basis: BasisFamily, g_omega: np.ndarray, g_xi: np.ndarray) -> OrthonormalBasis:
    W, method = whiten(g_omega)
    Gt = W.T @ g_xi @ W
    Gt = 0.5 * (Gt + Gt.T)
    return OrthonormalBasis(basis, W, Gt, g_omega, g_xi, method)
