"""Isotropic-direction model of extrapolation amplification.

A coefficient error ``c`` in the Omega-orthonormal basis has amplification
``E_Xi / E_Omega = s^T G s`` with ``s = c / ||c||``. Treating ``s`` as uniform
on the unit sphere makes that a random Rayleigh quotient. For a rank-one
``G = lambda u u^T`` it is exactly ``lambda * Beta(1/2, (d-1)/2)``, and the
energy of ``s`` in an r-dimensional eigenspace is ``Beta(r/2, (d-r)/2)``.

Quantile convention for Monte-Carlo samples: the order statistic at
1-based index ``ceil(rho * n)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .bases import OrthonormalBasis
from .conditioning import symmetric_eigen
from .errors import NonConvergence, ValidationError

CHUNK = 4096  # samples per RNG substream


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError(f"Beta parameters must be positive, got ({self.a}, {self.b})")

    @classmethod
    def rank_one(cls, d: int) -> "BetaParams":
        return cls(0.5, (d - 1) / 2.0)

    @classmethod
    def low_rank(cls, d: int, r: int) -> "BetaParams":
        return cls(r / 2.0, (d - r) / 2.0)

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)


def _betacf(x: float, a: float, b: float, eps: float = 1e-16, max_iter: int = 20000) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise NonConvergence(f"incomplete beta continued fraction stalled at x={x}, a={a}, b={b}")


def regularized_incomplete_beta(x: float, params: BetaParams) -> float:
    """``I_x(a, b)``, the Beta(a, b) CDF at ``x``."""
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise ValidationError(f"x must lie in [0, 1], got {x}")
    a, b = params.a, params.b
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        val = front * _betacf(x, a, b) / a
    else:
        val = 1.0 - front * _betacf(1.0 - x, b, a) / b
    return min(max(val, 0.0), 1.0)


def beta_cdf(x, params: BetaParams) -> np.ndarray:
    xs = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return np.array([regularized_incomplete_beta(float(v), params) for v in xs.ravel()]).reshape(xs.shape)


def beta_quantile(rho: float, params: BetaParams, tol: float = 1e-10) -> float:
    """Smallest ``z`` with ``I_z(a, b) >= rho``, by bisection."""
    if not 0.0 < rho < 1.0:
        raise ValidationError(f"rho must lie in (0, 1), got {rho}")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if regularized_incomplete_beta(mid, params) >= rho:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _chunks(n: int):
    return [(i, min(CHUNK, n - i * CHUNK)) for i in range(-(-n // CHUNK))]


def sample_directions(n: int, d: int, seed: int, workers: int = 1, key: tuple = ()) -> np.ndarray:
    """``n`` uniform directions on S^{d-1}.

    Chunk ``i`` of ``CHUNK`` rows always comes from substream
    ``(seed, *key, i)``, so the output does not depend on ``workers``.
    """
    if n < 1:
        raise ValidationError("need at least one sample")
    jobs = _chunks(n)

    def draw(job):
        i, m = job
        return _rng.unit_sphere(_rng.stream(seed, *key, i), m, d)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, jobs))
    else:
        parts = [draw(j) for j in jobs]
    return np.vstack(parts)


def rayleigh_quotients(g_tilde: np.ndarray, directions: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", directions, g_tilde, directions)


def sample_rayleigh_quotients(g_tilde, n: int, seed: int, workers: int = 1, key: tuple = ()) -> np.ndarray:
    """Sorted ``s^T G s`` for ``n`` seeded uniform directions ``s``."""
    G = np.asarray(g_tilde, dtype=float)
    s = sample_directions(n, G.shape[0], seed, workers, key)
    return np.sort(rayleigh_quotients(G, s))


def empirical_quantile(sorted_samples: np.ndarray, rho: float) -> float:
    if not 0.0 < rho < 1.0:
        raise ValidationError(f"rho must lie in (0, 1), got {rho}")
    n = len(sorted_samples)
    k = min(max(math.ceil(rho * n), 1), n)
    return float(sorted_samples[k - 1])


@dataclass
class ProbRadiusReport:
    rho: float
    kappa_rho_beta: float
    kappa_rho_mc: float
    lambda_top: list[float]
    spectral_gap_ratio: float
    n_samples: int
    seed: int
    d: int

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "kappa_rho_beta": self.kappa_rho_beta,
            "kappa_rho_mc": self.kappa_rho_mc,
            "lambda_top": self.lambda_top,
            "spectral_gap_ratio": self.spectral_gap_ratio,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "d": self.d,
        }


def _matrix(onb_or_matrix) -> np.ndarray:
    if isinstance(onb_or_matrix, OrthonormalBasis):
        return onb_or_matrix.g_tilde_xi
    return np.asarray(onb_or_matrix, dtype=float)


def kappa_rho(onb_or_matrix, rho: float, n: int = 10_000, seed: int = 0,
              samples: np.ndarray | None = None, eigenvalues: np.ndarray | None = None) -> ProbRadiusReport:
    """rho-quantile of the amplification, Beta-model and Monte-Carlo flavours.

    ``samples`` (sorted) and ``eigenvalues`` may be passed to reuse work across
    several ``rho``.
    """
    G = _matrix(onb_or_matrix)
    d = G.shape[0]
    if not 0.0 < rho < 1.0:
        raise ValidationError(f"rho must lie in (0, 1), got {rho}")
    w = symmetric_eigen(G)[0] if eigenvalues is None else np.asarray(eigenvalues)
    lam_max = max(float(w[0]), 0.0)
    lam2 = float(w[1]) if d > 1 else 0.0
    if samples is None:
        samples = sample_rayleigh_quotients(G, n, seed)
    q_beta = lam_max * beta_quantile(rho, BetaParams.rank_one(d)) if d > 1 else lam_max
    gap = lam_max / lam2 if lam2 > 0 else math.inf
    return ProbRadiusReport(rho, q_beta, empirical_quantile(samples, rho),
                            [float(v) for v in w[: max(2, min(d, 5))]], gap, len(samples), seed, d)


def low_rank_projection_energy(g_tilde, r: int, n: int, seed: int, key: tuple = ()):
    """Samples of ``||P_r s||^2`` for the top-r eigenspace, plus its Beta law."""
    G = np.asarray(g_tilde, dtype=float)
    d = G.shape[0]
    if not 1 <= r < d:
        raise ValidationError(f"rank must satisfy 1 <= r < d, got r={r}, d={d}")
    _, V = symmetric_eigen(G)
    Y = sample_directions(n, d, seed, key=key) @ V[:, :r]
    return np.sum(Y * Y, axis=1), BetaParams.low_rank(d, r)


def concentration_quantile_bound(g_tilde, delta: float, C: float = 1.0) -> float:
    """Generic sphere-concentration upper bound on the (1 - delta) quantile.

    ``tr(G)/d + C lambda_max sqrt(log(2/delta)/d)``. The absolute constant is
    not known; ``C = 1`` is a reporting convention.
    """
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    G = np.asarray(g_tilde, dtype=float)
    d = G.shape[0]
    lam_max = float(symmetric_eigen(G)[0][0])
    return float(np.trace(G)) / d + C * lam_max * math.sqrt(math.log(2.0 / delta) / d)


def coverage(g_tilde, threshold: float, n: int, seed: int, key: tuple = (1,)) -> float:
    """Fraction of uniform directions with ``s^T G s <= threshold``.

    The default ``key`` keeps these draws independent of the ones behind a
    Monte-Carlo quantile computed with the same seed.
    """
    G = np.asarray(g_tilde, dtype=float)
    q = rayleigh_quotients(G, sample_directions(n, G.shape[0], seed, key=key))
    return float(np.mean(q <= threshold))


def ks_statistic(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance against a vectorized CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
