"""Baseline estimators on noisy Omega samples.

Least squares and ridge solve their normal equations; LASSO uses cyclic
coordinate descent on ``(1/(2N)) ||y - X beta||^2 + alpha ||beta||_1``.
All coefficients refer to the raw basis passed in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import geometry
from . import rng as _rng
from .bases import BasisFamily, CoefficientVector
from .errors import NonConvergence, ValidationError
from .geometry import Region


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observations ``y_i = f(x_i) + eps_i`` on Omega."""

    points: np.ndarray
    values: np.ndarray
    omega: Region | None = None
    noise_sigma: float | None = None
    seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if len(p) != len(v):
            raise ValidationError(f"{len(p)} points but {len(v)} values")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ValidationError("samples must be finite")
        if self.omega is not None:
            outside = ~self.omega.contains(p)
            if outside.any():
                i = int(np.argmax(outside))
                raise ValidationError(f"sample {i} at {p[i].tolist()} lies outside Omega")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class FitResult:
    coeffs: CoefficientVector
    method: str  # "ls", "ridge" or "lasso"
    alpha: float = 0.0
    e_omega_empirical: float = 0.0
    e_omega_quadrature: float | None = None
    converged: bool = True
    iterations: int = 0

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.coeffs.coeffs)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "coeffs": [float(v) for v in self.beta],
            "basis": self.coeffs.basis.describe(),
            "e_omega_empirical": self.e_omega_empirical,
            "e_omega_quadrature": self.e_omega_quadrature,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def design_matrix(basis: BasisFamily, samples: SampleSet) -> np.ndarray:
    """``X[i, k] = phi_k(x_i)``."""
    return basis.evaluate(samples.points).T


def _omega_measure(samples: SampleSet, measure: float | None) -> float:
    if measure is not None:
        return float(measure)
    if samples.omega is None:
        raise ValidationError("Omega measure unknown: pass measure= or attach omega to the samples")
    return samples.omega.measure


def empirical_e_omega(fit: FitResult | np.ndarray, samples: SampleSet, basis: BasisFamily | None = None,
                      measure: float | None = None) -> float:
    """``sqrt(|Omega| * mean residual^2)``, raw (noise-inflated) residuals."""
    if len(samples) == 0:
        raise ValidationError("empty sample set")
    if isinstance(fit, FitResult):
        beta, basis = fit.beta, fit.coeffs.basis
    else:
        beta = np.asarray(fit, dtype=float)
        if basis is None:
            raise ValidationError("basis required with a bare coefficient array")
    r = samples.values - design_matrix(basis, samples) @ beta
    return math.sqrt(_omega_measure(samples, measure) * float(np.mean(r * r)))


def _solve_normal(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Cholesky, one jitter retry, then an eigen pseudo-inverse
    d = A.shape[0]
    lam, Q = np.linalg.eigh(A)
    lam_max = max(float(lam[-1]), 0.0)
    if lam_max > 0 and lam[0] > 1e-12 * lam_max:
        jitter = 1e-12 * np.trace(A) / d
        for j in (0.0, jitter):
            try:
                L = np.linalg.cholesky(A + j * np.eye(d))
            except np.linalg.LinAlgError:
                continue
            return np.linalg.solve(L.T, np.linalg.solve(L, b))
    keep = lam > 1e-12 * lam_max
    return Q[:, keep] @ ((Q[:, keep].T @ b) / lam[keep])


def _finish(basis, beta, method, alpha, samples, measure, **kw) -> FitResult:
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise NonConvergence(f"{method} produced non-finite coefficients")
    known = measure is not None or samples.omega is not None
    e = empirical_e_omega(beta, samples, basis, measure) if known else math.nan
    return FitResult(CoefficientVector(beta, basis), method, float(alpha), e, **kw)


def fit_ls(basis: BasisFamily, samples: SampleSet, measure: float | None = None) -> FitResult:
    if len(samples) < 1:
        raise ValidationError("need at least one sample")
    X = design_matrix(basis, samples)
    return _finish(basis, _solve_normal(X.T @ X, X.T @ samples.values), "ls", 0.0, samples, measure)


def fit_ridge(basis: BasisFamily, samples: SampleSet, alpha: float, measure: float | None = None) -> FitResult:
    """Minimize ``||y - X beta||^2 + alpha ||beta||^2``."""
    if not alpha >= 0:
        raise ValidationError(f"ridge alpha must be nonnegative, got {alpha}")
    if alpha == 0:
        res = fit_ls(basis, samples, measure)
        return FitResult(res.coeffs, "ridge", 0.0, res.e_omega_empirical)
    X = design_matrix(basis, samples)
    A = X.T @ X + alpha * np.eye(basis.d)
    return _finish(basis, _solve_normal(A, X.T @ samples.values), "ridge", alpha, samples, measure)


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_cd(X: np.ndarray, y: np.ndarray, alpha: float, tol: float = 1e-8, max_iter: int = 100_000,
             beta0: np.ndarray | None = None) -> tuple[np.ndarray, bool, int]:
    """Cyclic coordinate descent, covariance form.

    Keeps ``q = X^T r / N`` up to date so each coordinate step costs O(d).
    Stops when the largest coefficient change in a sweep is ``<= tol``.
    """
    N, d = X.shape
    G = X.T @ X / N
    diag = np.diag(G).copy()
    beta = np.zeros(d) if beta0 is None else np.array(beta0, dtype=float)
    q = X.T @ (y - X @ beta) / N
    for it in range(1, max_iter + 1):
        max_step = 0.0
        for k in range(d):
            if diag[k] == 0.0:
                continue
            old = beta[k]
            new = soft_threshold(q[k] + diag[k] * old, alpha) / diag[k]
            step = new - old
            if step != 0.0:
                beta[k] = new
                q -= G[:, k] * step
                max_step = max(max_step, abs(step))
        if max_step <= tol:
            return beta, True, it
    return beta, False, max_iter


def fit_lasso(basis: BasisFamily, samples: SampleSet, alpha: float, tol: float = 1e-8,
              max_iter: int = 100_000, measure: float | None = None) -> FitResult:
    """LASSO fit; non-convergence is reported in the result, not raised."""
    if not alpha >= 0:
        raise ValidationError(f"lasso alpha must be nonnegative, got {alpha}")
    X = design_matrix(basis, samples)
    beta, ok, it = lasso_cd(X, samples.values, alpha, tol, max_iter)
    return _finish(basis, beta, "lasso", alpha, samples, measure, converged=ok, iterations=it)


def fit(method: str, basis: BasisFamily, samples: SampleSet, alpha: float = 0.0, **kw) -> FitResult:
    if method == "ls":
        return fit_ls(basis, samples, **kw)
    if method == "ridge":
        return fit_ridge(basis, samples, alpha, **kw)
    if method == "lasso":
        return fit_lasso(basis, samples, alpha, **kw)
    raise ValidationError(f"unknown fit method {method!r}")


# sampling ---------------------------------------------------------------


def sample_points(region: Region, n: int, rng: np.random.Generator, layout: str = "random") -> np.ndarray:
    """Sample locations in ``region``.

    ``random``: uniform with respect to the region's measure.
    ``grid``: ``n`` equispaced points (intervals only).
    ``grid_nodes``: ``n`` distinct quadrature nodes drawn without replacement.
    """
    if n < 1:
        raise ValidationError("need at least one sample point")
    if layout == "grid":
        if region.kind != "interval":
            raise ValidationError("grid layout is only defined for intervals")
        return np.linspace(region.bounds[0], region.bounds[1], n)[:, None]
    if layout == "grid_nodes":
        nodes = geometry.build_grid(region).points
        if n > len(nodes):
            raise ValidationError(f"asked for {n} nodes from a grid of {len(nodes)}")
        idx = rng.choice(len(nodes), size=n, replace=False)
        return nodes[np.sort(idx)]
    if layout != "random":
        raise ValidationError(f"unknown sample layout {layout!r}")
    b = region.bounds
    if region.kind == "interval":
        return (b[0] + (b[1] - b[0]) * rng.random(n))[:, None]
    if region.kind == "interval_union":
        lengths = np.array([hi - lo for lo, hi in b])
        u = rng.random(n) * lengths.sum()
        edges = np.concatenate([[0.0], np.cumsum(lengths)])
        j = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, len(b) - 1)
        lo = np.array([lo for lo, _ in b])
        return (lo[j] + (u - edges[j]))[:, None]
    if region.kind == "sphere_patch":
        (t0, t1), (p0, p1) = b
        u = rng.random((n, 2))
        z = math.cos(t0) + (math.cos(t1) - math.cos(t0)) * u[:, 0]
        theta = np.arccos(np.clip(z, -1.0, 1.0))
        return geometry.spherical_to_cartesian(theta, p0 + (p1 - p0) * u[:, 1])
    outer = b if region.kind == "rect2d" else b[0]
    (x0, x1), (y0, y1) = outer
    out = np.empty((0, 2))
    while len(out) < n:  # rejection for the punctured rectangle
        u = rng.random((2 * (n - len(out)) + 8, 2))
        cand = np.column_stack([x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]])
        out = np.vstack([out, cand[region.contains(cand)]])
    return out[:n]


def noise_sigma(noise: Mapping, clean: np.ndarray) -> float:
    """``sigma`` given directly, or from SNR_dB with ``P_s = mean f(x_i)^2``."""
    if "sigma" in noise and "snr_db" in noise:
        raise ValidationError("give either sigma or snr_db, not both")
    if "sigma" in noise:
        s = float(noise["sigma"])
        if not s >= 0:
            raise ValidationError(f"noise sigma must be nonnegative, got {s}")
        return s
    if "snr_db" in noise:
        p_s = float(np.mean(np.asarray(clean) ** 2))
        return math.sqrt(p_s / 10.0 ** (float(noise["snr_db"]) / 10.0))
    raise ValidationError(f"noise spec needs 'sigma' or 'snr_db', got {dict(noise)}")


def synthesize_noisy_samples(truth: CoefficientVector | Callable, omega: Region, n: int, noise: Mapping,
                             seed: int, layout: str = "random", key: tuple = ()) -> SampleSet:
    """Seeded samples of ``truth`` plus Gaussian noise.

    Locations come from stream ``(seed, *key, 0)``, noise from
    ``(seed, *key, 1)``.
    """
    pts = sample_points(omega, n, _rng.stream(seed, *key, 0), layout)
    if isinstance(truth, CoefficientVector):
        clean = np.asarray(truth.coeffs) @ truth.basis.evaluate(pts)
    else:
        clean = np.asarray(truth(pts[:, 0] if pts.shape[1] == 1 else pts), dtype=float)
    sigma = noise_sigma(noise, clean)
    y = clean + sigma * _rng.gaussian(_rng.stream(seed, *key, 1), len(clean))
    return SampleSet(pts, y, omega, sigma, seed)
