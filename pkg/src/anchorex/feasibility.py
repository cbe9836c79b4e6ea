"""Anchors, feasible balls and metric projection in the Xi inner product.

Functions are represented by raw coefficient vectors; ``xi_metric`` is the
raw Xi Gram matrix, so ``||g - a||_Xi = sqrt((g - a)^T G_Xi (g - a))``.

A ball ``S(a, delta)`` whose boundary is reached counts as containing the
point. Projection onto one ball is closed form; onto an intersection,
Dykstra's algorithm with the ball projections as building blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geometry
from . import rng as _rng
from .bases import BasisFamily, CoefficientVector, whiten
from .conditioning import inner_domain_mhat, kappa_r_from_mhat, symmetric_eigen
from .errors import EmptyIntersectionSuspected, NonConvergence, ValidationError
from .fitting import SampleSet, empirical_e_omega, fit_ls
from .geometry import Region


def _vec(x) -> np.ndarray:
    if isinstance(x, CoefficientVector):
        return np.asarray(x.coeffs)
    return np.asarray(x, dtype=float).ravel()


def _same_basis(a, b) -> None:
    if isinstance(a, CoefficientVector) and isinstance(b, CoefficientVector) and a.basis != b.basis:
        raise ValidationError("coefficient vectors refer to different bases")


def xi_norm(v, xi_metric) -> float:
    v = _vec(v)
    return math.sqrt(max(float(v @ np.asarray(xi_metric) @ v), 0.0))


def xi_distance(a, b, xi_metric) -> float:
    _same_basis(a, b)
    va, vb = _vec(a), _vec(b)
    if va.shape != vb.shape or np.shape(xi_metric) != (len(va), len(va)):
        raise ValidationError("coefficient length does not match the Xi metric")
    return xi_norm(va - vb, xi_metric)


def xi_inner(a, b, xi_metric) -> float:
    return float(_vec(a) @ np.asarray(xi_metric) @ _vec(b))


@dataclass(frozen=True, eq=False)
class Anchor:
    coeffs: CoefficientVector
    delta: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValidationError(f"anchor radius must be finite and nonnegative, got {self.delta}")

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.coeffs.coeffs)

    def to_dict(self) -> dict:
        return {"coeffs": [float(v) for v in self.center], "delta": float(self.delta),
                "provenance": dict(self.provenance)}


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Intersection of anchor balls under the Xi metric."""

    anchors: tuple[Anchor, ...]
    xi_metric: np.ndarray

    def __post_init__(self):
        anchors = tuple(self.anchors)
        if not anchors:
            raise ValidationError("a feasible set needs at least one anchor")
        G = np.asarray(self.xi_metric, dtype=float)
        d = len(anchors[0].center)
        if G.shape != (d, d) or any(len(a.center) != d for a in anchors):
            raise ValidationError("anchor lengths and Xi metric disagree")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "xi_metric", G)

    def with_anchor(self, anchor: Anchor) -> "FeasibleSet":
        return FeasibleSet(self.anchors + (anchor,), self.xi_metric)

    def violations(self, g) -> np.ndarray:
        v = _vec(g)
        return np.array([xi_norm(v - a.center, self.xi_metric) - a.delta for a in self.anchors])


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    h: np.ndarray
    delta_dist: float
    improvement_lower: float | None
    improvement_upper: float | None
    iterations: int = 0
    converged: bool = True

    @property
    def active(self) -> bool:
        return self.delta_dist > 0.0

    def to_dict(self) -> dict:
        return {"h": [float(v) for v in self.h], "delta_dist": self.delta_dist,
                "improvement_lower": self.improvement_lower, "improvement_upper": self.improvement_upper,
                "iterations": self.iterations, "converged": self.converged}


def improvement_bounds(Delta: float, delta: float) -> tuple[float, float]:
    """``(Delta sqrt(Delta / (delta + Delta)), Delta)``; zero when inside."""
    if Delta <= 0.0:
        return 0.0, 0.0
    return Delta * math.sqrt(Delta / (delta + Delta)), Delta


def _ball_step(x: np.ndarray, center: np.ndarray, delta: float, G: np.ndarray) -> np.ndarray:
    r = xi_norm(x - center, G)
    if r <= delta:
        return x
    return center + (delta / r) * (x - center)


def project_ball(g, anchor: Anchor, xi_metric) -> ProjectionResult:
    """Metric projection onto ``S(a, delta)`` with the improvement interval."""
    _same_basis(g, anchor.coeffs)
    G = np.asarray(xi_metric, dtype=float)
    v = _vec(g)
    r = xi_norm(v - anchor.center, G)
    if r <= anchor.delta:
        return ProjectionResult(v.copy(), 0.0, 0.0, 0.0)
    h = anchor.center + (anchor.delta / r) * (v - anchor.center)
    Delta = r - anchor.delta
    lo, hi = improvement_bounds(Delta, anchor.delta)
    return ProjectionResult(h, Delta, lo, hi)


def project_intersection(g, fs: FeasibleSet, tol: float = 1e-10, max_iter: int = 10_000) -> ProjectionResult:
    """Dykstra's algorithm over the anchor balls.

    Stops when one full cycle moves the iterate by at most ``tol`` in the Xi
    norm. Without convergence the last iterate is returned flagged. Either way,
    a final iterate that still violates a ball by more than ``1e3 tol`` (relative
    to the largest radius) means the intersection is most likely empty: with
    disjoint balls the cycle settles onto a fixed, infeasible point.
    """
    if len(fs.anchors) == 1:
        return project_ball(g, fs.anchors[0], fs.xi_metric)
    G = fs.xi_metric
    x = _vec(g).copy()
    if np.all(fs.violations(x) <= 0.0):
        return ProjectionResult(x, 0.0, None, None, 0, True)
    incr = np.zeros((len(fs.anchors), len(x)))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        start = x
        for i, a in enumerate(fs.anchors):
            y = _ball_step(x + incr[i], a.center, a.delta, G)
            incr[i] = x + incr[i] - y
            x = y
        if xi_norm(x - start, G) <= tol:
            converged = True
            break
    worst = float(np.max(fs.violations(x)))
    scale = 1.0 + max(a.delta for a in fs.anchors)
    if worst > 1e3 * tol * scale:
        state = "settled" if converged else "stalled"
        raise EmptyIntersectionSuspected(
            f"Dykstra {state} after {it} cycles with constraint violation {worst:.3e}")
    return ProjectionResult(x, xi_distance(g, x, G), None, None, it, converged)


def membership(g, fs: FeasibleSet, slack: float = 1e-9) -> bool:
    return bool(np.all(fs.violations(g) <= slack))


def diameter_bound(fs: FeasibleSet) -> float:
    """``2 min delta_i``: every member lies this close to any other member."""
    return 2.0 * min(a.delta for a in fs.anchors)


# anchor generation ------------------------------------------------------


def _sub_kappa(g_omega, g_xi, idx, certificate: str) -> float | None:
    Go = g_omega[np.ix_(idx, idx)]
    Gx = g_xi[np.ix_(idx, idx)]
    if certificate == "spec":
        W, _ = whiten(Go)
        Gt = W.T @ Gx @ W
        return float(symmetric_eigen(0.5 * (Gt + Gt.T))[0][0])
    if certificate == "inner":
        return kappa_r_from_mhat(inner_domain_mhat(Go, Gx), len(idx))
    raise ValidationError(f"unknown certificate {certificate!r} (use 'spec' or 'inner')")


def create_anchors(basis: BasisFamily, omega: Region, xi: Region, samples: SampleSet, m: int, M: int,
                   certificate: str = "spec", seed: int = 0, measure: float | None = None) -> list[Anchor]:
    """Random sub-basis LS anchors with certified radii.

    Each anchor fits ``m`` randomly chosen basis functions by least squares
    and takes ``delta = sqrt(kappa) * E_omega`` with ``kappa`` computed on that
    sub-basis. Index sets are never repeated. Subsets whose inner-domain
    certificate is unavailable are redrawn, up to ``100 M`` draws in total.
    """
    d = basis.d
    if not 1 <= m <= d:
        raise ValidationError(f"subset size must satisfy 1 <= m <= d, got m={m}, d={d}")
    if M < 1:
        raise ValidationError("need at least one anchor")
    if M > math.comb(d, m):
        raise ValidationError(f"only {math.comb(d, m)} distinct subsets of size {m} exist")
    gp = geometry.gram_matrices(basis, omega, xi)
    meas = omega.measure if measure is None else measure
    rng = _rng.stream(seed, 7)
    seen: set[tuple[int, ...]] = set()
    out: list[Anchor] = []
    for _ in range(100 * M):
        if len(out) == M:
            break
        idx = tuple(sorted(int(i) for i in rng.choice(d, size=m, replace=False)))
        if idx in seen:
            continue
        seen.add(idx)
        kappa = _sub_kappa(gp.g_omega, gp.g_xi, list(idx), certificate)
        if kappa is None:
            continue
        sub = basis.subset(idx) if basis.indices is None else basis.subset([basis.indices[i] for i in idx])
        fit = fit_ls(sub, samples, measure=meas)
        e = empirical_e_omega(fit, samples, measure=meas)
        coeffs = np.zeros(d)
        coeffs[list(idx)] = fit.beta
        out.append(Anchor(CoefficientVector(coeffs, basis), math.sqrt(kappa) * e,
                          {"kind": "certified_kappa", "certificate": certificate, "kappa": kappa,
                           "e_omega": e, "indices": list(idx)}))
    if len(out) < M:
        raise NonConvergence(f"only {len(out)} of {M} anchors could be certified within {100 * M} draws")
    return out


# two-circle lemma -------------------------------------------------------


def _check_lemma_domain(p: float, R: float) -> None:
    if not (p > R > 0):
        raise ValidationError(f"need p > R > 0, got p={p}, R={R}")


def two_circle_gap(p: float, R: float, x, y):
    """``sqrt((p-x)^2 + y^2) - sqrt((R-x)^2 + y^2)`` on the disc ``x^2 + y^2 <= R^2``.

    This is the distance from ``B = (x, y)`` to the outside point ``(p, 0)``
    minus its distance to the boundary point ``(R, 0)``.
    """
    _check_lemma_domain(p, R)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x * x + y * y > R * R * (1 + 1e-12)):
        raise ValidationError("point lies outside the disc of radius R")
    out = np.hypot(p - x, y) - np.hypot(R - x, y)
    return float(out) if out.ndim == 0 else out


def lemma_bounds(p: float, R: float) -> tuple[float, float]:
    _check_lemma_domain(p, R)
    return (p - R) ** 1.5 / math.sqrt(p), p - R


def lemma_minimizer(p: float, R: float) -> tuple[float, float]:
    """Boundary point ``(x*, y*)`` attaining the lower bound, with ``y* >= 0``."""
    _check_lemma_domain(p, R)
    xs = R * (p + R) / (2.0 * p)
    return xs, math.sqrt(max(R * R - xs * xs, 0.0))


def anchors_from_dicts(items: Sequence[dict], basis: BasisFamily) -> list[Anchor]:
    out = []
    for i, it in enumerate(items):
        try:
            out.append(Anchor(CoefficientVector(it["coeffs"], basis), float(it["delta"]),
                              dict(it.get("provenance", {}))))
        except KeyError as exc:
            raise ValidationError(f"anchor {i} is missing field {exc}") from None
    return out


__all__ = [
    "Anchor", "FeasibleSet", "ProjectionResult", "xi_norm", "xi_distance", "xi_inner", "project_ball",
    "project_intersection", "membership", "diameter_bound", "create_anchors", "improvement_bounds",
    "two_circle_gap", "lemma_bounds", "lemma_minimizer", "anchors_from_dicts",
]
