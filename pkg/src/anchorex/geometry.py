"""Regions, Simpson quadrature grids and discrete inner products.

A :class:`Region` is a declarative description (kind, bounds, resolution);
:func:`build_grid` turns it into a :class:`QuadratureGrid` of ambient-space
points with positive weights. All inner products, norms and Gram matrices in
the package go through the same weighted sum, so "the Omega norm" always means
the same quadrature rule.

Coordinates: intervals use ``(n, 1)`` point arrays, rectangles ``(n, 2)``,
sphere patches ``(n, 3)`` unit vectors (colatitude theta, longitude phi).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

KINDS = ("interval", "interval_union", "sphere_patch", "rect2d", "rect2d_minus_patch")


def _pair(b) -> tuple[float, float]:
    lo, hi = (float(v) for v in b)
    return lo, hi


@dataclass(frozen=True)
class Region:
    """Sample or extrapolation region.

    ``bounds`` by kind:

    * interval: ``(lo, hi)``
    * interval_union: ``((lo1, hi1), (lo2, hi2), ...)`` sorted and disjoint
    * sphere_patch: ``((theta_lo, theta_hi), (phi_lo, phi_hi))``
    * rect2d: ``((x_lo, x_hi), (y_lo, y_hi))``
    * rect2d_minus_patch: ``(outer_rect, excluded_rect)`` with rects as above

    ``resolution`` holds one node count per axis (per interval for unions).
    """

    kind: str
    bounds: tuple
    resolution: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown region kind {self.kind!r}")
        res = self.resolution
        if isinstance(res, (int, np.integer)):
            res = (int(res),)
        object.__setattr__(self, "resolution", tuple(int(r) for r in res))
        object.__setattr__(self, "bounds", _normalize_bounds(self.kind, self.bounds))
        _validate(self)

    # constructors -------------------------------------------------------
    @classmethod
    def interval(cls, lo: float, hi: float, resolution: int = 401) -> "Region":
        return cls("interval", (lo, hi), (resolution,))

    @classmethod
    def interval_union(cls, intervals: Sequence, resolution: int = 401) -> "Region":
        return cls("interval_union", tuple(intervals), (resolution,))

    @classmethod
    def sphere_patch(cls, theta: Sequence = (0.0, math.pi), phi: Sequence = (0.0, 2 * math.pi),
                     resolution: Sequence[int] = (181, 361)) -> "Region":
        return cls("sphere_patch", (tuple(theta), tuple(phi)), tuple(resolution))

    @classmethod
    def rect2d(cls, x: Sequence, y: Sequence, resolution: Sequence[int] = (201, 201)) -> "Region":
        return cls("rect2d", (tuple(x), tuple(y)), tuple(resolution))

    @classmethod
    def rect2d_minus_patch(cls, outer: Sequence, excluded: Sequence,
                           resolution: Sequence[int] = (201, 201)) -> "Region":
        return cls("rect2d_minus_patch", (tuple(map(tuple, outer)), tuple(map(tuple, excluded))),
                   tuple(resolution))

    # geometry -----------------------------------------------------------
    @property
    def dim(self) -> int:
        return {"interval": 1, "interval_union": 1, "sphere_patch": 3}.get(self.kind, 2)

    @property
    def measure(self) -> float:
        """Lebesgue length/area, or surface area for sphere patches."""
        b = self.bounds
        if self.kind == "interval":
            return b[1] - b[0]
        if self.kind == "interval_union":
            return sum(hi - lo for lo, hi in b)
        if self.kind == "sphere_patch":
            (t0, t1), (p0, p1) = b
            return (p1 - p0) * (math.cos(t0) - math.cos(t1))
        if self.kind == "rect2d":
            return _area(b)
        outer, exc = b
        return _area(outer) - _area(_box_intersection(outer, exc))

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Boolean mask of points lying in the (closed) region."""
        pts = _as_points(points, self.dim)
        b = self.bounds
        if self.kind == "interval":
            x = pts[:, 0]
            return (x >= b[0] - tol) & (x <= b[1] + tol)
        if self.kind == "interval_union":
            x = pts[:, 0]
            mask = np.zeros(len(x), dtype=bool)
            for lo, hi in b:
                mask |= (x >= lo - tol) & (x <= hi + tol)
            return mask
        if self.kind == "sphere_patch":
            (t0, t1), (p0, p1) = b
            theta, phi = cartesian_to_spherical(pts)
            on_sphere = np.abs(np.linalg.norm(pts, axis=1) - 1.0) <= 1e-8
            # longitudes are compared modulo 2 pi
            dphi = np.mod(phi - p0, 2 * np.pi)
            in_phi = (dphi <= (p1 - p0) + tol) | (p1 - p0 >= 2 * np.pi - tol)
            in_phi |= np.abs(dphi - 2 * np.pi) <= tol
            return on_sphere & (theta >= t0 - tol) & (theta <= t1 + tol) & in_phi
        if self.kind == "rect2d":
            return _in_box(pts, b, tol)
        outer, exc = b
        return _in_box(pts, outer, tol) & ~_in_box_open(pts, exc)


def _normalize_bounds(kind, bounds):
    if kind == "interval":
        return _pair(bounds)
    if kind == "interval_union":
        return tuple(_pair(b) for b in bounds)
    if kind in ("sphere_patch", "rect2d"):
        return tuple(_pair(b) for b in bounds)
    outer, exc = bounds
    return tuple(_pair(b) for b in outer), tuple(_pair(b) for b in exc)


def _validate(r: Region) -> None:
    b, res = r.bounds, r.resolution
    naxes = {"interval": 1, "interval_union": 1}.get(r.kind, 2)
    if len(res) != naxes:
        raise ValidationError(f"{r.kind} needs {naxes} resolution value(s), got {res}")
    for n in res:
        if n < 3 or n % 2 == 0:
            raise ValidationError(f"Simpson resolution must be odd and >= 3, got {n}")
    if r.kind == "interval":
        if not b[0] < b[1]:
            raise ValidationError(f"empty interval {b}")
    elif r.kind == "interval_union":
        if not b:
            raise ValidationError("empty interval union")
        for lo, hi in b:
            if not lo < hi:
                raise ValidationError(f"empty interval {(lo, hi)}")
        for (_, h0), (l1, _) in zip(b, b[1:]):
            if l1 < h0:
                raise ValidationError("interval union must be sorted and pairwise disjoint")
    elif r.kind == "sphere_patch":
        (t0, t1), (p0, p1) = b
        if not (0.0 <= t0 < t1 <= math.pi + 1e-15):
            raise ValidationError(f"bad colatitude range {(t0, t1)}")
        if not (0.0 <= p0 < p1 <= 2 * math.pi + 1e-15):
            raise ValidationError(f"bad longitude range {(p0, p1)}")
    elif r.kind == "rect2d":
        _check_box(b)
    else:
        outer, exc = b
        _check_box(outer)
        _check_box(exc)
        if r.measure <= 0:
            raise ValidationError("excluded patch covers the whole rectangle")


def _check_box(box):
    for lo, hi in box:
        if not lo < hi:
            raise ValidationError(f"empty rectangle side {(lo, hi)}")


def _area(box) -> float:
    (x0, x1), (y0, y1) = box
    return max(x1 - x0, 0.0) * max(y1 - y0, 0.0)


def _box_intersection(a, b):
    return tuple((max(p[0], q[0]), min(p[1], q[1])) for p, q in zip(a, b))


def _in_box(pts, box, tol):
    (x0, x1), (y0, y1) = box
    x, y = pts[:, 0], pts[:, 1]
    return (x >= x0 - tol) & (x <= x1 + tol) & (y >= y0 - tol) & (y <= y1 + tol)


def _in_box_open(pts, box, tol=1e-12):
    (x0, x1), (y0, y1) = box
    x, y = pts[:, 0], pts[:, 1]
    return (x > x0 + tol) & (x < x1 - tol) & (y > y0 + tol) & (y < y1 - tol)


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.shape[1] != dim:
        raise ValidationError(f"expected {dim}-dimensional points, got shape {pts.shape}")
    return pts


def spherical_to_cartesian(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def cartesian_to_spherical(points) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(points, dtype=float)
    z = np.clip(p[:, 2] / np.linalg.norm(p, axis=1), -1.0, 1.0)
    return np.arccos(z), np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)


def overlap_measure(a: Region, b: Region) -> float:
    """Measure of the interior overlap of two regions (0 when disjoint)."""
    if a.dim != b.dim:
        raise ValidationError("regions live in different ambient spaces")
    if a.dim == 1:
        ia = [a.bounds] if a.kind == "interval" else list(a.bounds)
        ib = [b.bounds] if b.kind == "interval" else list(b.bounds)
        return sum(max(0.0, min(h0, h1) - max(l0, l1)) for l0, h0 in ia for l1, h1 in ib)
    if a.dim == 3:
        (ta, pa), (tb, pb) = a.bounds, b.bounds
        lt = max(0.0, min(ta[1], tb[1]) - max(ta[0], tb[0]))
        lp = max(0.0, min(pa[1], pb[1]) - max(pa[0], pb[0]))
        return lt * lp
    # planar: each region is an outer box with at most one hole
    def parts(r):
        return (r.bounds, None) if r.kind == "rect2d" else r.bounds

    oa, ha = parts(a)
    ob, hb = parts(b)
    core = _box_intersection(oa, ob)
    total = _area(core)
    for h in (ha, hb):
        if h is not None:
            total -= _area(_box_intersection(core, h))
    if ha is not None and hb is not None:
        total += _area(_box_intersection(_box_intersection(core, ha), hb))
    return max(total, 0.0)


def check_disjoint(omega: Region, xi: Region, tol: float = 1e-12) -> None:
    if overlap_measure(omega, xi) > tol:
        raise ValidationError("sample and extrapolation regions overlap")


# quadrature -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        w = np.asarray(self.weights, dtype=float)
        if len(pts) != len(w):
            raise ValidationError("points and weights differ in length")
        if np.any(w <= 0):
            raise ValidationError("quadrature weights must be strictly positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def union(self, other: "QuadratureGrid") -> "QuadratureGrid":
        """Grid of the disjoint union (nodes concatenated)."""
        return QuadratureGrid(np.vstack([self.points, other.points]),
                              np.concatenate([self.weights, other.weights]))


def simpson_weights(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and composite Simpson weights on ``[lo, hi]`` (``n`` odd)."""
    if n < 3 or n % 2 == 0:
        raise ValidationError(f"Simpson needs an odd node count >= 3, got {n}")
    x = np.linspace(lo, hi, n)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (hi - lo) / (3.0 * (n - 1))
    return x, w


@functools.lru_cache(maxsize=64)
def build_grid(region: Region) -> QuadratureGrid:
    """Composite Simpson grid for ``region``.

    Sphere patches use product Simpson in (theta, phi) with the sin(theta)
    Jacobian; nodes with zero weight (the poles) are omitted. For
    ``rect2d_minus_patch`` the outer-rectangle nodes strictly inside the
    excluded patch are dropped and the remaining weights are left as they are.
    """
    b, res = region.bounds, region.resolution
    if region.kind == "interval":
        x, w = simpson_weights(*b, res[0])
        return QuadratureGrid(x[:, None], w)
    if region.kind == "interval_union":
        xs, ws = zip(*(simpson_weights(lo, hi, res[0]) for lo, hi in b))
        return QuadratureGrid(np.concatenate(xs)[:, None], np.concatenate(ws))
    if region.kind == "sphere_patch":
        (t0, t1), (p0, p1) = b
        th, wt = simpson_weights(t0, t1, res[0])
        ph, wp = simpson_weights(p0, p1, res[1])
        wt = wt * np.sin(th)
        T, P = np.meshgrid(th, ph, indexing="ij")
        W = np.outer(wt, wp).ravel()
        keep = W > 0
        pts = spherical_to_cartesian(T.ravel()[keep], P.ravel()[keep])
        return QuadratureGrid(pts, W[keep])
    box = b if region.kind == "rect2d" else b[0]
    (x0, x1), (y0, y1) = box
    x, wx = simpson_weights(x0, x1, res[0])
    y, wy = simpson_weights(y0, y1, res[1])
    X, Y = np.meshgrid(x, y, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    W = np.outer(wx, wy).ravel()
    if region.kind == "rect2d_minus_patch":
        keep = ~_in_box_open(pts, b[1])
        pts, W = pts[keep], W[keep]
    return QuadratureGrid(pts, W)


def _check_lengths(grid: QuadratureGrid, *values) -> list[np.ndarray]:
    out = []
    for v in values:
        a = np.asarray(v, dtype=float)
        if a.shape[-1] != len(grid):
            raise ValidationError(f"value vector of length {a.shape[-1]} on a grid of {len(grid)} nodes")
        out.append(a)
    return out


def inner_product(grid: QuadratureGrid, f_values, g_values) -> float:
    f, g = _check_lengths(grid, f_values, g_values)
    return float(np.dot(grid.weights * f, g))


def norm(grid: QuadratureGrid, f_values) -> float:
    (f,) = _check_lengths(grid, f_values)
    return math.sqrt(max(float(np.dot(grid.weights * f, f)), 0.0))


def error_norm(grid: QuadratureGrid, f_values, g_values) -> float:
    """Root error ``||f - g||_D`` under the grid's quadrature."""
    f, g = _check_lengths(grid, f_values, g_values)
    return norm(grid, f - g)


@dataclass(frozen=True, eq=False)
class GramPair:
    g_omega: np.ndarray
    g_xi: np.ndarray


def gram_matrix(grid: QuadratureGrid, values: np.ndarray) -> np.ndarray:
    """``G[i, j] = <phi_i, phi_j>`` from a ``(d, n)`` value matrix.

    The upper triangle is computed and mirrored, so the result is exactly
    symmetric.
    """
    (V,) = _check_lengths(grid, values)
    if not np.all(np.isfinite(V)):
        raise ValidationError("non-finite basis values on the quadrature grid")
    G = (V * grid.weights) @ V.T
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def gram_matrices(basis, omega: Region, xi: Region) -> GramPair:
    """Omega and Xi Gram matrices of ``basis`` (anything with ``evaluate``)."""
    go, gx = build_grid(omega), build_grid(xi)
    return GramPair(gram_matrix(go, basis.evaluate(go.points)),
                    gram_matrix(gx, basis.evaluate(gx.points)))
