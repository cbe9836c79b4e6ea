"""Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson).

Slopes start from the average of adjacent secants, with the end secants
at the two end knots. A slope is set to zero at a local extremum (secant sign
change) or next to a flat secant. On each interval, if
``alpha^2 + beta^2 > 9`` with ``alpha = m_k / s_k`` and
``beta = m_{k+1} / s_k``, both slopes are scaled by ``3 / sqrt(alpha^2 +
beta^2)``. Outside the knot range the interpolant continues linearly with the
end slope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


def fritsch_carlson_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h = np.diff(x)
    s = np.diff(y) / h
    n = len(x)
    m = np.empty(n)
    if n == 2:
        m[:] = s[0]
        return m
    m[0], m[-1] = s[0], s[-1]
    m[1:-1] = 0.5 * (s[:-1] + s[1:])
    flat_or_turn = (s[:-1] * s[1:]) <= 0.0
    m[1:-1][flat_or_turn] = 0.0
    for k in range(n - 1):
        if s[k] == 0.0:
            m[k] = m[k + 1] = 0.0
            continue
        # alpha^2 + beta^2 > 9 written without dividing by a possibly tiny s_k
        r = np.hypot(m[k], m[k + 1])
        if r > 3.0 * abs(s[k]):
            tau = 3.0 * abs(s[k]) / r
            m[k], m[k + 1] = tau * m[k], tau * m[k + 1]
    return m


@dataclass(frozen=True, eq=False)
class PchipSurrogate:
    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    @classmethod
    def fit(cls, x, y) -> "PchipSurrogate":
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if len(x) != len(y):
            raise ValidationError(f"{len(x)} abscissae but {len(y)} values")
        if len(x) < 2:
            raise ValidationError("PCHIP needs at least two knots")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("PCHIP data must be finite")
        bad = np.nonzero(np.diff(x) <= 0)[0]
        if len(bad):
            raise ValidationError(f"abscissae must be strictly increasing (violated after index {bad[0]})")
        for arr in (x, y):
            arr.setflags(write=False)
        m = fritsch_carlson_slopes(x, y)
        m.setflags(write=False)
        return cls(x, y, m)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        x, y, m = self.knots, self.values, self.slopes
        k = np.clip(np.searchsorted(x, flat, side="right") - 1, 0, len(x) - 2)
        h = x[k + 1] - x[k]
        u = (flat - x[k]) / h
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        out = h00 * y[k] + h10 * h * m[k] + h01 * y[k + 1] + h11 * h * m[k + 1]
        lo, hi = flat < x[0], flat > x[-1]
        out[lo] = y[0] + m[0] * (flat[lo] - x[0])
        out[hi] = y[-1] + m[-1] * (flat[hi] - x[-1])
        return out.reshape(t.shape)
