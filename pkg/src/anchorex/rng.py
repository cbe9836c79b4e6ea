"""Seeded random streams.

Every stochastic routine in the package draws from a Philox-4x64-10
counter-based generator whose key is derived from ``(seed, *stream_keys)``
through numpy's ``SeedSequence``. Gaussian variates are produced by the
Box-Muller transform applied to pairs of uniforms from that stream, so a
reimplementation only needs Philox, SeedSequence and Box-Muller to reproduce
the draws bit for bit.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``seed`` and a tuple of integer sub-keys."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def uniform(rng: np.random.Generator, size) -> np.ndarray:
    return rng.random(size)


def gaussian(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal variates via Box-Muller.

    Uniforms are drawn in pairs ``(u1, u2)``; ``u1`` is mapped to ``(0, 1]``
    so the logarithm is finite.
    """
    shape = (size,) if np.isscalar(size) else tuple(size)
    n = int(np.prod(shape))
    m = (n + 1) // 2
    u = rng.random((m, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:n].reshape(shape)


def unit_sphere(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """``n`` directions uniform on S^{d-1}, one per row."""
    x = gaussian(rng, (n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
