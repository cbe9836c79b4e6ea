"""Generate the meridional B_r reference table from a WMM coefficient file.

B_r at the reference radius r = a, fixed longitude, epoch of the file (no
secular variation applied), sampled on ``n`` uniformly spaced values of
``mu = cos(colatitude)`` in [-1, 1].

Usage::

    python scripts/make_geomag_csv.py --cof WMM_2025.COF --out src/anchorex/data/geomag_br_wmm2025.csv

Without ``--cof`` the script looks for ``wmm/WMM_2025.COF`` inside an
installed ``pygeomag`` package.
"""

from __future__ import annotations

import argparse
import importlib.util
import math
from pathlib import Path

import numpy as np
from scipy.special import lpmv


def read_cof(path: Path) -> list[tuple[int, int, float, float]]:
    rows = []
    for line in path.read_text().splitlines()[1:]:
        parts = line.split()
        if len(parts) != 6:
            continue
        n, m, g, h = int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
        rows.append((n, m, g, h))
    if not rows:
        raise SystemExit(f"no coefficients found in {path}")
    return rows


def schmidt(n: int, m: int, mu: np.ndarray) -> np.ndarray:
    # scipy's lpmv carries the Condon-Shortley phase; Schmidt functions do not
    p = lpmv(m, n, mu) * (-1) ** m
    if m > 0:
        p *= math.sqrt(2.0 * math.factorial(n - m) / math.factorial(n + m))
    return p


def radial_field(coeffs, mu: np.ndarray, lon: float) -> np.ndarray:
    """``B_r = sum (n+1) (g cos m lon + h sin m lon) P_n^m(mu)`` at r = a."""
    out = np.zeros_like(mu)
    for n, m, g, h in coeffs:
        out += (n + 1) * (g * math.cos(m * lon) + h * math.sin(m * lon)) * schmidt(n, m, mu)
    return out


def default_cof() -> Path:
    spec = importlib.util.find_spec("pygeomag")
    if spec is None or spec.origin is None:
        raise SystemExit("pass --cof (pygeomag is not installed)")
    return Path(spec.origin).parent / "wmm" / "WMM_2025.COF"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cof", type=Path)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--lon-deg", type=float, default=0.0)
    ap.add_argument("-n", type=int, default=721)
    args = ap.parse_args(argv)
    coeffs = read_cof(args.cof or default_cof())
    mu = np.linspace(-1.0, 1.0, args.n)
    br = radial_field(coeffs, mu, math.radians(args.lon_deg))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as fh:
        fh.write("mu,br_nT\n")
        for a, b in zip(mu, br):
            fh.write(f"{float(a)!r},{float(b)!r}\n")
    print(f"wrote {len(mu)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
