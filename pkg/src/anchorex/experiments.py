"""Config-driven numerical studies.

Every ``run_*`` function takes a plain dict (merged over ``DEFAULTS[name]``)
and returns a :class:`RunReport`. Values that depended on an unseeded noise
draw in the original study are kept under ``reference`` for comparison only.
Errors are root errors ``E_D(g) = ||f - g||_D`` from the Simpson rules of the
configured regions; ``e_omega`` is the empirical estimate
``sqrt(|Omega| mean residual^2)``.
"""

from __future__ import annotations

import copy
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import geometry
from . import io as _io
from . import rng as _rng
from .bases import BasisFamily, CoefficientVector, orthonormalize_gram, sh_index
from .conditioning import certify, symmetric_eigen
from .errors import ValidationError
from .feasibility import Anchor, project_ball, xi_distance
from .fitting import SampleSet, fit_lasso, fit_ls, fit_ridge, noise_sigma, synthesize_noisy_samples
from .pchip import PchipSurrogate
from .probabilistic import (BetaParams, beta_quantile, coverage, empirical_quantile, kappa_rho,
                            sample_rayleigh_quotients)

PI = math.pi

DEFAULTS: dict[str, dict[str, Any]] = {
    "oscillator": {
        "zeta": 0.3, "omega0": 2 * PI,
        "basis": {"family": "legendre_affine", "d": 12, "omega": [-1.0, 1.0]},
        "omega": {"kind": "interval", "bounds": [-1.0, 0.0], "resolution": 401},
        "xi": {"kind": "interval", "bounds": [0.0, 1.0], "resolution": 401},
        "n_samples": 100, "layout": "grid", "noise": {"sigma": 0.5},
        "lasso_alpha": 0.01, "anchor_value": 0.0, "delta": 1.2, "seed": 0,
    },
    "legendre20": {
        "basis": {"family": "legendre_affine", "d": 20, "omega": [-1.0, 1.0]},
        "omega": {"kind": "interval", "bounds": [-1.0, 0.9], "resolution": 8001},
        "xi": {"kind": "interval", "bounds": [0.9, 1.0], "resolution": 2001},
        "n_samples": 50, "layout": "random", "noise": {"sigma": 0.01},
        "lasso_alpha": 1e-3, "seed": 0,
    },
    "geomag": {
        "csv": None,
        "basis": {"family": "legendre_affine", "d": 8, "omega": [-1.0, 1.0]},
        "cutoff": 0.8, "n_grid": 400, "noise": {"sigma": 0.05},
        "omega": {"kind": "interval", "bounds": [-1.0, 0.8], "resolution": 361},
        "xi": {"kind": "interval", "bounds": [0.8, 1.0], "resolution": 401},
        "ridge_alpha": 0.1, "seed": 0,
    },
    "bound_sweep": {
        "families": ["legendre_affine", "chebyshev_affine"], "sizes": [5, 10, 15],
        "cutoffs": [round(-0.9 + 0.1 * i, 10) for i in range(19)] + [0.925, 0.95, 0.975],
        "omega_resolution": 4001, "xi_resolution": 2001,
    },
    "beta_coverage": {
        "basis": {"family": "real_spherical_harmonics", "l_max": 2},
        "omega": {"kind": "sphere_patch", "bounds": [[0.75 * PI, PI], [0.0, 2 * PI]], "resolution": [181, 361]},
        "xi": {"kind": "sphere_patch", "bounds": [[0.0, 0.75 * PI], [0.0, 2 * PI]], "resolution": [181, 361]},
        "rhos": [0.5, 0.7, 0.9], "n_samples": 10_000, "bins": 60, "seed": 0,
    },
    "sphere_harmonics": {
        "l_max": 3,
        "omega": {"kind": "sphere_patch", "bounds": [[2 * PI / 3, PI], [0.0, 2 * PI]], "resolution": [61, 361]},
        "xi": {"kind": "sphere_patch", "bounds": [[0.0, PI / 2], [0.0, 2 * PI]], "resolution": [91, 181]},
        "sizes": [30, 50, 100, 200, 500, 1000, 2000, 5000], "repeats": 10,
        "noise": {"snr_db": 30.0}, "anchor_value": 0.945339, "delta": 7.495540,
        "seed": 0, "workers": 1,
    },
    "poisson2d": {
        "K": 10, "n_modes": 25, "mode_min": 2, "coef_range": [0.1, 7.0],
        "domain": [[0.0, 1.0], [0.0, 1.0]], "xi_box": [[0.8, 1.0], [0.7, 1.0]],
        "grid": 201, "xi_resolution": [41, 61], "n_samples": 200, "noise": {"snr_db": 35.0},
        "lasso_alpha": 2e-4, "rho": 0.7, "n_mc": 10_000, "feasibility_seeds": 0, "seed": 0,
    },
}

REFERENCE: dict[str, dict[str, Any]] = {
    "oscillator": {"e_xi_lasso": 1.737, "e_xi_projected": 1.153, "improvement": [0.3540, 0.5846, 0.6098]},
    "legendre20": {"kappa_spec": 372167.0, "e_xi_ls": 4.39, "e_xi_lasso": 3.51, "e_xi_projected": 2.00,
                   "improvement": [0.30, 1.51, 1.54]},
    "geomag": {"kappa_spec": 309.0,
               "ls": {"e_omega": 754.2, "e_xi": 12970.0, "e_xi_projected": 10670.0,
                      "improvement": [1267.0, 2300.0, 2312.0]},
               "ridge": {"e_omega": 946.6, "e_xi": 6174.0, "e_xi_projected": 1282.0,
                         "improvement": [3123.0, 4892.0, 5697.0]}},
    "beta_coverage": {"lambda_max": 3.5645e5, "lambda_2": 2.5897e3, "kappa_rho": {"0.5": 2.0927e4, "0.9": 1.0757e5},
                      "coverage": {"0.5": 0.5007, "0.9": 0.9046}, "ratio_spec_to_median": 17.0},
    "sphere_harmonics": {"rows": [[30, 42.13, 8.09], [50, 19.09, 7.13], [100, 18.95, 6.73], [200, 12.97, 6.63],
                                  [500, 8.05, 5.02], [1000, 7.16, 5.03], [2000, 3.36, 3.22], [5000, 2.15, 2.15]]},
    "poisson2d": {"lambda_max": 619.05, "lambda_2": 249.41, "kappa_rho": 73.332, "delta": 3.4803,
                  "e_xi_lasso": 1.0651, "e_xi_projected": 0.5148, "improvement": [0.4071, 0.5503, 0.8987],
                  "delta_worst_case": 10.1118},
}


@dataclass
class RunReport:
    experiment: str
    config: dict
    seed: int | None = None
    kappa: dict = field(default_factory=dict)
    methods: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)  # name -> (x, y, (xname, yname))
    reference: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {"experiment": self.experiment, "config": self.config, "seed": self.seed,
               "kappa": self.kappa, "methods": self.methods, "rows": self.rows,
               "extras": self.extras, "reference": self.reference}
        if include_runtime:
            out["runtime_s"] = self.runtime_s
        return out

    def non_worsening_ok(self, tol: float = 1e-9) -> bool:
        """Projected Xi error never exceeds the baseline when f is feasible."""
        for m in self.methods.values():
            if m.get("f_feasible") and m["e_xi_projected"] > m["e_xi"] + tol * max(1.0, m["e_xi"]):
                return False
        return True


def resolve_config(name: str, user: dict | None = None) -> dict:
    """Defaults for ``name`` overridden key by key (whole values replaced)."""
    if name not in DEFAULTS:
        raise ValidationError(f"unknown experiment {name!r}; choose from {sorted(DEFAULTS)}")
    cfg = copy.deepcopy(DEFAULTS[name])
    for k, v in (user or {}).items():
        if k in ("experiment", "out"):
            continue
        if k not in cfg:
            raise ValidationError(f"{name}: unknown config key {k!r}")
        cfg[k] = copy.deepcopy(v)
    return cfg


# shared pieces ----------------------------------------------------------


def _synth(basis: BasisFamily, beta, pts) -> np.ndarray:
    return np.asarray(beta, dtype=float) @ basis.evaluate(pts)


def constant_coeffs(basis: BasisFamily, grid: geometry.QuadratureGrid, value: float) -> np.ndarray:
    """Best approximation of a constant in ``basis`` (exact when the span has constants)."""
    V = basis.evaluate(grid.points)
    G = geometry.gram_matrix(grid, V)
    return np.linalg.solve(G, (V * grid.weights) @ np.full(len(grid), float(value)))


def score_projection(g_beta, anchor: Anchor, G_xi, xi_grid, f_xi, basis: BasisFamily) -> dict:
    """Project ``g`` on the anchor ball and measure everything against ``f``."""
    pr = project_ball(CoefficientVector(g_beta, basis), anchor, G_xi)
    e_g = geometry.error_norm(xi_grid, f_xi, _synth(basis, g_beta, xi_grid.points))
    e_h = geometry.error_norm(xi_grid, f_xi, _synth(basis, pr.h, xi_grid.points))
    e_a = geometry.error_norm(xi_grid, f_xi, _synth(basis, anchor.center, xi_grid.points))
    gain = e_g - e_h
    tol = 1e-9 * max(1.0, e_g)
    return {
        "e_xi": e_g, "e_xi_projected": e_h, "observed_gain": gain,
        "improvement_lower": pr.improvement_lower, "improvement_upper": pr.improvement_upper,
        "delta": anchor.delta, "delta_dist": pr.delta_dist, "projection_active": pr.active,
        "anchor_error_xi": e_a, "f_feasible": e_a <= anchor.delta,
        "in_interval": bool(pr.improvement_lower - tol <= gain <= pr.improvement_upper + tol),
        "h": pr.h.tolist(),
    }


def _kappa_spec(basis, omega, xi):
    gp = geometry.gram_matrices(basis, omega, xi)
    onb = orthonormalize_gram(basis, gp.g_omega, gp.g_xi)
    w, _ = symmetric_eigen(onb.g_tilde_xi)
    return gp, onb, w


def _timed(fn: Callable[[dict], RunReport]):
    def wrapper(config: dict | None = None) -> RunReport:
        t0 = time.perf_counter()
        rep = fn(resolve_config(fn.__name__.removeprefix("run_"), config))
        rep.runtime_s = time.perf_counter() - t0
        return rep
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# experiments ------------------------------------------------------------


def oscillator_truth(zeta: float, omega0: float) -> Callable[[np.ndarray], np.ndarray]:
    w1 = omega0 * math.sqrt(1.0 - zeta * zeta)
    c = math.sqrt(zeta) / math.sqrt(1.0 - zeta * zeta)

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-zeta * omega0 * t) * (np.cos(w1 * t) + c * np.sin(w1 * t))

    return f


@_timed
def run_oscillator(cfg: dict) -> RunReport:
    """Damped oscillator: LASSO fit projected onto a constant-anchor ball."""
    basis = _io.basis_from_config(cfg["basis"])
    omega, xi = _io.region_from_config(cfg["omega"]), _io.region_from_config(cfg["xi"])
    f = oscillator_truth(cfg["zeta"], cfg["omega0"])
    seed = int(cfg["seed"])
    samples = synthesize_noisy_samples(f, omega, int(cfg["n_samples"]), cfg["noise"], seed, cfg["layout"])
    lasso = fit_lasso(basis, samples, float(cfg["lasso_alpha"]))
    xg, og = geometry.build_grid(xi), geometry.build_grid(omega)
    G_xi = geometry.gram_matrix(xg, basis.evaluate(xg.points))
    a = Anchor(CoefficientVector(constant_coeffs(basis, xg, cfg["anchor_value"]), basis), float(cfg["delta"]),
               {"kind": "prior_bound", "value": cfg["anchor_value"]})
    m = score_projection(lasso.beta, a, G_xi, xg, f(xg.points[:, 0]), basis)
    m["e_omega"] = lasso.e_omega_empirical
    m["e_omega_quadrature"] = geometry.error_norm(og, f(og.points[:, 0]), _synth(basis, lasso.beta, og.points))
    m["converged"] = lasso.converged
    m["diameter_bound"] = 2.0 * a.delta
    t = np.linspace(-1.0, 1.0, 401)
    plots = {"truth": (t, f(t), ("t", "f")), "lasso": (t, _synth(basis, lasso.beta, t), ("t", "g")),
             "projection": (t, _synth(basis, np.array(m["h"]), t), ("t", "h"))}
    return RunReport("oscillator", cfg, seed, methods={"lasso": m}, plots=plots,
                     reference=REFERENCE["oscillator"])


@_timed
def run_legendre20(cfg: dict) -> RunReport:
    """Sum of Legendre polynomials; LASSO projected onto the certified LS ball."""
    basis = _io.basis_from_config(cfg["basis"])
    omega, xi = _io.region_from_config(cfg["omega"]), _io.region_from_config(cfg["xi"])
    seed = int(cfg["seed"])
    truth = CoefficientVector(np.ones(basis.d), basis)
    samples = synthesize_noisy_samples(truth, omega, int(cfg["n_samples"]), cfg["noise"], seed, cfg["layout"])
    gp, _, w = _kappa_spec(basis, omega, xi)
    k_spec = float(w[0])
    ls = fit_ls(basis, samples)
    lasso = fit_lasso(basis, samples, float(cfg["lasso_alpha"]))
    a = Anchor(ls.coeffs, math.sqrt(k_spec) * ls.e_omega_empirical,
               {"kind": "certified_kappa", "certificate": "spec", "e_omega": ls.e_omega_empirical})
    xg = geometry.build_grid(xi)
    f_xi = _synth(basis, truth.coeffs, xg.points)
    m = score_projection(lasso.beta, a, gp.g_xi, xg, f_xi, basis)
    m["e_omega"] = lasso.e_omega_empirical
    m["converged"] = lasso.converged
    h = np.array(m["h"])
    m["boundary_residual"] = xi_distance(h, ls.beta, gp.g_xi) - a.delta if m["projection_active"] else None
    e_ls = geometry.error_norm(xg, f_xi, _synth(basis, ls.beta, xg.points))
    orient = {}
    for name, beta in (("ls", ls.beta), ("lasso", lasso.beta), ("projection", h), ("truth", truth.coeffs)):
        orient[name] = {"to_ls": xi_distance(beta, ls.beta, gp.g_xi),
                        "to_truth": xi_distance(beta, truth.coeffs, gp.g_xi)}
    t = np.linspace(-1.0, 1.0, 801)
    plots = {name: (t, _synth(basis, b, t), ("t", name))
             for name, b in (("truth", truth.coeffs), ("ls", ls.beta), ("lasso", lasso.beta), ("projection", h))}
    return RunReport("legendre20", cfg, seed, kappa={"kappa_spec": k_spec},
                     methods={"lasso": m, "ls": {"e_omega": ls.e_omega_empirical, "e_xi": e_ls}},
                     extras={"delta": a.delta, "distance_orientation": orient}, plots=plots,
                     reference=REFERENCE["legendre20"])


@_timed
def run_geomag(cfg: dict) -> RunReport:
    """Meridional B_r: LS and ridge, each projected onto the other's certified ball."""
    mu, br = _io.ingest_csv(_io.geomag_csv_path(cfg["csv"]))
    if mu.shape[1] != 1:
        raise ValidationError("geomagnetic CSV needs exactly two columns (mu, B_r)")
    surrogate = PchipSurrogate.fit(mu[:, 0], br)
    basis = _io.basis_from_config(cfg["basis"])
    omega, xi = _io.region_from_config(cfg["omega"]), _io.region_from_config(cfg["xi"])
    seed = int(cfg["seed"])
    T = np.linspace(-1.0, 1.0, int(cfg["n_grid"]))
    x = T[T <= cfg["cutoff"]]
    clean = surrogate(x)
    sigma = noise_sigma(cfg["noise"], clean)
    y = clean + sigma * _rng.gaussian(_rng.stream(seed, 1), len(x))
    samples = SampleSet(x, y, omega, sigma, seed)
    gp, _, w = _kappa_spec(basis, omega, xi)
    k = float(w[0])
    fits = {"ls": fit_ls(basis, samples), "ridge": fit_ridge(basis, samples, float(cfg["ridge_alpha"]))}
    anchors = {n: Anchor(r.coeffs, math.sqrt(k) * r.e_omega_empirical,
                         {"kind": "certified_kappa", "certificate": "spec", "fit": n})
               for n, r in fits.items()}
    xg = geometry.build_grid(xi)
    f_xi = surrogate(xg.points[:, 0])
    methods = {}
    for n, other in (("ls", "ridge"), ("ridge", "ls")):
        m = score_projection(fits[n].beta, anchors[other], gp.g_xi, xg, f_xi, basis)
        m["e_omega"] = fits[n].e_omega_empirical
        m["projected_onto"] = other
        methods[n] = m
    t = np.linspace(-1.0, 1.0, 801)
    plots = {"truth": (t, surrogate(t), ("mu", "br"))}
    for n in fits:
        plots[n] = (t, _synth(basis, fits[n].beta, t), ("mu", n))
        plots[n + "_projected"] = (t, _synth(basis, np.array(methods[n]["h"]), t), ("mu", n + "_projected"))
    return RunReport("geomag", cfg, seed, kappa={"kappa_spec": k}, methods=methods,
                     extras={"n_samples": len(x), "noise_sigma": sigma, "n_csv_rows": len(br)},
                     plots=plots, reference=REFERENCE["geomag"])


def _sweep_basis(family: str, d: int, cutoff: float) -> BasisFamily:
    return _io.basis_from_config({"family": family, "d": d, "omega": [-1.0, cutoff]})


@_timed
def run_bound_sweep(cfg: dict) -> RunReport:
    """kappa, kappa_spec and kappa_r over basis family, size and cutoff."""
    rows = []
    for fam in cfg["families"]:
        for d in cfg["sizes"]:
            for c in cfg["cutoffs"]:
                if not -1.0 < c < 1.0:
                    raise ValidationError(f"cutoff must lie in (-1, 1), got {c}")
                om = geometry.Region.interval(-1.0, c, int(cfg["omega_resolution"]))
                xi = geometry.Region.interval(c, 1.0, int(cfg["xi_resolution"]))
                rep = certify(_sweep_basis(fam, int(d), float(c)), om, xi)
                rows.append({"family": fam, "d": int(d), "cutoff": float(c), "kappa": rep.kappa_classical,
                             "kappa_spec": rep.kappa_spec, "kappa_r": rep.kappa_r,
                             "kappa_basis": rep.kappa_basis, "dominance": rep.kappa_spec <= rep.kappa_classical})
    return RunReport("bound_sweep", cfg, rows=rows,
                     extras={"n_rows": len(rows), "all_dominated": all(r["dominance"] for r in rows)})


@_timed
def run_beta_coverage(cfg: dict) -> RunReport:
    """Rayleigh-quotient law of the quadratic spherical-harmonic basis."""
    basis = _io.basis_from_config(cfg["basis"])
    omega, xi = _io.region_from_config(cfg["omega"]), _io.region_from_config(cfg["xi"])
    geometry.check_disjoint(omega, xi)
    seed, n = int(cfg["seed"]), int(cfg["n_samples"])
    _, onb, w = _kappa_spec(basis, omega, xi)
    G = onb.g_tilde_xi
    q = sample_rayleigh_quotients(G, n, seed)
    per_rho = {}
    for rho in cfg["rhos"]:
        r = kappa_rho(G, float(rho), seed=seed, samples=q, eigenvalues=w)
        per_rho[str(rho)] = {
            "kappa_rho_beta": r.kappa_rho_beta, "kappa_rho_mc": r.kappa_rho_mc,
            "coverage_beta": coverage(G, r.kappa_rho_beta, n, seed),
            "coverage_mc": coverage(G, r.kappa_rho_mc, n, seed),
        }
    lam = float(w[0])
    counts, edges = np.histogram(q / lam, bins=int(cfg["bins"]), range=(0.0, 1.0))
    centers = 0.5 * (edges[:-1] + edges[1:])
    med = per_rho.get("0.5", {}).get("kappa_rho_beta") or lam * beta_quantile(0.5, BetaParams.rank_one(basis.d))
    return RunReport(
        "beta_coverage", cfg, seed,
        kappa={"kappa_spec": lam, "lambda_2": float(w[1]), "spectral_gap_ratio": lam / float(w[1])},
        extras={"per_rho": per_rho, "max_sample": float(q[-1]), "ratio_spec_to_median": lam / med,
                "mean_sample": float(np.mean(q)), "trace_over_d": float(np.trace(G)) / basis.d,
                "spectrum": [float(v) for v in w]},
        plots={"histogram": (centers, counts / (n * (edges[1] - edges[0])), ("q_over_lambda_max", "density"))},
        reference=REFERENCE["beta_coverage"])


def _sphere_rep(n: int, row: int, rep: int, cfg: dict, ctx: dict) -> dict:
    basis, truth, omega = ctx["basis"], ctx["truth"], ctx["omega"]
    samples = synthesize_noisy_samples(truth, omega, n, cfg["noise"], int(cfg["seed"]), "random", key=(row, rep))
    ls = fit_ls(basis, samples)
    G = ctx["G_xi"]
    pr = project_ball(ls.coeffs, ctx["anchor"], G)
    e_g = xi_distance(ls.beta, truth.coeffs, G)
    e_h = xi_distance(pr.h, truth.coeffs, G)
    gain = e_g - e_h
    tol = 1e-9 * max(1.0, e_g)
    return {"e_ls": e_g, "e_proj": e_h, "gain": gain, "lower": pr.improvement_lower,
            "upper": pr.improvement_upper, "active": pr.active,
            "in_interval": bool(pr.improvement_lower - tol <= gain <= pr.improvement_upper + tol)}


@_timed
def run_sphere_harmonics(cfg: dict) -> RunReport:
    """LS on a polar cap versus its projection onto a range-based anchor ball."""
    l_max = int(cfg["l_max"])
    basis = _io.basis_from_config({"family": "real_spherical_harmonics", "l_max": l_max})
    truth = CoefficientVector(np.ones(basis.d), basis)
    omega, xi = _io.region_from_config(cfg["omega"]), _io.region_from_config(cfg["xi"])
    geometry.check_disjoint(omega, xi)
    xg = geometry.build_grid(xi)
    G_xi = geometry.gram_matrix(xg, basis.evaluate(xg.points))
    a_beta = np.zeros(basis.d)
    a_beta[sh_index(0, 0)] = float(cfg["anchor_value"]) * math.sqrt(4 * PI)  # Y_00 = 1 / sqrt(4 pi)
    anchor = Anchor(CoefficientVector(a_beta, basis), float(cfg["delta"]),
                    {"kind": "prior_bound", "value": cfg["anchor_value"]})
    ctx = {"basis": basis, "truth": truth, "omega": omega, "G_xi": G_xi, "anchor": anchor}
    jobs = [(n, i, r) for i, n in enumerate(cfg["sizes"]) for r in range(int(cfg["repeats"]))]
    workers = int(cfg.get("workers", 1))
    run = lambda j: _sphere_rep(int(j[0]), j[1], j[2], cfg, ctx)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    rows = []
    for i, n in enumerate(cfg["sizes"]):
        reps = [res for (nn, ii, _), res in zip(jobs, results) if ii == i]
        e_ls = np.array([r["e_ls"] for r in reps])
        e_pr = np.array([r["e_proj"] for r in reps])
        rows.append({
            "n_omega": int(n), "e_ls_mean": float(e_ls.mean()), "e_ls_std": float(e_ls.std()),
            "e_proj_mean": float(e_pr.mean()), "e_proj_std": float(e_pr.std()),
            "gain_mean": float(np.mean([r["gain"] for r in reps])),
            "lower_mean": float(np.mean([r["lower"] for r in reps])),
            "upper_mean": float(np.mean([r["upper"] for r in reps])),
            "n_active": int(sum(r["active"] for r in reps)),
            "all_in_interval": all(r["in_interval"] for r in reps if r["active"]),
            "per_seed": reps,
        })
    f_xi = _synth(basis, truth.coeffs, xg.points)
    return RunReport("sphere_harmonics", cfg, int(cfg["seed"]), rows=rows,
                     extras={"anchor_error_xi": xi_distance(a_beta, truth.coeffs, G_xi),
                             "truth_max_xi": float(f_xi.max()), "truth_min_xi": float(f_xi.min()),
                             "xi_measure": xi.measure},
                     reference=REFERENCE["sphere_harmonics"])


def poisson_truth(cfg: dict, seed: int) -> tuple[CoefficientVector, np.ndarray]:
    """Random sparse sine-series solution and its source coefficients."""
    K = int(cfg["K"])
    basis = _io.basis_from_config({"family": "sine2d", "K": K})
    g = _rng.stream(seed, 2)
    lo = int(cfg["mode_min"])
    pool = [(kx, ky) for kx in range(lo, K + 1) for ky in range(lo, K + 1)]
    pick = g.choice(len(pool), size=int(cfg["n_modes"]), replace=False)
    c_lo, c_hi = cfg["coef_range"]
    mags = c_lo + (c_hi - c_lo) * g.random(len(pick))
    signs = np.where(g.random(len(pick)) < 0.5, -1.0, 1.0)
    modes = basis.params[1]
    c = np.zeros(basis.d)
    for j, p in enumerate(pick):
        c[modes.index(pool[p])] = signs[j] * mags[j]
    k2 = np.array([kx * kx + ky * ky for kx, ky in modes], dtype=float)
    return CoefficientVector(c, basis), PI * PI * k2 * c


def _poisson_setup(cfg: dict) -> dict:
    K = int(cfg["K"])
    basis = _io.basis_from_config({"family": "sine2d", "K": K})
    n = int(cfg["grid"])
    omega = geometry.Region.rect2d_minus_patch(cfg["domain"], cfg["xi_box"], (n, n))
    xi = geometry.Region.rect2d(*cfg["xi_box"], resolution=tuple(cfg["xi_resolution"]))
    gp, onb, w = _kappa_spec(basis, omega, xi)
    return {"basis": basis, "omega": omega, "xi": xi, "gp": gp, "onb": onb, "w": w}


def _poisson_anchor(cfg, ctx, seed, k_rho):
    truth, src = poisson_truth(cfg, seed)
    samples = synthesize_noisy_samples(truth, ctx["omega"], int(cfg["n_samples"]), cfg["noise"], seed, "grid_nodes")
    ls = fit_ls(ctx["basis"], samples)
    return truth, src, samples, ls, math.sqrt(k_rho) * ls.e_omega_empirical


@_timed
def run_poisson2d(cfg: dict) -> RunReport:
    """Sine-series Poisson field: LASSO projected onto a probabilistic LS ball."""
    seed = int(cfg["seed"])
    ctx = _poisson_setup(cfg)
    basis, gp, w = ctx["basis"], ctx["gp"], ctx["w"]
    rho = float(cfg["rho"])
    q = sample_rayleigh_quotients(ctx["onb"].g_tilde_xi, int(cfg["n_mc"]), seed, key=(3,))
    k_rho = empirical_quantile(q, rho)
    lam = float(w[0])
    truth, src, samples, ls, delta = _poisson_anchor(cfg, ctx, seed, k_rho)
    lasso = fit_lasso(basis, samples, float(cfg["lasso_alpha"]))
    xg = geometry.build_grid(ctx["xi"])
    f_xi = _synth(basis, truth.coeffs, xg.points)
    a = Anchor(ls.coeffs, delta, {"kind": "probabilistic", "rho": rho, "kappa": k_rho,
                                  "e_omega": ls.e_omega_empirical})
    m = score_projection(lasso.beta, a, gp.g_xi, xg, f_xi, basis)
    m["e_omega"] = lasso.e_omega_empirical
    m["converged"] = lasso.converged
    worst = Anchor(ls.coeffs, math.sqrt(lam) * ls.e_omega_empirical, {"kind": "certified_kappa"})
    mw = score_projection(lasso.beta, worst, gp.g_xi, xg, f_xi, basis)
    extras = {"anchor_e_omega": ls.e_omega_empirical, "noise_sigma": samples.noise_sigma,
              "truth_coeffs": truth.coeffs.tolist(), "source_coeffs": src.tolist(),
              "omega_measure": ctx["omega"].measure}
    nf = int(cfg["feasibility_seeds"])
    if nf > 0:
        # how often f really lies in the rho ball; the worst-case ball and the
        # ratio of the empirical to the true Omega error explain misses
        hits = hits_worst = 0
        ratios = []
        for s in range(seed, seed + nf):
            t_s, _, _, ls_s, d_s = _poisson_anchor(cfg, ctx, s, k_rho)
            e_xi = xi_distance(ls_s.beta, t_s.coeffs, gp.g_xi)
            hits += e_xi <= d_s
            hits_worst += e_xi <= math.sqrt(lam) * ls_s.e_omega_empirical
            ratios.append(ls_s.e_omega_empirical / xi_distance(ls_s.beta, t_s.coeffs, gp.g_omega))
        extras["feasibility_seeds"] = nf
        extras["feasibility_frequency"] = hits / nf
        extras["feasibility_frequency_worst_case"] = hits_worst / nf
        extras["e_omega_ratio_median"] = float(np.median(ratios))
    nxy = 101
    gx = np.linspace(0.0, 1.0, nxy)
    X, Y = np.meshgrid(gx, gx, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    plots = {"truth_field": (np.arange(len(pts)), _synth(basis, truth.coeffs, pts), ("node", "f")),
             "lasso_field": (np.arange(len(pts)), _synth(basis, lasso.beta, pts), ("node", "g")),
             "projected_field": (np.arange(len(pts)), _synth(basis, np.array(m["h"]), pts), ("node", "h"))}
    return RunReport("poisson2d", cfg, seed,
                     kappa={"kappa_rho": k_rho, "kappa_spec": lam, "lambda_2": float(w[1])},
                     methods={"lasso": m, "lasso_worst_case": mw},
                     extras=extras, plots=plots, reference=REFERENCE["poisson2d"])


EXPERIMENTS: dict[str, Callable[[dict | None], RunReport]] = {
    "oscillator": run_oscillator,
    "legendre20": run_legendre20,
    "geomag": run_geomag,
    "bound_sweep": run_bound_sweep,
    "beta_coverage": run_beta_coverage,
    "sphere_harmonics": run_sphere_harmonics,
    "poisson2d": run_poisson2d,
}


def run_experiment(name: str, config: dict | None = None) -> RunReport:
    if name not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name](config)


def write_run(report: RunReport, out_dir) -> list:
    """``report.json``/``report.csv`` plus one two-column CSV per plotted curve."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = list(_io.emit_report(report.to_dict(), out / "report"))
    for name, (x, y, cols) in report.plots.items():
        p = out / f"plot_{name}.csv"
        _io.write_curve(p, x, y, cols)
        paths.append(p)
    return paths
