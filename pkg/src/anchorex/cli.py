"""``anchorex`` command line.

Exit status: 0 on success, 2 for invalid input (bad config, missing file,
malformed CSV), 3 when a numerical routine fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import geometry
from . import io as _io
from .bases import CoefficientVector, orthonormalize_on
from .conditioning import certify
from .errors import NumericalError, ValidationError
from .experiments import EXPERIMENTS, run_experiment, write_run
from .feasibility import FeasibleSet, anchors_from_dicts, create_anchors, project_intersection
from .fitting import SampleSet, fit, synthesize_noisy_samples
from .probabilistic import kappa_rho

log = logging.getLogger("anchorex")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _load_config(path: str | None, required: bool = True) -> tuple[dict, Path]:
    if path is None:
        if required:
            raise ValidationError("--config is required for this command")
        return {}, Path.cwd()
    cfg = _io.load_json(path)
    if not isinstance(cfg, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return cfg, Path(path).resolve().parent


def _path(value, base: Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def _get(cfg: dict, key: str):
    if key not in cfg:
        raise ValidationError(f"config is missing required key {key!r}")
    return cfg[key]


def _seed(cfg: dict, args) -> int:
    return int(args.seed if args.seed is not None else cfg.get("seed", 0))


def _samples(cfg: dict, base: Path, basis, omega, seed: int) -> SampleSet:
    spec = _get(cfg, "samples")
    if isinstance(spec, str):
        pts, vals = _io.ingest_csv(_path(spec, base))
        return SampleSet(pts, vals, omega)
    if isinstance(spec, dict) and "truth" in spec:
        truth = CoefficientVector(spec["truth"], basis)
        return synthesize_noisy_samples(truth, omega, int(_get(spec, "n")), spec.get("noise", {"sigma": 0.0}),
                                        seed, spec.get("layout", "random"))
    raise ValidationError("'samples' must be a CSV path or {truth, n, noise[, layout]}")


def cmd_certify(args) -> dict:
    cfg, _ = _load_config(args.config)
    basis = _io.basis_from_config(_get(cfg, "basis"))
    rep = certify(basis, _io.region_from_config(_get(cfg, "omega")), _io.region_from_config(_get(cfg, "xi")),
                  float(cfg.get("orth_tol", 1e-6)))
    out = rep.to_dict()
    out["basis"] = basis.describe()
    return {"certification": out}


def cmd_fit(args) -> dict:
    cfg, base = _load_config(args.config)
    basis = _io.basis_from_config(_get(cfg, "basis"))
    omega = _io.region_from_config(_get(cfg, "omega"))
    samples = _samples(cfg, base, basis, omega, _seed(cfg, args))
    res = fit(cfg.get("method", "ls"), basis, samples, float(cfg.get("alpha", 0.0)))
    return {"fit": res.to_dict()}


def cmd_anchors(args) -> dict:
    cfg, base = _load_config(args.config)
    basis = _io.basis_from_config(_get(cfg, "basis"))
    omega, xi = _io.region_from_config(_get(cfg, "omega")), _io.region_from_config(_get(cfg, "xi"))
    seed = _seed(cfg, args)
    samples = _samples(cfg, base, basis, omega, seed)
    anchors = create_anchors(basis, omega, xi, samples, int(cfg.get("m", basis.d)), int(cfg.get("M", 1)),
                             cfg.get("certificate", "spec"), seed)
    return {"anchors": [a.to_dict() for a in anchors]}


def cmd_project(args) -> dict:
    cfg, base = _load_config(args.config)
    basis = _io.basis_from_config(_get(cfg, "basis"))
    xi = _io.region_from_config(_get(cfg, "xi"))
    fit_doc = _io.load_json(_path(_get(cfg, "fit"), base))
    g = fit_doc.get("coeffs", fit_doc.get("fit", {}).get("coeffs")) if isinstance(fit_doc, dict) else fit_doc
    if g is None:
        raise ValidationError("fit JSON has no 'coeffs'")
    items = _io.load_json(_path(_get(cfg, "anchors"), base))
    if isinstance(items, dict):
        items = items.get("anchors", [items])
    grid = geometry.build_grid(xi)
    G = geometry.gram_matrix(grid, basis.evaluate(grid.points))
    fs = FeasibleSet(tuple(anchors_from_dicts(items, basis)), G)
    res = project_intersection(CoefficientVector(g, basis), fs, float(cfg.get("tol", 1e-10)),
                               int(cfg.get("max_iter", 10_000)))
    return {"projection": res.to_dict()}


def cmd_prob_radius(args) -> dict:
    cfg, _ = _load_config(args.config)
    basis = _io.basis_from_config(_get(cfg, "basis"))
    onb = orthonormalize_on(basis, _io.region_from_config(_get(cfg, "omega")),
                            _io.region_from_config(_get(cfg, "xi")))
    rep = kappa_rho(onb, float(_get(cfg, "rho")), int(cfg.get("n", 10_000)), _seed(cfg, args))
    out = rep.to_dict()
    out["default_flavor"] = "mc"
    out["kappa_rho"] = rep.kappa_rho_mc
    return {"prob_radius": out}


COMMANDS = {"certify": cmd_certify, "fit": cmd_fit, "anchors": cmd_anchors, "project": cmd_project,
            "prob-radius": cmd_prob_radius}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anchorex", description="Certified extrapolation with anchor functions.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("-v", "--verbose", action="store_true", help="log written files")

    for name in COMMANDS:
        common(sub.add_parser(name))
    pe = sub.add_parser("experiment")
    pe.add_argument("name", choices=sorted(EXPERIMENTS))
    common(pe, config_required=False)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    out = Path(args.out)
    try:
        if args.command == "experiment":
            cfg, base = _load_config(args.config, required=False)
            if args.seed is not None:
                cfg["seed"] = args.seed
            if cfg.get("csv"):
                cfg["csv"] = str(_path(cfg["csv"], base))
            rep = run_experiment(args.name, cfg)
            for p in write_run(rep, out):
                log.info("wrote %s", p)
            log.info("%s finished in %.2f s", args.name, rep.runtime_s)
        else:
            doc = COMMANDS[args.command](args)
            (key, payload), = doc.items()
            for p in _io.emit_report(payload, out / key):
                log.info("wrote %s", p)
    except ValidationError as exc:
        print(f"anchorex: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"anchorex: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"anchorex: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
