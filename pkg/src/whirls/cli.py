"""Command line driver: solve, classify, verify, energy.

Exit codes: 0 when every check passes, 1 on a failed check or solver
failure, 2 on invalid input.  Reports are JSON with sorted keys and carry
the schema tag below; CSV dumps use fixed headers (see docs/report_schema.md).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, _kernels
from .classify import classify, curl_condition, numerical_verdict, winding_vectors
from .config import ConfigError, RunConfig, load_config
from .coeff import DomainError
from .geometry import sample_grid
from .operators import L_direct, L_reduced, L_simplified, L_whirl, compare
from .pressure import (NotClosedError, path_independence, path_potential, pde_residual,
                       radial_pressure_for)
from .reduced import SolverError, WindingError, bvp_spec, closed_form_profile
from .variation import StoredEnergy, energy, first_variation, random_divfree
from .whirl import WhirlSpec, map_jet

SCHEMA = "whirls.report/1"


class Report:
    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.checks: list[dict] = []
        self.data: dict = {}

    def check(self, name: str, route: str, norm_abs: float, norm_rel: float, tolerance: float) -> bool:
        ok = bool(norm_rel <= tolerance)
        self.checks.append({"name": name, "route": route, "norm_abs": float(norm_abs),
                            "norm_rel": float(norm_rel), "tolerance": float(tolerance), "pass": ok})
        return ok

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA, "version": __version__, "backend": _kernels.backend(), "command": self.command,
               "config": self.cfg.echo(), "checks": self.checks, "pass": self.passed}
        out.update(self.data)
        return _clean(out)


def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to floats, NaN to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# pipelines

def _spec_for(cfg: RunConfig, m) -> WhirlSpec:
    if cfg.profile == "linear":
        return WhirlSpec.linear(cfg.ann, m)
    return bvp_spec(cfg.A, cfg.ann, m, cfg.numerics)


def cmd_solve(cfg: RunConfig, out: Optional[Path]) -> tuple[Report, int]:
    rep = Report("solve", cfg)
    if cfg.m is None:
        raise ConfigError("solve needs a winding vector m")
    m = cfg.m
    spec = _spec_for(cfg, m)
    prof = spec.profile
    solver = {"flux": prof.flux, "kind": prof.kind, "profile_m": prof.m,
              "weights": list(spec.weights), "iterations": prof.meta.get("iterations")}
    if prof.kind == "bvp":
        dev = prof.flux_deviation(cfg.A)
        rep.check("flux_conservation", "bvp", dev * abs(prof.flux), dev, cfg.tolerances["flux"])
        w = prof.meta.get("winding_simpson")
        if w is not None:
            target = 2 * np.pi * abs(prof.m)
            rep.check("winding_simpson", "bvp", abs(w - target), abs(w - target) / max(target, 1.0), 1e-8)
    if cfg.A.xi_free and cfg.profile == "solve":
        closed = closed_form_profile(cfg.A, cfg.ann, prof.m or 1.0, cfg.numerics)
        r = np.linspace(cfg.ann.a, cfg.ann.b, 257)
        gap = float(np.max(np.abs(closed.G(r) - prof.G(r)))) if prof.m else 0.0
        rep.check("closed_form_vs_bvp", "closed_form", gap, gap, 1e-8)
        solver["closed_form_flux"] = closed.flux if prof.m else 0.0
    rep.data["solver"] = solver
    if out is not None:
        _write_csv(out / "profile.csv", ["r", "G", "Gd", "flux"], prof.to_rows())
    return rep, 0 if rep.passed else 1


def cmd_classify(cfg: RunConfig, out: Optional[Path]) -> tuple[Report, int]:
    rep = Report("classify", cfg)
    H = cfg.H
    if cfg.bound is not None:
        ms = winding_vectors(cfg.ann.d, cfg.bound)
    elif cfg.m_list:
        ms = list(cfg.m_list)
    elif cfg.m is not None:
        ms = [cfg.m]
    else:
        raise ConfigError("classify needs m, m_list or bound")
    x = sample_grid(cfg.ann, "COARSE", cfg.seed)
    verdicts = []
    admissible = []
    for m in ms:
        v = classify(cfg.ann, m, H, cfg.B)
        num = numerical_verdict(cfg.ann, m, H, cfg.B, x, cfg.tolerances["curl"])
        d = v.to_dict()
        d["curl_max_rel"] = num.max_rel
        d["curl_free"] = num.curl_free
        verdicts.append(d)
        if v.admissible:
            admissible.append(list(m))
        rep.check(f"agreement{list(m)}", "classify", float(v.admissible != num.curl_free),
                  float(v.admissible != num.curl_free), 0.0)
    rep.data["verdicts"] = verdicts
    rep.data["admissible"] = admissible
    return rep, 0 if rep.passed else 1


def _pressure(cfg: RunConfig, spec: WhirlSpec, m):
    """Best available pressure and the classification verdict (if defined)."""
    ann = cfg.ann
    equal = len({abs(v) for v in m}) <= 1
    trivial = not any(m)
    verdict = classify(ann, m, cfg.H, cfg.B) if cfg.A.xi_free else None
    if cfg.profile == "linear":
        return radial_pressure_for(spec, cfg.A, cfg.B, best_effort=True), verdict
    if trivial or (equal and ann.even):
        return radial_pressure_for(spec, cfg.A, cfg.B), verdict
    if verdict is not None and verdict.admissible:
        return path_potential(cfg.H, cfg.B, m, ann), verdict
    return radial_pressure_for(spec, cfg.A, cfg.B, best_effort=True), verdict


def cmd_verify(cfg: RunConfig, out: Optional[Path]) -> tuple[Report, int]:
    rep = Report("verify", cfg)
    if cfg.m is None:
        raise ConfigError("verify needs a winding vector m")
    m = cfg.m
    tol = cfg.tolerances
    spec = _spec_for(cfg, m)
    prof = spec.profile
    x = sample_grid(cfg.ann, cfg.grid, cfg.seed)
    rep.data["solver"] = {"flux": prof.flux, "kind": prof.kind, "iterations": prof.meta.get("iterations")}
    rep.data["points"] = len(x)

    jet = map_jet(spec, x)
    det_err = float(np.max(np.abs(jet.det - 1.0)))
    rep.check("det", "jet", det_err, det_err, tol["det"])

    Ld = L_direct(spec, cfg.A, cfg.B, x)
    for other in (L_whirl(spec, cfg.A, cfg.B, x), L_reduced(spec, cfg.A, cfg.B, x)):
        a, r = compare(Ld, other)
        rep.check("route_equivalence", f"direct~{other.route}", a, r, tol["route"])
    if prof.kind == "bvp":
        dev = prof.flux_deviation(cfg.A)
        rep.check("flux_conservation", "bvp", dev * abs(prof.flux), dev, tol["flux"])

    P, verdict = _pressure(cfg, spec, m)
    if verdict is not None:
        rep.data["verdict"] = verdict.to_dict()
    rep.data["pressure"] = {"kind": P.kind, "anchor": list(P.anchor),
                            "meta": {k: v for k, v in P.meta.items() if k != "delta"}}
    if P.alternate is not None:
        pc = path_independence(P, x)
        rep.check("path_independence", "path_potential", pc.max_gap, pc.max_gap, tol["path"])
    res = pde_residual(spec, cfg.A, cfg.B, P, x)
    rep.check("boundary", "u=x", res.boundary_error, res.boundary_error, tol["boundary"])
    rep.check("pde_residual", P.kind, res.max_abs, res.max_rel, tol["residual"])
    cc = curl_condition(spec, cfg.A, cfg.B, x, tol["curl"])
    rep.check("curl_free", "pair_residual", cc.max_abs, cc.max_rel, tol["curl"])
    if cfg.profile == "solve" and (not any(m) or (len({abs(v) for v in m}) <= 1 and cfg.ann.even)
                                   or (verdict is not None and verdict.admissible)):
        Ls = L_simplified(spec, cfg.A, cfg.B, x)
        a, r = compare(Ld, Ls)
        rep.check("simplified", "direct~simplified", a, r, tol["simplified"])

    if cfg.F is not None:
        W = StoredEnergy.from_coefficient(cfg.F, cfg.ann)
        rng = np.random.default_rng(cfg.seed)
        fv = []
        for k in range(cfg.variation_fields):
            v = random_divfree(cfg.ann, rng)
            res_v = first_variation(spec, W, v, tol=tol["variation"])
            fv.append(res_v.to_dict())
            rep.check(f"first_variation[{k}]", "central_difference", abs(res_v.derivative),
                      abs(res_v.derivative) / (1.0 + abs(res_v.energy)), tol["variation"])
        rep.data["first_variation"] = fv

    if out is not None:
        _write_csv(out / "profile.csv", ["r", "G", "Gd", "flux"], prof.to_rows())
        gP = P.evaluate(x)
        n = cfg.ann.n
        header = [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(n)] + ["det", "P"]
        rows = np.concatenate([x, jet.u, jet.det[:, None], gP[:, None]], axis=1)
        _write_csv(out / "field.csv", header, rows)
        if P.radial is not None:
            _write_csv(out / "pressure.csv", ["r", "G_pressure"], P.to_rows())
    return rep, 0 if rep.passed else 1


def cmd_energy(cfg: RunConfig, out: Optional[Path]) -> tuple[Report, int]:
    rep = Report("energy", cfg)
    if cfg.F is None:
        raise ConfigError("energy needs a stored energy F")
    if cfg.m is None:
        raise ConfigError("energy needs a winding vector m")
    W = StoredEnergy.from_coefficient(cfg.F, cfg.ann)
    spec = _spec_for(cfg, cfg.m)
    E = energy(spec, W)
    rep.data["energy"] = {"value": E.value, "error_estimate": E.error_estimate, "nodes": E.nodes}
    rng = np.random.default_rng(cfg.seed)
    fv = []
    for k in range(cfg.variation_fields):
        v = random_divfree(cfg.ann, rng)
        r = first_variation(spec, W, v, tol=cfg.tolerances["variation"])
        fv.append(dict(r.to_dict(), field=v.to_dict()))
        rep.check(f"first_variation[{k}]", "central_difference", abs(r.derivative),
                  abs(r.derivative) / (1.0 + abs(r.energy)), cfg.tolerances["variation"])
    rep.data["first_variation"] = fv
    return rep, 0 if rep.passed else 1


COMMANDS = {"solve": cmd_solve, "classify": cmd_classify, "verify": cmd_verify, "energy": cmd_energy}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="whirls", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"whirls {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", help="directory for report.json and CSV dumps")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--grid", choices=["COARSE", "DEFAULT", "FINE"], type=str.upper,
                       help="sample grid level")
        s.add_argument("--profile", choices=["solve", "linear"],
                       help="'linear' swaps the solved profile for a non-solution control")
    return p


def run(argv=None) -> tuple[int, Optional[str]]:
    """Run the CLI; returns (exit code, report text or None)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return (2 if e.code else 0), None
    try:
        cfg = load_config(args.config, seed=args.seed, grid=args.grid, profile=args.profile)
        out = None
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
        rep, code = COMMANDS[args.command](cfg, out)
    except ConfigError as e:
        print(f"whirls: invalid input: {e}", file=sys.stderr)
        return 2, None
    except (WindingError, NotClosedError) as e:
        print(f"whirls: invalid input: {e}", file=sys.stderr)
        return 2, None
    except (SolverError, DomainError) as e:
        print(f"whirls: solver failure: {e}", file=sys.stderr)
        return 1, None
    except Exception as e:  # never let a traceback be the interface
        print(f"whirls: unexpected failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 1, None
    text = dumps(rep.to_dict())
    if out is not None:
        (out / "report.json").write_text(text)
    else:
        sys.stdout.write(text)
    return code, text


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
