"""Scenario runner and JSON report emitter.

    moreaulab run CONFIG [--seed N] [--tol-override key=value ...] [--out PATH] [--csv PATH]
    moreaulab catalog
    moreaulab frame VECTORS.csv CONFIG [...]

Exit codes: 0 when every requested suite passes, 1 on any residual failure,
2 on configuration or usage errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .convex import PHIS, ConeIndicator, make_phi
from .decomposition import (SuiteReport, _num, decompose, record_report,
                            sample_admissible, verify_hilbert_special_cases, verify_oracle,
                            verify_resolvent)
from .frames import frame_decompose, load_frame_csv
from .legendre import GEOMETRIES, DomainError, make_geometry
from .prox import PairingLedgerEntry, PreconditionError, certify_pairing
from .solvers import InfeasibleStartError
from .space import DEFAULT_TOL, ToleranceProfile, UnsupportedGeometryError, UsageError

log = logging.getLogger("moreaulab")

SCHEMA = "1"
SUITES = ("theorem", "hilbert", "cone", "frame", "resolvent", "oracle")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


# registry --------------------------------------------------------------------

@dataclass(frozen=True)
class PairingSpec:
    geometry: str
    phi: str
    geometry_params: dict = field(default_factory=dict)
    phi_params: dict = field(default_factory=dict)
    justification: str = ""

    def build(self, dim: int) -> PairingLedgerEntry:
        f = make_geometry(self.geometry, dim, **self.geometry_params)
        phi = make_phi(self.phi, dim, **self.phi_params)
        return certify_pairing(f, phi, justification=self.justification)

    @property
    def key(self) -> tuple:
        return (self.geometry, self.phi)


DEFAULT_PAIRINGS = (
    PairingSpec("euclidean", "l1"),
    PairingSpec("euclidean", "orthant"),
    PairingSpec("quadratic_spd", "orthant"),
    PairingSpec("pnorm_energy", "orthant", {"p": 1.5}),
    PairingSpec("pnorm_energy", "orthant", {"p": 3.0}),
    PairingSpec("pnorm_energy", "orthant", {"p": 4.0}),
    PairingSpec("pnorm_energy", "l1", {"p": 4.0}),
    PairingSpec("pnorm_energy", "soc", {"p": 4.0}, {},
                "dom f = dom f* = R^n, so both differences are the whole space"),
    PairingSpec("shannon_entropy", "linear"),
    PairingSpec("shannon_entropy", "box", {}, {"a": 0.5, "b": 2.0}),
)


class Registry:
    """Geometries, convex functions and registered pairings."""

    def __init__(self, geometries=None, phis=None, pairings=None):
        self.geometries = dict(GEOMETRIES if geometries is None else geometries)
        self.phis = dict(PHIS if phis is None else phis)
        self.pairings = list(DEFAULT_PAIRINGS if pairings is None else pairings)

    @classmethod
    def empty(cls) -> "Registry":
        return cls({}, {}, [])

    def find(self, geometry: str, phi: str) -> PairingSpec | None:
        for spec in self.pairings:
            if spec.key == (geometry, phi):
                return spec
        return None


DEFAULT_REGISTRY = Registry()


def list_catalog(registry: Registry | None = None, dim: int = 2) -> dict:
    """Geometries, convex functions and pairings with their CQ flags."""
    reg = DEFAULT_REGISTRY if registry is None else registry
    geos = []
    for name in sorted(reg.geometries):
        f = make_geometry(name, dim)
        d = f.describe()
        geos.append({"name": name, "supercoercive": f.supercoercive,
                     "dom_f": d["dom_f"], "dom_fstar": d["dom_fstar"]})
    phis = sorted(reg.phis)
    pairs = []
    for spec in reg.pairings:
        entry = spec.build(dim)
        pairs.append({"geometry": spec.geometry, "geometry_params": spec.geometry_params,
                      "phi": spec.phi, "phi_params": spec.phi_params,
                      "cq_primal": entry.cq_primal, "cq_dual": entry.cq_dual,
                      "justification": entry.justification})
    return {"geometries": geos, "phis": phis, "pairings": pairs}


# configuration ---------------------------------------------------------------

def _parse_override(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol-override expects key=value, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"tolerance {key!r} needs a number, got {value!r}") from None
    return out


def build_tolerances(config: dict, overrides: dict) -> ToleranceProfile:
    merged = dict(config.get("tolerances", {}))
    merged.update(overrides)
    try:
        return DEFAULT_TOL.override(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad tolerances: {exc}") from None


def _named(entry, what: str):
    if isinstance(entry, str):
        return entry, {}
    if isinstance(entry, dict) and isinstance(entry.get("name"), str):
        return entry["name"], dict(entry.get("params", {}))
    raise ConfigError(f"{what} must be a name or {{'name': ..., 'params': {{...}}}}")


def _scenarios(config: dict) -> list[dict]:
    if "scenarios" in config:
        scs = config["scenarios"]
        if not isinstance(scs, list):
            raise ConfigError("'scenarios' must be a list")
        return scs
    if "geometry" in config or "phi" in config:
        return [config]
    return []


@dataclass
class Scenario:
    index: int
    geometry: str
    phi_name: str
    pairing: PairingLedgerEntry
    points: np.ndarray

    @property
    def f(self):
        return self.pairing.f

    @property
    def phi(self):
        return self.pairing.phi


def resolve_scenario(index: int, sc: dict, seed: int, registry: Registry) -> Scenario:
    if not isinstance(sc, dict):
        raise ConfigError(f"scenario {index} must be an object")
    gname, gparams = _named(sc.get("geometry"), "geometry")
    pname, pparams = _named(sc.get("phi"), "phi")
    if gname not in registry.geometries:
        raise ConfigError(f"unknown geometry {gname!r}")
    if pname not in registry.phis:
        raise ConfigError(f"unknown phi {pname!r}")
    pts = sc.get("points", {"count": 10})
    dim = sc.get("dim")
    if isinstance(pts, list):
        try:
            arr = np.asarray(pts, dtype=float)
        except (TypeError, ValueError):
            arr = np.empty(0)
        if arr.ndim != 2:
            raise ConfigError("explicit points must be a list of equal-length vectors")
        dim = arr.shape[1] if dim is None else dim
        if arr.shape[1] != dim:
            raise ConfigError(f"points have length {arr.shape[1]}, dim is {dim}")
    if dim is None:
        dim = 2
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError(f"dim must be a positive integer, got {dim!r}")
    try:
        registered = registry.find(gname, pname)
        spec = PairingSpec(gname, pname, {**(registered.geometry_params if registered else {}),
                                          **gparams},
                           {**(registered.phi_params if registered else {}), **pparams},
                           registered.justification if registered else "")
        entry = spec.build(dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"scenario {index}: cannot build ({gname}, {pname}): {exc}") from None
    if not entry.cq_dual:
        raise ConfigError(f"scenario {index}: ({gname}, {pname}) is neither registered "
                          "nor auto-certifiable (dual CQ)")
    if isinstance(pts, list):
        points = arr
    elif isinstance(pts, dict):
        count = pts.get("count", 10)
        if not isinstance(count, int) or count < 1:
            raise ConfigError("points.count must be a positive integer")
        try:
            points = sample_admissible(entry.f, entry.phi, count, int(pts.get("seed", seed)), index)
        except UnsupportedGeometryError as exc:
            raise ConfigError(f"scenario {index}: {exc}") from None
    else:
        raise ConfigError("points must be a list or {count, seed}")
    return Scenario(index, gname, pname, entry, points)


# suites ----------------------------------------------------------------------

@dataclass
class SolverStats:
    solves: int = 0
    nonconverged: int = 0
    iterations: list = field(default_factory=list)

    def add(self, *results):
        for r in results:
            self.solves += 1
            self.nonconverged += 0 if r.converged else 1
            self.iterations.append(r.solve.iterations)

    def to_dict(self) -> dict:
        its = self.iterations or [0]
        return {"solves": self.solves, "nonconverged": self.nonconverged,
                "max_iterations": int(max(its)), "mean_iterations": float(np.mean(its))}


def _run_scenario(sc: Scenario, suites, tol, seed, stats: SolverStats, frame=None):
    out = {"index": sc.index, "geometry": sc.f.describe(), "phi": sc.phi.describe(),
           "pairing": sc.pairing.to_dict(), "points": [], "suites": {}}
    reports = {}
    need_dec = {"theorem", "cone", "resolvent"} & set(suites)
    theorem = SuiteReport("theorem")
    cone = SuiteReport("cone")
    resolvent = SuiteReport("resolvent")
    for k, x in enumerate(sc.points):
        if not need_dec:
            break
        try:
            rep = decompose(sc.f, sc.phi, x, sc.pairing, tol, seed=seed)
        except (PreconditionError, DomainError, InfeasibleStartError) as exc:
            theorem.record("precondition", np.inf, 0.0)
            theorem.notes.append(f"point {k}: {exc}")
            continue
        stats.add(rep.aprox_result, rep.bprox_result)
        reports[k] = rep
        entry = rep.to_dict(tol)
        entry["index"] = k
        if "theorem" in suites:
            record_report(theorem, rep, tol=tol)
        if "cone" in suites and isinstance(sc.phi, ConeIndicator):
            cone.record("orthogonality", abs(rep.pairing_value), tol.gap_tol)
            cone.record("reconstruction", rep.residual_ii, rep.bounds(tol)["residual_ii"])
        if "resolvent" in suites:
            rr = verify_resolvent(sc.f, sc.phi, x, sc.pairing, tol, report=rep)
            resolvent.record("first_inclusion", rr.first_inclusion, tol.gap_tol)
            resolvent.record("second_inclusion", rr.second_inclusion, tol.gap_tol)
            resolvent.record("reconstruction", rr.reconstruction,
                             tol.vector_tol * (1.0 + np.linalg.norm(x)))
            if rr.euclid_sum is not None:
                resolvent.record("euclid_sum", rr.euclid_sum,
                                 tol.value_tol * (1.0 + np.linalg.norm(x)))
            entry["resolvent"] = rr.to_dict()
        out["points"].append(entry)
    if "theorem" in suites:
        out["suites"]["theorem"] = theorem
    if "cone" in suites:
        if not isinstance(sc.phi, ConeIndicator):
            cone.notes.append(f"skipped: phi {sc.phi.name} is not a cone indicator")
        out["suites"]["cone"] = cone
    if "resolvent" in suites:
        out["suites"]["resolvent"] = resolvent
    if "oracle" in suites:
        oracle = SuiteReport("oracle")
        if sc.f.dim > 2:
            oracle.notes.append(f"skipped: grid oracles need n <= 2 (n = {sc.f.dim})")
        else:
            for x in sc.points:
                verify_oracle(sc.f, sc.phi, x, sc.pairing, tol, suite=oracle)
        out["suites"]["oracle"] = oracle
    if "frame" in suites:
        fr = SuiteReport("frame")
        if frame is None:
            fr.notes.append("skipped: no frame vectors (use the frame subcommand)")
        else:
            for x in sc.points:
                d = frame_decompose(frame, sc.phi, x, tol=tol)
                stats.add(d.report.aprox_result, d.report.bprox_result)
                fr.record("reconstruction", d.reconstruction_residual,
                          tol.vector_tol * (1.0 + np.linalg.norm(x)))
                fr.record("synthesis", d.synthesis_residual,
                          tol.vector_tol * (1.0 + np.linalg.norm(d.b)))
                fr.record("solver_certificate",
                          max(d.report.aprox_result.solve.gap_certificate,
                              d.report.bprox_result.solve.gap_certificate), tol.gap_tol)
        out["suites"]["frame"] = fr
    return out


def run_config(config: dict, seed: int | None = None, overrides: dict | None = None,
               registry: Registry | None = None, frame=None, default_suites=("theorem",)) -> dict:
    """Execute a parsed configuration and return the report (without writing it)."""
    reg = DEFAULT_REGISTRY if registry is None else registry
    if not isinstance(config, dict):
        raise ConfigError("configuration must be a JSON object")
    tol = build_tolerances(config, overrides or {})
    base_seed = int(config.get("seed", 0) if seed is None else seed)
    suites = config.get("suites", list(default_suites))
    if not isinstance(suites, list) or not suites:
        raise ConfigError("'suites' must be a non-empty list")
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise ConfigError(f"unknown suite(s) {bad}; choose from {list(SUITES)}")
    if frame is not None and "frame" not in suites:
        suites = list(suites) + ["frame"]
    scenarios = [resolve_scenario(i, sc, base_seed, reg)
                 for i, sc in enumerate(_scenarios(config))]
    if frame is not None:
        for sc in scenarios:
            if sc.f.dim != frame.dim:
                raise ConfigError(f"scenario {sc.index} has dim {sc.f.dim}, frame is in "
                                  f"R^{frame.dim}")
    per_scenario = [s for s in suites if s != "hilbert"]
    if per_scenario and not scenarios:
        raise ConfigError(f"suites {per_scenario} need at least one scenario")

    stats = SolverStats()
    sc_out = [_run_scenario(sc, per_scenario, tol, base_seed, stats, frame) for sc in scenarios]
    merged = {}
    for name in suites:
        total = SuiteReport(name)
        if name == "hilbert":
            total.merge(verify_hilbert_special_cases(base_seed, tol=tol))
        for s in sc_out:
            if name in s["suites"]:
                total.merge(s["suites"][name], prefix=f"s{s['index']}.")
        merged[name] = total
    for s in sc_out:
        s["suites"] = {k: v.to_dict() for k, v in s["suites"].items()}

    max_res = {}
    for s in sc_out:
        for p in s["points"]:
            for key in ("residual_i", "residual_ii", "residual_iii", "residual_iv",
                        "dstar_discrepancy"):
                v = p[key]
                v = np.inf if isinstance(v, str) else v
                max_res[key] = max(max_res.get(key, 0.0), v)
    passed = all(m.passed for m in merged.values())
    return {
        "schema": SCHEMA,
        "tool_version": __version__,
        "seed": base_seed,
        "tolerances": tol.to_dict(),
        "suites": {k: {"passed": v.passed, "skipped": v.skipped, "checks": v.checks,
                       "failures": v.failures}
                   for k, v in merged.items()},
        "suite_details": {k: v.to_dict() for k, v in merged.items()},
        "max_residuals": {k: _num(v) for k, v in sorted(max_res.items())},
        "solver_stats": stats.to_dict(),
        "scenarios": sc_out,
        "passed": passed,
    }


def report_digest(report: dict) -> str:
    """sha256 of the canonical JSON of everything except ``metadata``."""
    body = {k: v for k, v in report.items() if k != "metadata"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def finalize(report: dict) -> dict:
    report = dict(report)
    report["metadata"] = {"timestamp": datetime.now(timezone.utc).isoformat(),
                          "python": platform.python_version(),
                          "numpy": np.__version__,
                          "digest": report_digest(report)}
    return report


def write_csv(report: dict, path) -> None:
    cols = ["residual_i", "residual_ii", "residual_iii", "residual_iv", "dstar_discrepancy"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "point", "geometry", "phi", *cols])
        for s in report["scenarios"]:
            for p in s["points"]:
                w.writerow([s["index"], p["index"], s["geometry"]["name"], s["phi"]["name"],
                            *[p[c] for c in cols]])


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


# entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="moreaulab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="base seed for sampled points")
        p.add_argument("--tol-override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a tolerance field (repeatable)")
        p.add_argument("--out", default=None, help="write the JSON report here (default stdout)")
        p.add_argument("--csv", default=None, help="also write a per-point residual table")

    run = sub.add_parser("run", help="run the suites of a JSON config")
    run.add_argument("config")
    common(run)
    sub.add_parser("catalog", help="list geometries, convex functions and pairings")
    fr = sub.add_parser("frame", help="frame decomposition with vectors from a CSV file")
    fr.add_argument("vectors")
    fr.add_argument("config")
    common(fr)
    return ap


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.csv:
        write_csv(report, args.csv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "catalog":
            print(json.dumps(list_catalog(), indent=2, sort_keys=True))
            return EXIT_OK
        config = load_config(args.config)
        overrides = _parse_override(args.tol_override)
        if args.command == "frame":
            try:
                frame = load_frame_csv(args.vectors)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"frame vectors: {exc}") from None
            report = run_config(config, args.seed, overrides, frame=frame,
                                default_suites=("frame",))
        else:
            report = run_config(config, args.seed, overrides)
    except (ConfigError, UsageError, UnsupportedGeometryError) as exc:
        print(f"moreaulab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = finalize(report)
    _emit(report, args)
    if not report["passed"]:
        failing = [k for k, v in report["suites"].items() if not v["passed"]]
        print(f"moreaulab: residual failure in suite(s) {failing}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
