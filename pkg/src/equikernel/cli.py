"""Command-line entry point: dims, locus, verify, basis, scan and compare."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .asymptotics import compare_diag
from .config import ConfigError, RunConfig, write_csv_atomic, write_text_atomic
from .geometry import (
    Locus,
    SpherePoint,
    classify,
    moment_map,
    point_with_spectrum,
    random_points,
    sample_boundary,
    spectrum_for_t,
)
from .hardy import isotype_basis, kernel_pairs
from .lie_rep import Weight, isotype_dimension

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def stated_dimension(example: str, k: int, nu: Weight) -> int:
    if example == "P3":
        return k * k * nu.dim ** 2
    return k * k * nu.nu1 * (k * nu.nu2 + 1) * nu.dim


def _failure(out: Path, command: str, reason: str, extra=None) -> None:
    record = {"command": command, "status": "fail", "reason": reason, **(extra or {})}
    write_text_atomic(out / f"{command}_failure.json", json.dumps(record, indent=2))
    print(json.dumps(record), file=sys.stderr)


def cmd_dims(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    if not cfg.k_grid:
        print("usage error: empty k grid", file=sys.stderr)
        return EXIT_USAGE
    rows, bad = [], []
    for k in cfg.k_grid:
        total, per_level = isotype_dimension(cfg.example, k, cfg.nu)
        count = len(isotype_basis(cfg.example, k, cfg.nu))
        closed = stated_dimension(cfg.example, k, cfg.nu)
        match = count == total == closed
        if not match:
            bad.append(k)
        rows.append([k, total, ";".join(f"{l}:{m}" for l, m in sorted(per_level.items())), count, closed,
                     int(match)])
    write_csv_atomic(out / "dims.csv", "dims/1",
                     ["k", "total_dim", "per_level", "basis_count", "closed_form", "match"], rows)
    if bad:
        _failure(out, "dims", "closed form disagrees with the exact count", {"k": bad})
        return EXIT_FAIL
    return EXIT_OK


def locus_points(cfg: RunConfig, n: int) -> list[tuple[str, SpherePoint]]:
    rng = np.random.default_rng(cfg.seeds)
    pts = [("random", SpherePoint(cfg.example, c)) for c in random_points(cfg.example, n, rng)]
    pts += [("boundary", p) for p in sample_boundary(cfg.nu, n, cfg.seeds + 1, cfg.example)]
    pts.append(("inner_t=1/4", point_with_spectrum(cfg.example, *spectrum_for_t(cfg.nu, 0.25))))
    return pts


def cmd_locus(cfg: RunConfig, n: int) -> int:
    out = Path(cfg.output_dir)
    pts = locus_points(cfg, n)
    m = pts[0][1].coords.size
    header = ["point_id", "source"] + [f"{p}{i}" for i in range(m) for p in ("re", "im")] + [
        "lambda1", "lambda2", "t_value", "class"]
    rows, counts, bad = [], {}, 0
    for i, (source, p) in enumerate(pts):
        lc = classify(p, cfg.nu, tol_t=cfg.tol("t"))
        mv = moment_map(p)
        coords = [v for c in p.coords for v in (c.real, c.imag)]
        rows.append([i, source] + [repr(float(v)) for v in coords] + [
            repr(mv.lambda1), repr(mv.lambda2), "" if lc.t_value is None else repr(lc.t_value), lc.tag.value])
        counts.setdefault(source, {}).setdefault(lc.tag.value, 0)
        counts[source][lc.tag.value] += 1
        if source == "boundary" and lc.tag is not Locus.BOUNDARY:
            bad += 1
        if source.startswith("inner") and lc.tag is not Locus.INNER:
            bad += 1
    write_csv_atomic(out / "locus.csv", "locus/1", header, rows)
    fractions = {s: {t: c / sum(v.values()) for t, c in v.items()} for s, v in counts.items()}
    write_text_atomic(out / "locus_summary.json", json.dumps({"config": cfg.to_dict(), "fractions": fractions},
                                                             indent=2))
    print(json.dumps(fractions))
    return EXIT_OK if bad == 0 else EXIT_FAIL


def cmd_verify(cfg: RunConfig, only=None) -> int:
    out = Path(cfg.output_dir)
    results = acceptance.run_all(cfg, only)
    for r in results:
        print(r.line())
    report = {
        "config": cfg.to_dict(),
        "all_passed": all(r.passed for r in results),
        "criteria": [{"name": r.name, "passed": r.passed, "summary": r.summary, "seconds": r.seconds,
                      "details": r.details} for r in results],
    }
    write_text_atomic(out / "verify.json", json.dumps(report, indent=2, default=_json_default))
    return EXIT_OK if report["all_passed"] else EXIT_FAIL


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)


def cmd_basis(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    for k in cfg.k_grid:
        b = isotype_basis(cfg.example, k, cfg.nu)
        write_text_atomic(out / f"basis_{cfg.example}_k{k}_nu{cfg.nu.nu1}_{cfg.nu.nu2}.json",
                          json.dumps(b.to_json()))
    return EXIT_OK


def cmd_scan(cfg: RunConfig, n: int) -> int:
    out = Path(cfg.output_dir)
    rng = np.random.default_rng(cfg.seeds)
    pts = random_points(cfg.example, n, rng)
    xs, ys = np.repeat(np.arange(n), n), np.tile(np.arange(n), n)
    rows = []
    for k in cfg.k_grid:
        vals = kernel_pairs(cfg.example, k, cfg.nu, pts[xs], pts[ys])
        rows += [[k, int(i), int(j), repr(v.real), repr(v.imag)] for i, j, v in zip(xs, ys, vals)]
    write_csv_atomic(out / "kernel_scan.csv", "kernel_scan/1", ["k", "x_id", "y_id", "re", "im"], rows)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, n: int) -> int:
    out = Path(cfg.output_dir)
    rep = compare_diag(cfg.nu, cfg.k_grid, n, cfg.seeds, cfg.example)
    rep.notes["config"] = cfg.to_dict()
    write_text_atomic(out / "compare.json", rep.to_json())
    write_text_atomic(out / "compare.csv", rep.to_csv())
    print(json.dumps(rep.passed))
    return EXIT_OK if all(rep.passed.values()) else EXIT_FAIL


def _parse_kgrid(text: str) -> list[int]:
    if not text.strip():
        return []
    return [int(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="equikernel", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("dims", "locus", "verify", "basis", "scan", "compare"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat JSON RunConfig; command-line flags override it")
        s.add_argument("--example", choices=["P3", "P4"])
        s.add_argument("--nu", help="weight as 'nu1,nu2'")
        g = s.add_mutually_exclusive_group()
        g.add_argument("--kmax", type=int, help="use k = 1..kmax")
        g.add_argument("--k", dest="k_list", help="explicit comma-separated k grid")
        s.add_argument("--grid", help="quadrature grid as TORUSxFLAG, e.g. 64x32")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory")
        s.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                       help="tolerance override, e.g. AC5.band=1e-15")
        if name in ("locus", "scan", "compare"):
            s.add_argument("--n", type=int, default={"locus": 200, "scan": 5, "compare": 10}[name])
        if name == "verify":
            s.add_argument("--only", help="comma-separated criteria, e.g. AC1,AC3")
    return p


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.example:
        cfg.example = args.example
    if args.nu:
        cfg.nu = Weight.parse(args.nu)
    if args.kmax is not None:
        cfg.k_grid = list(range(1, args.kmax + 1))
    if args.k_list is not None:
        cfg.k_grid = _parse_kgrid(args.k_list)
    if args.grid:
        torus, flag = (int(v) for v in args.grid.lower().split("x"))
        cfg.grids = {"torus": torus, "flag": flag}
    if args.seed is not None:
        cfg.seeds = args.seed
    if args.out:
        cfg.output_dir = args.out
    for item in args.tol:
        key, _, val = item.partition("=")
        cfg.tolerances[key] = float(val)
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        cfg = config_from_args(args)
    except (ConfigError, ValueError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "dims":
        return cmd_dims(cfg)
    if args.command == "locus":
        return cmd_locus(cfg, args.n)
    if args.command == "verify":
        return cmd_verify(cfg, args.only.split(",") if args.only else None)
    if args.command == "basis":
        return cmd_basis(cfg)
    if args.command == "scan":
        return cmd_scan(cfg, args.n)
    return cmd_compare(cfg, args.n)


if __name__ == "__main__":
    sys.exit(main())
