"""
Command line entry point.

    prescribed-curvature solve <config.yaml> [--threads K] [--out DIR]
    prescribed-curvature export <run-dir> --format {curve-table,diagnostics-table,plot-bundle} [--out DIR]

``solve`` writes a timestamped run directory containing the normalized
config, ``result.json`` and the exports listed in the config. Exit codes:
0 when every branch completes and every state certifies, 2 for partial runs
(step collapse, monitor violation, failed seed or uncertified state), 1 for
configuration and domain errors raised before any solve.

The output directory is taken from ``--out``, else the environment variable
``PRESCRIBED_CURVATURE_OUT``, else ``output.directory`` in the config.
"""

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import FORMATS, RunConfig, config_to_dict, load_config, serialize_config
from .continuation import (
    Branch,
    ContinuationSchedule,
    Monitors,
    default_schedule,
    run_branches,
    seed_circle,
)
from .curve import aligned_distance
from .errors import ConfigError, ConvexityError, DomainError
from .geometry import ConformalMetric
from .harmonics import HarmonicSum
from .solver import CurvatureSpec, SolverOptions
from .verify import Diagnostics

OUT_ENV = "PRESCRIBED_CURVATURE_OUT"
RESULT_FILE = "result.json"
EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


# ---------------------------------------------------------------------------
# problem assembly


def build_metric(cfg: RunConfig) -> ConformalMetric:
    return ConformalMetric(tuple(cfg.metric.terms), t=1.0, grid_resolution=cfg.metric.grid_resolution)


def build_spec(cfg: RunConfig) -> CurvatureSpec:
    cv = cfg.curvature
    if cv.constant is not None:
        return CurvatureSpec.constant(cv.constant)
    return CurvatureSpec(HarmonicSum(tuple(cv.terms), cv.offset))


def build_schedule(cfg: RunConfig) -> ContinuationSchedule:
    sc = cfg.schedule
    kw = dict(max_step=sc.max_step, min_step=sc.min_step, continuity_threshold=sc.continuity_threshold,
              small_curvature_threshold=sc.small_curvature_threshold,
              monitors=Monitors(**vars(sc.monitors)))
    if sc.path is not None:
        return ContinuationSchedule(list(sc.path), **kw)
    return default_schedule(sc.s_target, sc.s_steps, sc.t_steps, **kw)


def build_options(cfg: RunConfig) -> SolverOptions:
    return SolverOptions(**vars(cfg.solver))


def build_seeds(cfg: RunConfig, spec: CurvatureSpec, schedule: ContinuationSchedule):
    s0 = schedule.path[0][1]
    seeds = []
    for i, axis in enumerate(cfg.seeds.axes):
        a = np.asarray(axis, float) / np.linalg.norm(axis)
        if cfg.seeds.kappa is not None:
            kappa = cfg.seeds.kappa[i]
        else:
            kappa = max(0.0, float(spec.with_scale(s0)(a)))
        seeds.append((f"branch-{i}", seed_circle(kappa, a, cfg.seeds.N)))
    return seeds


# ---------------------------------------------------------------------------
# persistence


def branch_record(branch: Branch) -> dict:
    return {
        "seed_id": branch.seed_id,
        "status": branch.status,
        "forensics": branch.forensics,
        "states": [
            {"t": st.t, "s": st.s, "nodes": st.curve.nodes.tolist(),
             "diagnostics": st.diagnostics.to_dict(), "solve": st.solve}
            for st in branch.states
        ],
    }


def _new_run_dir(base: Path, stem: str) -> Path:
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    base.mkdir(parents=True, exist_ok=True)
    for i in range(1000):
        cand = base / (f"{stamp}-{stem}" if i == 0 else f"{stamp}-{stem}-{i}")
        try:
            cand.mkdir()
            return cand
        except FileExistsError:
            continue
    raise OSError(f"could not allocate a run directory under {base}")


def _write_json(path: Path, obj):
    # json writes floats with repr, the shortest round-trip decimal
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n", encoding="utf-8")


def run_outcome(branches, certified) -> int:
    if all(b.complete for b in branches) and certified:
        return EXIT_OK
    return EXIT_PARTIAL


def run(config_path, out=None, threads: int = 1) -> int:
    """Execute a config end to end and return the exit code."""
    try:
        cfg = load_config(config_path)
        metric = build_metric(cfg)
        spec = build_spec(cfg)
        schedule = build_schedule(cfg)
        schedule.check_small_curvature(spec)
        opts = build_options(cfg)
        seeds = build_seeds(cfg, spec, schedule)
        base = Path(out or os.environ.get(OUT_ENV) or cfg.output.directory)
        run_dir = _new_run_dir(base, Path(config_path).stem)
    except (ConfigError, ConvexityError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    # forensics must survive a crash mid-run
    (run_dir / "config.yaml").write_text(serialize_config(cfg), encoding="utf-8")
    branches = run_branches(seeds, metric, spec, schedule, opts, threads=threads)

    certified = all(st.diagnostics.all_ok for b in branches for st in b.states)
    terminals = [b.terminal.curve for b in branches if b.terminal is not None and b.complete]
    distinct = None
    if len(terminals) >= 2:
        distinct = min(aligned_distance(a, b) for i, a in enumerate(terminals) for b in terminals[i + 1:])
    merged = distinct is not None and not distinct > cfg.seeds.separation_threshold
    if merged:
        print(f"warning: branches merged (distinctness {distinct:.3g} <= "
              f"{cfg.seeds.separation_threshold})", file=sys.stderr)
    code = run_outcome(branches, certified)
    result = {
        "run_id": run_dir.name,
        "config": config_to_dict(cfg),
        "exit_code": code,
        "distinctness": distinct,
        "merged": merged,
        "branches": [branch_record(b) for b in branches],
    }
    _write_json(run_dir / RESULT_FILE, result)
    for b in branches:
        if not b.complete:
            print(f"{b.seed_id}: {b.status} {json.dumps(_brief(b.forensics))}", file=sys.stderr)
    try:
        for fmt in cfg.output.formats:
            export(run_dir, fmt)
    except OSError as exc:
        print(f"error: export failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(run_dir)
    return code


def _brief(forensics):
    return {k: v for k, v in forensics.items() if k not in ("curve", "diagnostics")}


# ---------------------------------------------------------------------------
# export


def load_result(run_dir) -> dict:
    path = Path(run_dir) / RESULT_FILE
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(x) -> str:
    return repr(float(x))


def _write_curve_table(result, dest: Path):
    for br in result["branches"]:
        lines = []
        for i, st in enumerate(br["states"]):
            nodes = st["nodes"]
            lines.append(f"# state {i} t {_fmt(st['t'])} s {_fmt(st['s'])} N {len(nodes)}")
            lines.extend(f"{k} {_fmt(x)} {_fmt(y)} {_fmt(z)}" for k, (x, y, z) in enumerate(nodes))
        (dest / f"{br['seed_id']}.curves.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


DIAG_FIELDS = list(Diagnostics.__dataclass_fields__)


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (int, float)):
        return _fmt(v)
    return json.dumps(v, sort_keys=True)


def _write_diagnostics_table(result, dest: Path):
    with open(dest / "diagnostics.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["branch", "state", "t", "s"] + DIAG_FIELDS)
        for br in result["branches"]:
            for i, st in enumerate(br["states"]):
                d = st["diagnostics"]
                w.writerow([br["seed_id"], i, _fmt(st["t"]), _fmt(st["s"])] + [_cell(d.get(f)) for f in DIAG_FIELDS])


def _write_plot_bundle(result, dest: Path):
    # closed polylines, one CSV per branch; blank-free so any CSV reader works
    for br in result["branches"]:
        with open(dest / f"{br['seed_id']}.polyline.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["state", "t", "s", "k", "x", "y", "z"])
            for i, st in enumerate(br["states"]):
                nodes = st["nodes"] + st["nodes"][:1]
                for k, (x, y, z) in enumerate(nodes):
                    w.writerow([i, _fmt(st["t"]), _fmt(st["s"]), k, _fmt(x), _fmt(y), _fmt(z)])


WRITERS = {
    "curve-table": _write_curve_table,
    "diagnostics-table": _write_diagnostics_table,
    "plot-bundle": _write_plot_bundle,
}


def export(run_dir, fmt: str, out=None) -> Path:
    """Write one export format for a run; returns the directory written."""
    if fmt not in WRITERS:
        raise ConfigError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    result = load_result(run_dir)
    dest = Path(out) if out is not None else Path(run_dir) / "exports" / fmt
    dest.mkdir(parents=True, exist_ok=True)
    WRITERS[fmt](result, dest)
    return dest


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prescribed-curvature",
                                 description="Closed curves of prescribed geodesic curvature on conformal spheres.")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("solve", help="run continuation for a config file")
    sp.add_argument("config")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out", default=None, help="parent directory for the run directory")
    ep = sub.add_parser("export", help="export a finished run")
    ep.add_argument("run_dir")
    ep.add_argument("--format", required=True, choices=FORMATS)
    ep.add_argument("--out", default=None, help="target directory (default: <run-dir>/exports/<format>)")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "solve":
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_ERROR
        return run(args.config, args.out, args.threads)
    try:
        print(export(args.run_dir, args.format, args.out))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
