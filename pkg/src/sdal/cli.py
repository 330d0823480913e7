"""``sdal`` command line: FOM snapshots, active learning, ROM build and query, trace export.

Exit codes: 0 success, 1 computation failure, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import rom_ksnn, rom_nn
from .actlearn import (
    ActiveLearnResult,
    read_trace_csv,
    run_active_learning,
    write_trace_csv,
)
from .artifact import RomKind, kind_of, load_artifact, save_artifact
from .burgers import ArchiveFom, BurgersConfig, BurgersFom, burgers_query
from .config import OUTPUT_ENV, RunConfig, load_config
from .errors import ConfigError, IngestionError, SdalError
from .io import (
    _fmt,
    atomic_write_text,
    read_points_csv,
    read_snapshots,
    write_points_csv,
    write_snapshots_bin,
    write_snapshots_csv,
)
from .params import ParameterStore
from .pod import SnapshotMatrix, compute_pod
from .rbf import RbfKernelSpec

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_CONFIG = 2

_SNAP_NAME = re.compile(r"^(initial|query)_(\d+)\.(sdal|csv)$")


def _csv_text(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, (int, str)) else _fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _write_json(path, data: dict) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _output_dir(explicit: Optional[str]) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ENV) or ".")


def _snapshot_writer(fmt: str):
    return (write_snapshots_bin, "sdal") if fmt == "bin" else (write_snapshots_csv, "csv")


# ---------------------------------------------------------------- fom


def cmd_fom_burgers(args) -> int:
    base = BurgersConfig.demo() if args.preset == "demo" else BurgersConfig()
    overrides = {k: getattr(args, k) for k in ("n_x", "x_lo", "x_hi", "t_final", "n_t") if getattr(args, k) is not None}
    if args.initial_condition:
        overrides["initial_condition"] = args.initial_condition
    try:
        config = BurgersConfig(**{**base.__dict__, **overrides})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.nu is None and args.mu is None:
        raise ConfigError("give --nu or --mu")
    if args.nu is not None:
        values, scale = args.nu, "linear"
    else:
        values, scale = args.mu, "log10"
    out = _output_dir(args.out_dir)
    write, ext = _snapshot_writer(args.format)
    for k, v in enumerate(values):
        snap = burgers_query(config, [v], scale)
        path = out / f"burgers_{k:04d}.{ext}"
        write(path, snap)
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------- learn


def _archive_from_dir(directory: Path) -> ArchiveFom:
    if not directory.is_dir():
        raise ConfigError(f"snapshot directory {directory} does not exist", key="archive_dir")
    arch = ArchiveFom()
    for path in sorted(directory.iterdir()):
        if path.is_file() and path.read_bytes()[:4] == b"SDAL":
            arch.add(read_snapshots(path))
    if not arch.snapshots:
        raise ConfigError(f"no binary snapshot files in {directory}", key="archive_dir")
    return arch


def _make_fom(cfg: RunConfig):
    if cfg.fom == "archive":
        return _archive_from_dir(cfg.archive_dir)
    return BurgersFom(cfg.burgers(), cfg.param_scale)


def _parameter_grid(cfg: RunConfig):
    try:
        return cfg.parameter_grid()
    except (OSError, IngestionError) as exc:
        key = "training_csv" if cfg.training_csv is not None else "grid"
        raise cfg.fail(key, f"cannot load parameter points: {exc}") from None


def non_monotone_steps(initial: float, trace) -> int:
    """Number of iterations whose ``d_max`` exceeds the previous value."""
    prev, count = initial, 0
    for rec in trace:
        d = rec.d_max if hasattr(rec, "d_max") else rec["d_max"]
        count += d > prev
        prev = d
    return int(count)


def learn_summary(cfg: RunConfig, res: ActiveLearnResult, n_initial: int) -> dict:
    s = res.summary()
    s.update(
        variant=cfg.variant.value,
        measure=cfg.measure.value,
        energy_criterion=cfg.energy_criterion,
        n_initial=n_initial,
        non_monotone_steps=non_monotone_steps(res.initial_d_max, res.trace),
    )
    return s


def cmd_learn(args) -> int:
    cfg = load_config(args.config)
    alcfg = cfg.active_learning()
    train, cand = _parameter_grid(cfg)
    try:
        store = ParameterStore(train, cand, cfg.n_neighbors)
    except (SdalError, ValueError) as exc:
        raise ConfigError(f"invalid parameter sets: {exc}") from None
    fom = _make_fom(cfg)
    try:
        initial = [fom.query(m) for m in store.training]
    except Exception as exc:  # noqa: BLE001 - report oracle failures with context
        raise SdalError(f"FOM query failed while computing the initial snapshots: {exc}") from exc
    n_initial = len(initial)
    res = run_active_learning(store, initial, fom, alcfg)
    out = cfg.output_dir
    dim = store.dim
    header = [f"mu_{k}" for k in range(dim)]
    write_points_csv(out / "P.csv", res.store.training, header)
    write_points_csv(out / "candidates.csv", res.store.candidates, header)
    write, ext = _snapshot_writer(cfg.snapshot_format)
    for k, snap in enumerate(res.snapshots):
        origin = "initial" if k < n_initial else "query"
        write(out / "snapshots" / f"{origin}_{k:04d}.{ext}", snap)
    ranks = [
        [*res.store.training[k], phi.rank, "initial" if k < n_initial else "query", max(0, k - n_initial + 1)]
        for k, phi in enumerate(res.subspaces)
    ]
    atomic_write_text(out / "ranks.csv", _csv_text([*header, "rank", "origin", "iter"], ranks))
    write_trace_csv(out / "trace.csv", res.trace, dim)
    summary = learn_summary(cfg, res, n_initial)
    _write_json(out / "summary.json", summary)
    print(
        f"{summary['status']}: {res.n_queries} queries, D_max {res.initial_d_max:.4g} -> {res.final_d_max:.4g}"
        + ("" if res.estimator is None else f", estimator {res.estimator:.4g}")
    )
    return EXIT_OK


# ---------------------------------------------------------------- rom build


def load_training_snapshots(cfg: RunConfig) -> tuple[np.ndarray, list[SnapshotMatrix]]:
    """Training points and their snapshots, from the config or a previous ``learn`` run."""
    p_path = cfg.training_csv or cfg.output_dir / "P.csv"
    snap_dir = cfg.snapshot_dir or cfg.output_dir / "snapshots"
    try:
        points = read_points_csv(p_path)
    except (OSError, IngestionError) as exc:
        raise cfg.fail("training_csv", f"cannot read training points {p_path}: {exc}") from None
    if not snap_dir.is_dir():
        raise cfg.fail("snapshot_dir", f"snapshot directory {snap_dir} does not exist")
    by_key: dict[bytes, SnapshotMatrix] = {}
    for path in sorted(snap_dir.iterdir()):
        m = _SNAP_NAME.match(path.name)
        if path.is_file() and path.read_bytes()[:4] == b"SDAL":
            snap = read_snapshots(path)
        elif m and m.group(3) == "csv" and int(m.group(2)) < len(points):
            snap = read_snapshots(path, points[int(m.group(2))])
        else:
            continue
        by_key[snap.parameter.tobytes()] = snap
    missing = [p.tolist() for p in points if p.tobytes() not in by_key]
    if missing:
        raise IngestionError(f"no snapshots for training points {missing[:3]}{'...' if len(missing) > 3 else ''}")
    return points, [by_key[p.tobytes()] for p in points]


def build_rom(cfg: RunConfig, points, snapshots):
    eta = cfg.energy_criterion if cfg.online_energy_criterion is None else cfg.online_energy_criterion
    if cfg.rom_kind == "pod-ksnn":
        kernel = RbfKernelSpec(cfg.rom_kernel, cfg.rom_width)
        tk = None
        if cfg.time_kernel is not None or cfg.time_width is not None:
            tk = RbfKernelSpec(cfg.time_kernel or cfg.rom_kernel, cfg.time_width or cfg.rom_width)
        return rom_ksnn.offline_build(points, snapshots, kernel, eta, tk)
    settings = rom_nn.RegressorSettings(
        kind=rom_nn.RegressorKind(cfg.regressor),
        kernel=RbfKernelSpec(cfg.regressor_kernel, cfg.regressor_width),
        max_centers=cfg.regressor_max_centers,
        split=cfg.regressor_split,
        seed=cfg.seed,
    )
    subspaces = [compute_pod(s, cfg.energy_criterion) for s in snapshots]
    return rom_nn.offline_build(points, snapshots, cfg.energy_criterion, cfg.global_energy_criterion, settings, subspaces)


def cmd_rom_build(args) -> int:
    cfg = load_config(args.config)
    points, snapshots = load_training_snapshots(cfg)
    rom = build_rom(cfg, points, snapshots)
    path = cfg.artifact or cfg.output_dir / "rom.sdalrom"
    save_artifact(path, rom)
    print(f"wrote {kind_of(rom).label} artifact {path}")
    return EXIT_OK


# ---------------------------------------------------------------- rom query


def _query_times(args, grid: np.ndarray) -> np.ndarray:
    if args.all_times:
        return grid.copy()
    if args.times_csv:
        return read_points_csv(args.times_csv).ravel()
    if args.t is None:
        raise ConfigError("give --t, --times-csv or --all-times")
    return np.asarray(args.t, dtype=np.float64)


def rom_evaluate(rom, mu, times, energy_criterion=None, allow_extrapolation=False) -> np.ndarray:
    """Solution columns at ``times`` for either artifact kind."""
    if kind_of(rom) is RomKind.POD_KSNN:
        u, _ = rom_ksnn.online_query(rom, mu, times, energy_criterion, allow_extrapolation)
        return u
    return rom_nn.online_query(rom, mu, times)


def reference_columns(ref: SnapshotMatrix, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of ``times`` present on the reference grid and the matching reference columns."""
    found, cols = [], []
    for k, t in enumerate(times):
        hit = np.flatnonzero(np.abs(ref.time_grid - t) <= 1e-9 * max(1.0, abs(t)))
        if hit.size:
            found.append(k)
            cols.append(ref.values[:, hit[0]])
    if not found:
        return np.arange(0), np.empty((ref.n_dofs, 0))
    return np.array(found), np.column_stack(cols)


def relative_errors(u: np.ndarray, ref: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(ref, axis=0)
    return np.linalg.norm(u - ref, axis=0) / np.where(norms > 0, norms, 1.0)


def cmd_rom_query(args) -> int:
    try:
        rom = load_artifact(args.artifact)
    except OSError as exc:
        raise ConfigError(f"cannot read artifact: {exc.strerror}", key="--artifact") from None
    if args.kind and kind_of(rom) is not RomKind.parse(args.kind):
        raise ConfigError(
            f"artifact is {kind_of(rom).label}, expected {RomKind.parse(args.kind).label}", key="--kind"
        )
    mu = np.asarray(args.mu, dtype=np.float64)
    grid = rom.time_grid
    times = _query_times(args, grid)
    if times.size == 0 or np.any(np.diff(times) <= 0):
        raise ConfigError("query times must be nonempty and strictly increasing", key="--t")
    t0 = time.perf_counter()
    u = rom_evaluate(rom, mu, times, args.eta, args.allow_extrapolation)
    rom_seconds = time.perf_counter() - t0
    out = _output_dir(args.out_dir)
    snap = SnapshotMatrix(u, mu, times)
    if args.format == "bin":
        write_snapshots_bin(out / "solution.sdal", snap)
    else:
        write_snapshots_csv(out / "solution.csv", snap)
    report = {
        "kind": kind_of(rom).label,
        "mu": mu.tolist(),
        "times": times.tolist(),
        "rom_seconds": rom_seconds,
        "fom_seconds": None,
        "speedup": None,
        "max_rel_error": None,
    }
    ref = None
    if args.reference:
        ref = read_snapshots(args.reference, mu)
    if args.config:
        cfg = load_config(args.config)
        fom = _make_fom(cfg)
        t0 = time.perf_counter()
        fom_snap = fom.query(mu)
        report["fom_seconds"] = time.perf_counter() - t0
        report["speedup"] = report["fom_seconds"] / rom_seconds if rom_seconds > 0 else None
        ref = ref or fom_snap
    if ref is not None:
        idx, cols = reference_columns(ref, times)
        if idx.size < times.size:
            print(f"note: {times.size - idx.size} query time(s) are not on the reference grid", file=sys.stderr)
        if idx.size:
            errs = relative_errors(u[:, idx], cols)
            atomic_write_text(out / "errors.csv", _csv_text(["t", "rel_error"], zip(times[idx], errs)))
            report["max_rel_error"] = float(errs.max())
    _write_json(out / "query_report.json", report)
    print(f"{report['kind']} query at mu={mu.tolist()}, {times.size} time(s), {rom_seconds * 1e3:.2f} ms")
    return EXIT_OK


# ---------------------------------------------------------------- trace export


def cmd_trace_export(args) -> int:
    try:
        rows = read_trace_csv(args.trace)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read trace: {exc}", key="--trace") from None
    out = _output_dir(args.out_dir)
    mu_cols = [k for k in (rows[0] if rows else {}) if re.fullmatch(r"mu(_\d+)?", k)]
    dmax = [[r["iter"], r["d_max"]] for r in rows]
    initial = args.initial_d_max
    if initial is None and args.summary:
        initial = json.loads(Path(args.summary).read_text())["initial_d_max"]
    if initial is not None:
        dmax.insert(0, [0, float(initial)])
    atomic_write_text(out / "max_distance.csv", _csv_text(["iter", "d_max"], dmax))
    sel = [[r["iter"], *[r[c] for c in mu_cols], r["rank"]] for r in rows]
    atomic_write_text(out / "selected_rank.csv", _csv_text(["iter", *mu_cols, "rank"], sel))
    print(f"wrote {out / 'max_distance.csv'} and {out / 'selected_rank.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdal", description="Subspace-distance active learning for reduced-order models.")
    sub = p.add_subparsers(dest="command", required=True)

    fom = sub.add_parser("fom", help="full-order model snapshots")
    fsub = fom.add_subparsers(dest="model", required=True)
    b = fsub.add_parser("burgers", help="periodic viscous Burgers solver")
    g = b.add_mutually_exclusive_group()
    g.add_argument("--nu", type=float, nargs="+", help="viscosity values")
    g.add_argument("--mu", type=float, nargs="+", help="log10 viscosity values")
    b.add_argument("--preset", choices=["demo", "default"], default="demo")
    b.add_argument("--n-x", dest="n_x", type=int)
    b.add_argument("--x-lo", dest="x_lo", type=float)
    b.add_argument("--x-hi", dest="x_hi", type=float)
    b.add_argument("--t-final", dest="t_final", type=float)
    b.add_argument("--n-t", dest="n_t", type=int)
    b.add_argument("--initial-condition", choices=["sine", "constant"])
    b.add_argument("--format", choices=["bin", "csv"], default="bin")
    b.add_argument("--out-dir")
    b.set_defaults(func=cmd_fom_burgers)

    ln = sub.add_parser("learn", help="run active learning from a config file")
    ln.add_argument("config")
    ln.set_defaults(func=cmd_learn)

    rom = sub.add_parser("rom", help="build or query a reduced-order model")
    rsub = rom.add_subparsers(dest="action", required=True)
    rb = rsub.add_parser("build", help="build a ROM artifact from a config file")
    rb.add_argument("config")
    rb.set_defaults(func=cmd_rom_build)
    rq = rsub.add_parser("query", help="evaluate a ROM artifact")
    rq.add_argument("--artifact", required=True)
    rq.add_argument("--mu", type=float, nargs="+", required=True)
    tg = rq.add_mutually_exclusive_group()
    tg.add_argument("--t", type=float, nargs="+")
    tg.add_argument("--times-csv")
    tg.add_argument("--all-times", action="store_true")
    rq.add_argument("--kind", choices=["pod-ksnn", "pod-nn"], help="fail unless the artifact has this kind")
    rq.add_argument("--eta", type=float, help="online energy criterion (POD-KSNN)")
    rq.add_argument("--allow-extrapolation", action="store_true")
    rq.add_argument("--reference", help="snapshot file to compare against")
    rq.add_argument("--config", help="run config whose FOM is timed and used as reference")
    rq.add_argument("--format", choices=["csv", "bin"], default="csv")
    rq.add_argument("--out-dir")
    rq.set_defaults(func=cmd_rom_query)

    tr = sub.add_parser("trace", help="trace utilities")
    tsub = tr.add_subparsers(dest="action", required=True)
    te = tsub.add_parser("export", help="plot-ready CSVs from a trace file")
    te.add_argument("--trace", required=True)
    te.add_argument("--summary", help="summary.json of the run, supplies the initial D_max")
    te.add_argument("--initial-d-max", type=float)
    te.add_argument("--out-dir")
    te.set_defaults(func=cmd_trace_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SdalError, ArithmeticError, np.linalg.LinAlgError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
