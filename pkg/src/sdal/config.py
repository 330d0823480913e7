"""Run configuration: a flat YAML mapping validated before any computation.

Unknown keys, wrong types and missing variant-specific keys raise
:class:`ConfigError` carrying the offending key and its line number.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .actlearn import ActiveLearnConfig, Variant
from .burgers import PARAM_SCALES, BurgersConfig
from .errors import ConfigError
from .params import evenly_spaced_indices, latin_hypercube, linear_grid, log_grid
from .rbf import Kernel, RbfKernelSpec
from .subspace import Measure

OUTPUT_ENV = "SDAL_OUTPUT_DIR"


def _num(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return float(v)


def _int(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected an integer")
    return int(v)


def _str(v) -> str:
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


def _bounds(v):
    """A number or a list of numbers (one per parameter dimension)."""
    if isinstance(v, list):
        if not v:
            raise TypeError("expected a non-empty list of numbers")
        return [_num(x) for x in v]
    return [_num(v)]


def _choice(*options):
    def check(v):
        s = _str(v).strip()
        if s.lower() not in [o.lower() for o in options]:
            raise ValueError(f"expected one of {list(options)}")
        return s.lower()

    return check


def _parsed(parser):
    def check(v):
        return parser(_str(v) if not isinstance(v, Variant) else v)

    return check


# key -> validator; every key is optional at the schema level
_SCHEMA = {
    "variant": _parsed(Variant.parse),
    "measure": _parsed(Measure.parse),
    "energy_criterion": _num,
    "budget": _int,
    "tol_d": _num,
    "tol_e": _num,
    "max_outer": _int,
    "estimator_kernel": _parsed(Kernel.parse),
    "estimator_width": _num,
    "n_neighbors": _int,
    "fom": _choice("burgers", "archive"),
    "archive_dir": _str,
    "burgers_preset": _choice("demo", "default"),
    "n_x": _int,
    "x_lo": _num,
    "x_hi": _num,
    "t_final": _num,
    "n_t": _int,
    "initial_condition": _choice("sine", "constant"),
    "param_scale": _choice(*PARAM_SCALES),
    "grid": _choice("linear", "log", "lhs"),
    "grid_lo": _bounds,
    "grid_hi": _bounds,
    "grid_count": _int,
    "initial_count": _int,
    "seed": _int,
    "training_csv": _str,
    "candidates_csv": _str,
    "output_dir": _str,
    "snapshot_format": _choice("bin", "csv"),
    "rom_kind": _choice("pod-ksnn", "pod-nn"),
    "rom_kernel": _parsed(Kernel.parse),
    "rom_width": _num,
    "time_kernel": _parsed(Kernel.parse),
    "time_width": _num,
    "online_energy_criterion": _num,
    "global_energy_criterion": _num,
    "regressor": _choice("rbf", "mlp"),
    "regressor_kernel": _parsed(Kernel.parse),
    "regressor_width": _num,
    "regressor_max_centers": _int,
    "regressor_split": _num,
    "snapshot_dir": _str,
    "artifact": _str,
}


@dataclass
class RunConfig:
    """Validated run settings.  Relative paths resolve against the config file's directory."""

    variant: Variant = Variant.TOLERANCE
    measure: Measure = Measure.D2HAT
    energy_criterion: float = 1e-6
    budget: Optional[int] = None
    tol_d: Optional[float] = None
    tol_e: Optional[float] = None
    max_outer: Optional[int] = None
    estimator_kernel: Kernel = Kernel.MULTIQUADRIC
    estimator_width: float = 1e-3
    n_neighbors: int = 2
    fom: str = "burgers"
    archive_dir: Optional[Path] = None
    burgers_preset: str = "demo"
    n_x: Optional[int] = None
    x_lo: Optional[float] = None
    x_hi: Optional[float] = None
    t_final: Optional[float] = None
    n_t: Optional[int] = None
    initial_condition: Optional[str] = None
    param_scale: str = "log10"
    grid: str = "linear"
    grid_lo: list = field(default_factory=lambda: [-3.0])
    grid_hi: list = field(default_factory=lambda: [0.0])
    grid_count: int = 76
    initial_count: int = 12
    seed: int = 0
    training_csv: Optional[Path] = None
    candidates_csv: Optional[Path] = None
    output_dir: Path = Path("sdal_out")
    snapshot_format: str = "bin"
    rom_kind: str = "pod-ksnn"
    rom_kernel: Kernel = Kernel.MULTIQUADRIC
    rom_width: float = 1e-3
    time_kernel: Optional[Kernel] = None
    time_width: Optional[float] = None
    online_energy_criterion: Optional[float] = None
    global_energy_criterion: float = 1e-6
    regressor: str = "rbf"
    regressor_kernel: Kernel = Kernel.MULTIQUADRIC
    regressor_width: float = 0.1
    regressor_max_centers: Optional[int] = None
    regressor_split: float = 1.0
    snapshot_dir: Optional[Path] = None
    artifact: Optional[Path] = None
    lines: dict = field(default_factory=dict, repr=False, compare=False)

    def line_of(self, key: str) -> Optional[int]:
        return self.lines.get(key)

    def fail(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, key=key, line=self.line_of(key))

    def burgers(self) -> BurgersConfig:
        base = BurgersConfig.demo() if self.burgers_preset == "demo" else BurgersConfig()
        overrides = {
            k: getattr(self, k)
            for k in ("n_x", "x_lo", "x_hi", "t_final", "n_t", "initial_condition")
            if getattr(self, k) is not None
        }
        values = {f.name: getattr(base, f.name) for f in fields(BurgersConfig)}
        values.update(overrides)
        try:
            return BurgersConfig(**values)
        except ValueError as exc:
            key = next(iter(overrides), "burgers_preset")
            raise self.fail(key, str(exc)) from None

    def active_learning(self) -> ActiveLearnConfig:
        try:
            return ActiveLearnConfig(
                variant=self.variant,
                measure=self.measure,
                energy_criterion=self.energy_criterion,
                max_query=self.budget,
                tol_d=self.tol_d,
                tol_e=self.tol_e,
                estimator_kernel=RbfKernelSpec(self.estimator_kernel, self.estimator_width),
                max_outer=self.max_outer,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def parameter_grid(self):
        """Training and candidate points from CSV files or the grid generator."""
        from .io import read_points_csv

        if self.training_csv is not None:
            train = read_points_csv(self.training_csv)
            cand = read_points_csv(self.candidates_csv) if self.candidates_csv else np.empty((0, train.shape[1]))
            return train, cand
        lo, hi = np.array(self.grid_lo), np.array(self.grid_hi)
        if self.grid == "lhs":
            pts = latin_hypercube(lo, hi, self.grid_count, self.seed)
        else:
            make = linear_grid if self.grid == "linear" else log_grid
            pts = make(lo, hi, self.grid_count)
        pts = pts.reshape(len(pts), -1)
        if pts.shape[1] == 1:
            pts = pts[np.argsort(pts[:, 0], kind="stable")]
        idx = evenly_spaced_indices(len(pts), self.initial_count)
        mask = np.zeros(len(pts), dtype=bool)
        mask[idx] = True
        return pts[mask], pts[~mask]


def _line_map(text: str) -> dict[str, int]:
    node = yaml.compose(text, Loader=yaml.SafeLoader)
    if node is None:
        return {}
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("config must be a key-value mapping", line=node.start_mark.line + 1)
    lines: dict[str, int] = {}
    for key_node, _ in node.value:
        key = str(key_node.value)
        line = key_node.start_mark.line + 1
        if key in lines:
            raise ConfigError(f"duplicate key (first on line {lines[key]})", key=key, line=line)
        lines[key] = line
    return lines


def parse_config(text: str, base_dir: Path | str = ".", env: Optional[dict] = None) -> RunConfig:
    """Validate ``text`` and return a :class:`RunConfig`."""
    try:
        lines = _line_map(text)
        raw: Any = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None) from None
    values: dict[str, Any] = {}
    for key, value in raw.items():
        key = str(key)
        if key not in _SCHEMA:
            raise ConfigError("unknown key", key=key, line=lines.get(key))
        if value is None:
            continue
        try:
            values[key] = _SCHEMA[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), key=key, line=lines.get(key)) from None
    base = Path(base_dir)
    for key in ("archive_dir", "training_csv", "candidates_csv", "output_dir", "snapshot_dir", "artifact"):
        if key in values:
            values[key] = base / values[key]
    cfg = RunConfig(**values, lines=lines)
    env = os.environ if env is None else env
    if env.get(OUTPUT_ENV):
        cfg.output_dir = Path(env[OUTPUT_ENV])
    _check(cfg, values)
    return cfg


def _check(cfg: RunConfig, given: dict) -> None:
    """Cross-key rules that the per-key validators cannot express."""
    if cfg.variant is Variant.BUDGET and cfg.budget is None:
        raise cfg.fail("budget", "variant A needs a query budget")
    if cfg.variant is Variant.TOLERANCE:
        for key in ("tol_d", "tol_e"):
            if getattr(cfg, key) is None:
                raise cfg.fail(key, "variant B needs this tolerance")
            if not getattr(cfg, key) > 0:
                raise cfg.fail(key, "tolerance must be positive")
    if cfg.max_outer is not None and cfg.max_outer < 1:
        raise cfg.fail("max_outer", "max_outer must be >= 1")
    if cfg.fom == "archive" and cfg.archive_dir is None:
        raise cfg.fail("archive_dir", "fom 'archive' needs a snapshot directory")
    if "candidates_csv" in given and "training_csv" not in given:
        raise cfg.fail("candidates_csv", "candidates_csv requires training_csv")
    for key in ("grid_lo", "grid_hi"):
        if len(getattr(cfg, key)) != len(cfg.grid_lo):
            raise cfg.fail(key, "grid_lo and grid_hi must have the same length")
    if cfg.training_csv is None:
        if cfg.grid_count < 2:
            raise cfg.fail("grid_count", "need at least 2 grid points")
        total = cfg.grid_count if cfg.grid == "lhs" else cfg.grid_count ** len(cfg.grid_lo)
        if not 2 <= cfg.initial_count <= total:
            raise cfg.fail("initial_count", f"initial_count must lie in [2, {total}]")
        if cfg.grid == "log" and min(cfg.grid_lo) <= 0:
            raise cfg.fail("grid_lo", "log grid needs positive bounds")
    for key in ("energy_criterion", "global_energy_criterion", "online_energy_criterion"):
        v = getattr(cfg, key)
        if v is not None and not 0.0 <= v < 1.0:
            raise cfg.fail(key, "energy criterion must lie in [0, 1)")
    for key in ("rom_width", "estimator_width", "regressor_width", "time_width"):
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            raise cfg.fail(key, "kernel width must be positive")
    if not 0.0 < cfg.regressor_split <= 1.0:
        raise cfg.fail("regressor_split", "split fraction must lie in (0, 1]")
    if cfg.n_neighbors < 1:
        raise cfg.fail("n_neighbors", "need at least one neighbor")
    if cfg.budget is not None and cfg.budget < 0:
        raise cfg.fail("budget", "budget must be nonnegative")
    cfg.active_learning()
    if cfg.fom == "burgers":
        cfg.burgers()


def load_config(path, env: Optional[dict] = None) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}") from None
    return parse_config(text, p.parent, env)
