"""Experiment configuration: TOML parsing, validation, resolved-config echo.

Configs are flat key-value TOML with sectioned tables, e.g.::

    experiment = "simulate"

    [beam]
    rho1 = 1.0
    rho2 = 1.0
    kappa = 1.0
    b = 1.0
    length = 1.0

    [kernel]
    name = "exp-1"            # zoo kernel, or an explicit family:
    # family = "exponential"
    # amplitude = 0.5
    # rate = 1.0

    [grid]
    n = 64
    history_nodes = 96
    # s_max = 10.0            # default: kernel horizon
    grading_ratio = 1.08

    [time]
    horizon = 60.0
    # dt = 0.05               # default: min(h/2, ds_min/2)
    sample_every = 4

Every default the run used is echoed into ``resolved_config.toml`` in the
output directory, so a run is reproducible from its own artifacts.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .beam import BeamParams
from .kernels import (Kernel, compact_flat_kernel, compact_inflection_kernel,
                      exponential_kernel, polynomial_kernel, tabulated_kernel)
from .zoo import zoo_kernel

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "emit_toml"]

EXPERIMENTS = ("simulate", "scan", "nec-check", "certify", "represent-check",
               "zoo")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """Validated configuration with every default resolved and recorded."""

    experiment: str
    beam: BeamParams
    kernel: Kernel | None
    kernel_spec: dict
    n: int = 64
    history_nodes: int = 96
    s_max: float | None = None
    grading_ratio: float = 1.08
    horizon: float = 60.0
    dt: float | None = None
    sample_every: int = 4
    initial: str = "smooth"
    lambda_max: float | None = None
    scan_points: int = 256
    refine_multipliers: list[float] = field(default_factory=lambda: [1.0, 1.5, 2.0])
    nec_C: float | None = None
    nec_delta: float | None = None
    nec_sigma_max: float = 200.0
    nec_s_max: float = 200.0
    nec_grid_density: int = 400
    represent_time: float | None = None
    represent_levels: int = 3
    seed: int = 0
    plots: bool = True

    def resolved_dict(self) -> dict:
        """Everything a rerun needs, sections ordered deterministically."""
        out = {"experiment": self.experiment, "seed": self.seed,
               "plots": self.plots}
        out["beam"] = self.beam.as_dict()
        if self.kernel is not None:
            out["kernel"] = dict(self.kernel_spec)
        out["grid"] = {"n": self.n, "history_nodes": self.history_nodes,
                       "s_max": self.s_max, "grading_ratio": self.grading_ratio}
        out["time"] = {"horizon": self.horizon, "dt": self.dt,
                       "sample_every": self.sample_every,
                       "initial": self.initial}
        out["scan"] = {"lambda_max": self.lambda_max,
                       "points": self.scan_points}
        out["refine"] = {"multipliers": self.refine_multipliers}
        out["nec"] = {"C": self.nec_C, "delta": self.nec_delta,
                      "sigma_max": self.nec_sigma_max, "s_max": self.nec_s_max,
                      "grid_density": self.nec_grid_density}
        out["represent"] = {"time": self.represent_time,
                            "levels": self.represent_levels}
        return out


def _build_kernel(spec: dict, b: float) -> tuple[Kernel, dict]:
    spec = dict(spec)
    if "name" in spec:
        k = zoo_kernel(spec["name"])
        if abs(k.b - b) > 1e-12 * max(b, k.b):
            raise ConfigError(
                f"zoo kernel {spec['name']!r} carries b = {k.b}, beam has b = {b}")
        return k, {"name": spec["name"], **k.describe()}
    family = spec.get("family")
    try:
        if family == "exponential":
            k = exponential_kernel(spec["amplitude"], spec["rate"], b)
        elif family == "polynomial":
            k = polynomial_kernel(spec["amplitude"], spec["exponent"], b)
        elif family == "compact-flat":
            k = compact_flat_kernel(spec["level"], spec["flat_end"],
                                    spec["support_end"], b)
        elif family == "compact-inflection":
            k = compact_inflection_kernel(spec["level"], spec["support_end"],
                                          spec.get("inflection", 0.5), b)
        elif family == "tabulated":
            path = Path(spec["table"])
            data = np.loadtxt(path, delimiter=",", ndmin=2)
            k = tabulated_kernel(data[:, 0], data[:, 1], b)
        elif family is None:
            raise ConfigError("kernel table needs a 'name' or a 'family' key")
        else:
            raise ConfigError(f"unknown kernel family {family!r}")
    except KeyError as exc:
        raise ConfigError(f"kernel table is missing parameter {exc}")
    return k, k.describe() if family != "tabulated" else {
        "family": "tabulated", "table": str(spec["table"]), "b": b}


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    """Parse and validate a TOML config; CLI subcommand overrides/cross-checks."""
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}")

    exp = raw.get("experiment", experiment)
    if experiment is not None:
        if "experiment" in raw and raw["experiment"] != experiment:
            raise ConfigError(
                f"config names experiment {raw['experiment']!r} but the "
                f"subcommand is {experiment!r}")
        exp = experiment
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; known: {EXPERIMENTS}")

    try:
        beam = BeamParams(**raw.get("beam", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [beam] table: {exc}")

    kernel = None
    kernel_spec: dict = {}
    if "kernel" in raw:
        try:
            kernel, kernel_spec = _build_kernel(raw["kernel"], beam.b)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"invalid [kernel] table: {exc}")
    elif exp not in ("zoo",):
        if exp != "scan":  # scan may run the conservative beam
            raise ConfigError(f"experiment {exp!r} needs a [kernel] table")

    grid = raw.get("grid", {})
    time_tbl = raw.get("time", {})
    scan_tbl = raw.get("scan", {})
    nec = raw.get("nec", {})
    refine = raw.get("refine", {})
    represent = raw.get("represent", {})
    cfg = ExperimentConfig(
        experiment=exp, beam=beam, kernel=kernel, kernel_spec=kernel_spec,
        n=int(grid.get("n", 64)),
        history_nodes=int(grid.get("history_nodes", 96)),
        s_max=grid.get("s_max"),
        grading_ratio=float(grid.get("grading_ratio", 1.08)),
        horizon=float(time_tbl.get("horizon", 60.0)),
        dt=time_tbl.get("dt"),
        sample_every=int(time_tbl.get("sample_every", 4)),
        initial=str(time_tbl.get("initial", "smooth")),
        lambda_max=scan_tbl.get("lambda_max"),
        scan_points=int(scan_tbl.get("points", 256)),
        refine_multipliers=[float(v) for v in
                            refine.get("multipliers", [1.0, 1.5, 2.0])],
        nec_C=nec.get("C"),
        nec_delta=nec.get("delta"),
        nec_sigma_max=float(nec.get("sigma_max", 200.0)),
        nec_s_max=float(nec.get("s_max", 200.0)),
        nec_grid_density=int(nec.get("grid_density", 400)),
        represent_time=represent.get("time"),
        represent_levels=int(represent.get("levels", 3)),
        seed=int(raw.get("seed", 0)),
        plots=bool(raw.get("plots", True)),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.n < 2:
        raise ConfigError("grid.n must be at least 2")
    if cfg.history_nodes < 1:
        raise ConfigError("grid.history_nodes must be at least 1")
    if cfg.grading_ratio < 1.0:
        raise ConfigError("grid.grading_ratio must be >= 1")
    if cfg.horizon < 0:
        raise ConfigError("time.horizon must be nonnegative")
    if cfg.dt is not None and cfg.dt <= 0:
        raise ConfigError("time.dt must be positive")
    if cfg.sample_every < 1:
        raise ConfigError("time.sample_every must be >= 1")
    if cfg.scan_points < 16:
        raise ConfigError("scan.points must be >= 16")
    if (cfg.nec_C is None) != (cfg.nec_delta is None):
        raise ConfigError("nec.C and nec.delta must be given together")
    if len(cfg.refine_multipliers) < 1 or any(
            m <= 0 for m in cfg.refine_multipliers):
        raise ConfigError("refine.multipliers must be positive")
    if cfg.initial not in ("smooth", "random", "history-only", "eigenmode"):
        raise ConfigError(f"unknown initial preset {cfg.initial!r}")


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)} to TOML")


def emit_toml(data: dict) -> str:
    """Deterministic TOML for the resolved config (flat tables only)."""
    top = []
    tables = []
    for key, val in data.items():
        if isinstance(val, dict):
            lines = [f"[{key}]"]
            for k, v in val.items():
                if v is None:
                    lines.append(f"# {k} left at automatic default")
                else:
                    lines.append(f"{k} = {_toml_value(v)}")
            tables.append("\n".join(lines))
        else:
            if val is None:
                top.append(f"# {key} left at automatic default")
            else:
                top.append(f"{key} = {_toml_value(val)}")
    return "\n".join(top) + "\n\n" + "\n\n".join(tables) + "\n"
