"""Declarative experiment configuration.

Configs are JSON documents.  Units: spacings in wavelengths, times in
1/Gamma, ``physical_gamma`` in 1/s.  Example::

    {
      "geometry": {"nx": 2, "ny": 2, "nz": 4,
                   "spacing_sweep": {"start": 0.1, "stop": 2.0, "step": 0.05}},
      "field": {"k_direction": [0, 0, 1], "dipole_direction": [1, 0, 0]},
      "dm_indices": "all",
      "time_grid": {"kind": "auto"},
      "output": {"dir": "out", "format": "csv"},
      "threshold": 0.05
    }

Environment variables ``SUBRADIANCE_OUT``, ``SUBRADIANCE_FORMAT``,
``SUBRADIANCE_THREADS``, ``SUBRADIANCE_THRESHOLD`` and
``SUBRADIANCE_PHYSICAL_GAMMA`` override the file; command-line flags
override both.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dynamics import DOMINANCE_THRESHOLD, MAX_GRID_POINTS
from .lattice import DEFAULT_LABELING

ENV_PREFIX = "SUBRADIANCE_"
FORMATS = ("csv", "json")
GRID_KINDS = ("auto", "linear", "log")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is a dotted path, ``line`` is 1-based if known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None,
                 source: str | None = None):
        self.field = field
        self.line = line
        self.source = source
        where = ":".join(str(x) for x in (source, line) if x is not None)
        prefix = f"{where}: " if where else ""
        if field:
            prefix += f"{field}: "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class SpacingSweep:
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(count)]


@dataclass(frozen=True)
class TimeGrid:
    kind: str = "auto"
    t_max: float | None = None
    points: int = 1001
    t_min: float = 1e-2

    def values(self) -> np.ndarray | None:
        if self.kind == "auto":
            return None
        if self.kind == "linear":
            return np.linspace(0.0, self.t_max, self.points)
        return np.concatenate([[0.0], np.geomspace(self.t_min, self.t_max, self.points - 1)])


@dataclass(frozen=True)
class ExperimentConfig:
    nx: int
    ny: int
    nz: int
    spacing: float | None = None
    sweep: SpacingSweep | None = None
    labeling: str = DEFAULT_LABELING
    k_direction: tuple = (0.0, 0.0, 1.0)
    dipole_direction: tuple = (1.0, 0.0, 0.0)
    dm_indices: str | tuple = "all"
    time_grid: TimeGrid = field(default_factory=TimeGrid)
    out_dir: str = "out"
    format: str = "csv"
    threshold: float = DOMINANCE_THRESHOLD
    physical_gamma: float | None = None
    threads: int | None = None

    @property
    def n(self) -> int:
        return self.nx * self.ny * self.nz

    def spacings(self) -> list[float]:
        return self.sweep.values() if self.sweep else [self.spacing]

    def indices(self) -> list[int]:
        return list(range(1, self.n + 1)) if self.dm_indices == "all" else list(self.dm_indices)

    def to_dict(self) -> dict:
        geometry = {"nx": self.nx, "ny": self.ny, "nz": self.nz, "labeling": self.labeling}
        if self.sweep:
            geometry["spacing_sweep"] = asdict(self.sweep)
        else:
            geometry["spacing"] = self.spacing
        grid = {"kind": self.time_grid.kind}
        if self.time_grid.kind != "auto":
            grid.update(t_max=self.time_grid.t_max, points=self.time_grid.points)
            if self.time_grid.kind == "log":
                grid["t_min"] = self.time_grid.t_min
        out = {
            "geometry": geometry,
            "field": {"k_direction": list(self.k_direction),
                      "dipole_direction": list(self.dipole_direction)},
            "dm_indices": self.dm_indices if self.dm_indices == "all" else list(self.dm_indices),
            "time_grid": grid,
            "output": {"dir": self.out_dir, "format": self.format},
            "threshold": self.threshold,
        }
        if self.physical_gamma is not None:
            out["physical_gamma"] = self.physical_gamma
        if self.threads is not None:
            out["threads"] = self.threads
        return out

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


_TOP_KEYS = {"geometry", "field", "dm_indices", "time_grid", "output", "threshold",
             "physical_gamma", "threads"}


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


class _Reader:
    def __init__(self, text: str | None, source: str | None):
        self.text = text
        self.source = source

    def fail(self, path: str, message: str):
        raise ConfigError(message, path, _line_of(self.text, path.rsplit(".", 1)[-1]), self.source)

    def section(self, data: dict, key: str, allowed: set, required: bool = True) -> dict:
        if key not in data:
            if required:
                raise ConfigError("missing section", key, None, self.source)
            return {}
        value = data[key]
        if not isinstance(value, dict):
            self.fail(key, "expected an object")
        unknown = set(value) - allowed
        if unknown:
            self.fail(f"{key}.{sorted(unknown)[0]}", "unknown field")
        return value

    def integer(self, data: dict, path: str, minimum: int = 1):
        value = data[path.rsplit(".", 1)[-1]]
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            self.fail(path, f"expected an integer >= {minimum}, got {value!r}")
        return value

    def number(self, data: dict, path: str, positive: bool = True) -> float:
        value = data[path.rsplit(".", 1)[-1]]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.fail(path, f"expected a finite number, got {value!r}")
        if positive and value <= 0:
            self.fail(path, f"must be positive, got {value!r}")
        return float(value)

    def vector(self, data: dict, path: str) -> tuple:
        value = data[path.rsplit(".", 1)[-1]]
        if (not isinstance(value, list) or len(value) != 3
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
            self.fail(path, f"expected a list of three numbers, got {value!r}")
        vec = np.asarray(value, dtype=float)
        if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            self.fail(path, "direction must be a unit vector")
        return tuple(float(x) for x in vec)


def parse_config(data: dict, text: str | None = None, source: str | None = None) -> ExperimentConfig:
    """Validate a decoded config document."""
    r = _Reader(text, source)
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", None, 1, source)
    unknown = set(data) - _TOP_KEYS
    if unknown:
        r.fail(sorted(unknown)[0], "unknown field")

    geo = r.section(data, "geometry", {"nx", "ny", "nz", "spacing", "spacing_sweep", "labeling"})
    for axis in ("nx", "ny", "nz"):
        if axis not in geo:
            raise ConfigError("missing field", f"geometry.{axis}", None, source)
    nx, ny, nz = (r.integer(geo, f"geometry.{a}") for a in ("nx", "ny", "nz"))
    spacing = sweep = None
    if ("spacing" in geo) == ("spacing_sweep" in geo):
        r.fail("geometry.spacing", "give exactly one of spacing or spacing_sweep")
    if "spacing" in geo:
        spacing = r.number(geo, "geometry.spacing")
    else:
        raw = r.section(geo, "spacing_sweep", {"start", "stop", "step"})
        for key in ("start", "stop", "step"):
            if key not in raw:
                raise ConfigError("missing field", f"geometry.spacing_sweep.{key}", None, source)
        start, stop, step = (r.number(raw, f"geometry.spacing_sweep.{k}") for k in ("start", "stop", "step"))
        if stop < start:
            r.fail("geometry.spacing_sweep.stop", "sweep range is empty")
        sweep = SpacingSweep(start, stop, step)
    labeling = geo.get("labeling", DEFAULT_LABELING)
    if not isinstance(labeling, str) or sorted(labeling) != ["x", "y", "z"]:
        r.fail("geometry.labeling", f"expected a permutation of 'xyz', got {labeling!r}")

    fld = r.section(data, "field", {"k_direction", "dipole_direction"}, required=False)
    k_dir = r.vector(fld, "field.k_direction") if "k_direction" in fld else (0.0, 0.0, 1.0)
    d_dir = r.vector(fld, "field.dipole_direction") if "dipole_direction" in fld else (1.0, 0.0, 0.0)

    n = nx * ny * nz
    dm = data.get("dm_indices", "all")
    if dm != "all":
        if not isinstance(dm, list) or not dm:
            r.fail("dm_indices", "expected \"all\" or a non-empty list of integers")
        for m in dm:
            if isinstance(m, bool) or not isinstance(m, int) or not 1 <= m <= n:
                r.fail("dm_indices", f"index {m!r} outside [1, {n}]")
        dm = tuple(dm)

    raw_grid = r.section(data, "time_grid", {"kind", "t_max", "points", "t_min"}, required=False)
    kind = raw_grid.get("kind", "auto")
    if kind not in GRID_KINDS:
        r.fail("time_grid.kind", f"expected one of {GRID_KINDS}, got {kind!r}")
    grid = TimeGrid(kind)
    if kind != "auto":
        if "t_max" not in raw_grid:
            raise ConfigError("missing field", "time_grid.t_max", None, source)
        t_max = r.number(raw_grid, "time_grid.t_max")
        points = r.integer(raw_grid, "time_grid.points", minimum=2) if "points" in raw_grid else 1001
        if points > MAX_GRID_POINTS:
            r.fail("time_grid.points", f"at most {MAX_GRID_POINTS} points")
        t_min = r.number(raw_grid, "time_grid.t_min") if "t_min" in raw_grid else 1e-2
        if kind == "log" and t_min >= t_max:
            r.fail("time_grid.t_min", "must be below t_max")
        grid = TimeGrid(kind, t_max, points, t_min)

    output = r.section(data, "output", {"dir", "format"}, required=False)
    out_dir = output.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        r.fail("output.dir", "expected a non-empty path")
    fmt = output.get("format", "csv")
    if fmt not in FORMATS:
        r.fail("output.format", f"expected one of {FORMATS}, got {fmt!r}")

    threshold = r.number(data, "threshold") if "threshold" in data else DOMINANCE_THRESHOLD
    gamma = r.number(data, "physical_gamma") if "physical_gamma" in data else None
    threads = r.integer(data, "threads") if "threads" in data else None

    return ExperimentConfig(nx, ny, nz, spacing, sweep, labeling, k_dir, d_dir, dm, grid,
                            out_dir, fmt, threshold, gamma, threads)


def load_config(path) -> ExperimentConfig:
    source = str(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, None, source) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, None, exc.lineno, source) from exc
    return parse_config(data, text, source)


def apply_overrides(config: ExperimentConfig, **values) -> ExperimentConfig:
    """Replace fields whose override is not ``None``, re-validating the result."""
    changes = {k: v for k, v in values.items() if v is not None}
    if not changes:
        return config
    updated = replace(config, **changes)
    if updated.format not in FORMATS:
        raise ConfigError(f"expected one of {FORMATS}, got {updated.format!r}", "output.format")
    if not updated.threshold > 0:
        raise ConfigError("must be positive", "threshold")
    if updated.threads is not None and updated.threads < 1:
        raise ConfigError("must be at least 1", "threads")
    if updated.physical_gamma is not None and not updated.physical_gamma > 0:
        raise ConfigError("must be positive", "physical_gamma")
    return updated


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    casts = {"OUT": ("out_dir", str), "FORMAT": ("format", str), "THREADS": ("threads", int),
             "THRESHOLD": ("threshold", float), "PHYSICAL_GAMMA": ("physical_gamma", float)}
    out = {}
    for suffix, (name, cast) in casts.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        try:
            out[name] = cast(raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {raw!r}", ENV_PREFIX + suffix) from exc
    return out
