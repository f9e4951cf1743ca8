"""Command-line front end: ``sweep``, ``eigen``, ``evolve`` and ``reproduce``.

Exit status is 0 on success (warnings included), 2 for configuration
errors and 1 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, SpacingSweep, apply_overrides, env_overrides, load_config
from .dmstates import coupling_strengths
from .dynamics import RUBIDIUM_GAMMA, dominant_beats, beat_frequencies, evolve_dm, weightings
from .errors import NumericFailureError
from .kernel import build_coupling_matrix
from .lattice import REFERENCE_LABELING, FieldConfig, build_lattice
from .spectrum import decompose

logger = logging.getLogger("subradiance")

FIGURES = ("fig2", "fig3", "fig4", "fig5")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_table(path: Path, columns: list[str], rows: list[list], fmt: str) -> Path:
    """Write ``rows`` as CSV (17 significant digits) or as a JSON column/row object."""
    path = path.parent / f"{path.name}.{fmt}"
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    else:
        with open(path, "w") as fh:
            json.dump({"columns": columns, "rows": _jsonable(rows)}, fh, indent=1)
            fh.write("\n")
    return path


def _setup(config: ExperimentConfig, spacing: float):
    geom = build_lattice(config.nx, config.ny, config.nz, spacing, config.labeling)
    field = FieldConfig(config.k_direction, config.dipole_direction)
    return geom, field, build_coupling_matrix(geom, field)


def _workers(config: ExperimentConfig) -> int:
    return config.threads or os.cpu_count() or 1


def _single_spacing(config: ExperimentConfig, command: str) -> float:
    if config.sweep is not None:
        raise ConfigError(f"{command} needs a single spacing, not a sweep", "geometry.spacing_sweep")
    return config.spacing


def cmd_sweep(config: ExperimentConfig) -> list[Path]:
    """``Gamma_mm`` against spacing; one file per spacing plus the joined table."""
    if config.sweep is None:
        raise ConfigError("sweep needs geometry.spacing_sweep", "geometry.spacing_sweep")
    out = Path(config.out_dir)
    (out / "points").mkdir(parents=True, exist_ok=True)
    indices = np.asarray(config.indices()) - 1
    columns = ["spacing", "m", "coupling_strength"]

    def point(spacing: float):
        geom, field, coupling = _setup(config, spacing)
        strengths = coupling_strengths(coupling, geom, field)
        rows = [[spacing, int(i) + 1, strengths[i]] for i in indices]
        path = write_table(out / "points" / f"spacing_{spacing:.6f}", columns, rows, config.format)
        return path, rows

    with ThreadPoolExecutor(_workers(config)) as pool:
        results = list(pool.map(point, config.spacings()))
    rows = [row for _, point_rows in results for row in point_rows]
    return [path for path, _ in results] + [write_table(out / "sweep", columns, rows, config.format)]


def cmd_eigen(config: ExperimentConfig) -> list[Path]:
    """Sorted eigenvalue table and the normalized weighting matrix."""
    spacing = _single_spacing(config, "eigen")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    geom, field, coupling = _setup(config, spacing)
    dec = decompose(coupling)
    n = geom.n
    eigen_rows = [[i + 1, dec.decay_constants[i], dec.shifts[i]] for i in range(n)]
    weight_rows = [[m, *weightings(m, dec, geom, field).normalized_weights] for m in config.indices()]
    return [
        write_table(out / "eigenvalues", ["n", "decay_constant", "shift"], eigen_rows, config.format),
        write_table(out / "weightings", ["m", *(f"w{i}" for i in range(1, n + 1))], weight_rows,
                    config.format),
    ]


def cmd_evolve(config: ExperimentConfig) -> tuple[list[Path], list[str]]:
    """Fluorescence series per DM state and a summary of rates, beats and lifetimes."""
    spacing = _single_spacing(config, "evolve")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    geom, field, coupling = _setup(config, spacing)
    dec = decompose(coupling)
    times = config.time_grid.values()

    def run(m: int):
        result = evolve_dm(m, dec, geom, field, times, config.threshold)
        rows = [[t, d.real, d.imag, p, np.exp(-t)]
                for t, d, p in zip(result.times, result.amplitudes, result.fluorescence)]
        path = write_table(out / f"evolve_m{m}", ["t", "re", "im", "population", "natural_decay"],
                           rows, config.format)
        beats = beat_frequencies(weightings(m, dec, geom, field), dec, config.threshold)
        strong = dominant_beats(beats, config.threshold)
        lifetime = None
        if config.physical_gamma is not None:
            lifetime = result.lifetime(config.physical_gamma)
        summary = [m, result.effective_decay_rate, result.fit_decay_rate,
                   ";".join(_fmt(b.frequency) for b in strong),
                   ";".join(_fmt(b.frequency) for b in beats),
                   lifetime, "; ".join(result.warnings)]
        return path, summary, [f"m={m}: {w}" for w in result.warnings]

    with ThreadPoolExecutor(_workers(config)) as pool:
        results = list(pool.map(run, config.indices()))
    columns = ["m", "effective_decay_rate", "fit_decay_rate", "dominant_beats", "beat_frequencies",
               "lifetime_s", "warnings"]
    summary = write_table(out / "summary", columns, [r[1] for r in results], config.format)
    warnings = [w for r in results for w in r[2]]
    return [r[0] for r in results] + [summary], warnings


def _preset(nx, ny, nz, out_dir, fmt, threshold=None, **kwargs) -> ExperimentConfig:
    cfg = ExperimentConfig(nx, ny, nz, labeling=REFERENCE_LABELING, out_dir=str(out_dir), format=fmt,
                           **kwargs)
    return cfg if threshold is None else apply_overrides(cfg, threshold=threshold)


def figure_presets(figure: str, fmt: str = "csv", threshold: float | None = None) -> list[tuple[str, str, ExperimentConfig]]:
    """``(name, command, config)`` triples that regenerate one figure's data.

    Each config's ``out_dir`` is its name, relative to the figure bundle.
    """
    common = dict(fmt=fmt, threshold=threshold)
    if figure == "fig2":
        sweep = SpacingSweep(0.1, 5.0, 0.05)
        return [("2x2x4", "sweep", _preset(2, 2, 4, "2x2x4", sweep=sweep, **common))]
    if figure == "fig3":
        return [(f"2x2x4_d{d}", "eigen", _preset(2, 2, 4, f"2x2x4_d{d}", spacing=d, **common))
                for d in (0.25, 0.6)]
    if figure == "fig4":
        return [(f"{n}x{n}x{n}_d0.25", "eigen", _preset(n, n, n, f"{n}x{n}x{n}_d0.25", spacing=0.25,
                                                         **common))
                for n in (2, 3)]
    if figure == "fig5":
        cases = [((2, 2, 4), 0.25, 3), ((2, 2, 4), 0.6, 4), ((2, 2, 2), 0.25, 1), ((3, 3, 3), 0.25, 4)]
        out_list = []
        for shape, d, m in cases:
            name = "x".join(map(str, shape)) + f"_d{d}_m{m}"
            out_list.append((name, "evolve", _preset(*shape, name, spacing=d, dm_indices=(m,),
                                                     physical_gamma=RUBIDIUM_GAMMA, **common)))
        return out_list
    raise ConfigError(f"unknown figure {figure!r}; expected one of {FIGURES}", "figure")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_reproduce(figure: str, out_dir, fmt: str = "csv", threads: int | None = None,
                  threshold: float | None = None) -> tuple[list[Path], list[str]]:
    """Regenerate a figure bundle and write ``manifest.json`` with checksums."""
    root = Path(out_dir) / figure
    presets = figure_presets(figure, fmt, threshold)
    root.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    warnings: list[str] = []
    for name, command, config in presets:
        # out_dir stays relative to the bundle so configs and manifest are path-independent
        target = root / config.out_dir
        target.mkdir(parents=True, exist_ok=True)
        config.dump(target / "config.json")
        files.append(target / "config.json")
        produced, warned = run_command(command, apply_overrides(config, out_dir=str(target), threads=threads))
        files.extend(produced)
        warnings.extend(f"{name}: {w}" for w in warned)
    manifest = {
        "figure": figure,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "experiments": [{"name": name, "command": command, "config": config.to_dict()}
                        for name, command, config in presets],
        "files": {str(p.relative_to(root)): _sha256(p) for p in sorted(files)},
    }
    manifest_path = root / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return files + [manifest_path], warnings


def run_command(command: str, config: ExperimentConfig) -> tuple[list[Path], list[str]]:
    if command == "sweep":
        return cmd_sweep(config), []
    if command == "eigen":
        return cmd_eigen(config), []
    if command == "evolve":
        return cmd_evolve(config)
    raise ValueError(f"unknown command {command!r}")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    parser.add_argument("--threshold", type=float, help="dominance threshold on normalized weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subradiance", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"sweep": "coupling strengths against lattice spacing",
             "eigen": "eigenvalues and normalized weightings",
             "evolve": "fluorescence time series and decay rates"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="JSON experiment config")
        _common_flags(p)
    p = sub.add_parser("reproduce", help="regenerate the data bundle of one figure")
    p.add_argument("figure", choices=FIGURES)
    _common_flags(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {"out_dir": args.out, "format": args.format, "threads": args.threads,
             "threshold": args.threshold}
    try:
        env = env_overrides()
        if args.command == "reproduce":
            merged = {**env, **{k: v for k, v in flags.items() if v is not None}}
            if merged.get("threads") is not None and merged["threads"] < 1:
                raise ConfigError("must be at least 1", "threads")
            files, warnings = cmd_reproduce(args.figure, merged.get("out_dir", "out"),
                                            merged.get("format", "csv"), merged.get("threads"),
                                            merged.get("threshold"))
        else:
            config = apply_overrides(load_config(args.config), **env)
            config = apply_overrides(config, **flags)
            files, warnings = run_command(args.command, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailureError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for path in files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
