"""Run configuration: key=value config files, overrides, CSV and manifest IO.

Config files are flat `key = value` text in SI units; `#` starts a comment.
Recognized keys: the cavity fields (L, R, q, n0, beta, kappa, cv, alpha_in,
T; R may be `flat` for plane mirrors), kernel truncation (rel_tol,
max_terms) and the radial grid (r_max, n_points).  Unknown keys are
rejected by name.

All emitted CSV files start with `# column: <name> [<unit>]` lines and
contain no timestamps, so identical inputs produce byte-identical data
files; run metadata (tool version, wall time, per-point errors) lives in the
JSON manifest only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .errors import ConfigError
from .greens import KernelSpec
from .params import CavityConfig, condensate_radius, default_config, derive
from .steady import RadialGrid

__all__ = ["RunConfig", "parse_config", "format_value",
           "write_csv", "write_manifest", "runconfig_from_manifest"]

_CAVITY_KEYS = ("L", "R", "q", "n0", "beta", "kappa", "cv", "alpha_in", "T")
_INT_KEYS = {"q", "n_points", "max_terms"}
_EXTRA_DEFAULTS = dict(rel_tol=1e-10, max_terms=2_000_000,
                       r_max=None, n_points=384)


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs: cavity physics, kernel truncation policy and
    the radial grid.  Fully deterministic (no seeds anywhere)."""

    cavity: CavityConfig
    kernel: KernelSpec
    grid: RadialGrid

    def to_dict(self) -> dict:
        return {
            "cavity": self.cavity.to_dict(),
            "kernel": {"rel_tol": self.kernel.rel_tol,
                       "max_terms": self.kernel.max_terms},
            "grid": {"r_max": self.grid.r_max, "n_points": self.grid.n_points},
        }


def _parse_value(key: str, text: str):
    text = text.strip()
    if key == "R" and text.lower() in ("flat", "none"):
        return None
    try:
        if key in _INT_KEYS:
            return int(float(text))
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse value {text!r} for key {key!r}",
                          key=key) from None


def _read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, text = (part.strip() for part in line.split("=", 1))
        values[key] = text
    return values


def parse_config(file=None, overrides=(), use_defaults: bool = True) -> RunConfig:
    """Build a validated RunConfig from an optional file plus key=value
    overrides.  Table defaults fill everything not given."""
    if file is None and not use_defaults:
        raise ConfigError("no config file given and defaults disabled")
    raw: dict = {}
    if file is not None:
        raw.update(_read_config_file(file))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = (part.strip() for part in item.split("=", 1))
        raw[key] = text

    cavity_kwargs = {}
    extras = dict(_EXTRA_DEFAULTS)
    for key, text in raw.items():
        if key in _CAVITY_KEYS:
            cavity_kwargs[key] = _parse_value(key, text)
        elif key in extras:
            extras[key] = _parse_value(key, text)
        else:
            raise ConfigError(f"unknown configuration key {key!r}", key=key)
    cavity = default_config(**cavity_kwargs)
    if extras["r_max"] is None:
        if cavity.is_flat:
            raise ConfigError("r_max must be given for flat-mirror configs",
                              key="r_max")
        extras["r_max"] = 5.0 * condensate_radius(cavity)
    kernel = KernelSpec.from_config(cavity, rel_tol=extras["rel_tol"],
                                    max_terms=extras["max_terms"])
    grid = RadialGrid(r_max=extras["r_max"], n_points=extras["n_points"])
    return RunConfig(cavity=cavity, kernel=kernel, grid=grid)


def runconfig_from_manifest(manifest: dict) -> RunConfig:
    """Rebuild the RunConfig recorded in a figure manifest."""
    inputs = manifest["inputs"]
    cavity = CavityConfig(**inputs["cavity"])
    kernel = KernelSpec.from_config(cavity, **inputs["kernel"])
    grid = RadialGrid(**inputs["grid"])
    return RunConfig(cavity=cavity, kernel=kernel, grid=grid)


def format_value(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.12g}"


def write_csv(path, columns, rows) -> None:
    """columns: (name, unit) pairs; rows: iterables of numbers."""
    lines = [f"# column: {name} [{unit}]" for name, unit in columns]
    lines.append(",".join(name for name, _ in columns))
    for row in rows:
        lines.append(",".join(format_value(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(path, figure_id: str, run: RunConfig, files, wall_time_s,
                   errors=(), notes=()) -> dict:
    cavity = run.cavity
    derived = {}
    if not cavity.is_flat:
        derived = derive(cavity).to_dict()
    manifest = {
        "figure": figure_id,
        "tool": {"name": "photonbec", "version": __version__},
        "inputs": run.to_dict(),
        "derived": derived,
        "files": sorted(str(f) for f in files),
        "wall_time_s": wall_time_s,
        "errors": list(errors),
        "notes": list(notes),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
