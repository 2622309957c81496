"""Command-line interface.

Subcommands: params show, kernel dump, steady, dispersion, critical, scan,
figure.  Global flags: --config FILE, --defaults, --out PATH, --json, --tol X,
--jobs N, plus trailing key=value overrides on every subcommand.

Exit codes: 0 success, 1 configuration error, 2 solver error, 3 partial
figure failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, PartialFigureError, PhotonBECError
from .figures import FIGURE_IDS, FigureJob, run_figure
from .greens import (KernelSpec, greens_2d_effective, greens_3d,
                     kernel_delayed, kernel_static)
from .params import derive
from .runconfig import RunConfig, format_value, parse_config, write_csv
from .bogoliubov import (UniformCondensate, critical_momentum,
                         critical_velocity, dispersion_sweep, scan)
from .steady import imaginary_time_ground_state, observables, solve_curved, solve_flat

_KERNELS = ("g3d", "g2d", "static", "delayed")


def _parse_range(text: str, count_name: str = "steps"):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must be start:stop:{count_name}, got {text!r}")
    start, stop, num = float(parts[0]), float(parts[1]), int(float(parts[2]))
    if num < 1:
        raise ConfigError("range needs at least one step")
    return start, stop, num


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(args, columns, rows):
    lines = [f"# column: {name} [{unit}]" for name, unit in columns]
    lines.append(",".join(name for name, _ in columns))
    lines += [",".join(format_value(x) for x in row) for row in rows]
    _emit(args, "\n".join(lines) + "\n")


def _split_tokens(args, expected_words: int, allowed=None):
    """Separate action words from key=value overrides in the free tokens."""
    words, overrides = [], []
    for token in args.tokens or []:
        (overrides if "=" in token else words).append(token)
    if len(words) != expected_words:
        raise ConfigError(f"expected {expected_words} action word(s), got {words}")
    if allowed is not None:
        for word in words:
            if word not in allowed:
                raise ConfigError(f"unknown action {word!r}; choose from {allowed}")
    return words, overrides


def _build_runconfig(args, overrides) -> RunConfig:
    overrides = list(overrides)
    if args.tol is not None:
        overrides.append(f"rel_tol={args.tol}")
    return parse_config(args.config, overrides,
                        use_defaults=args.defaults or args.config is None)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_params(args) -> int:
    _, overrides = _split_tokens(args, 1, allowed=("show",))
    run = _build_runconfig(args, overrides)
    cavity = run.cavity
    if cavity.is_flat:
        from .params import cutoff_frequency, photon_mass
        derived = {"m_ph": photon_mass(cavity), "omega_c": cutoff_frequency(cavity),
                   "k_z": cavity.q * np.pi / cavity.L,
                   "diffusivity": cavity.diffusivity}
    else:
        derived = derive(cavity).to_dict()
    if args.json:
        _emit(args, json.dumps({"config": cavity.to_dict(), "derived": derived},
                               indent=2, sort_keys=True) + "\n")
        return 0
    lines = ["# cavity configuration (SI)"]
    for key, value in cavity.to_dict().items():
        lines.append(f"{key:12s} = {'flat' if value is None else format_value(value)}")
    lines.append("# derived quantities (SI)")
    for key, value in derived.items():
        lines.append(f"{key:12s} = {format_value(value)}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_kernel(args) -> int:
    _, overrides = _split_tokens(args, 1, allowed=("dump",))
    run = _build_runconfig(args, overrides)
    spec_kwargs = dict(L=run.cavity.L, q=run.cavity.q,
                       diffusivity=run.cavity.diffusivity,
                       rel_tol=run.kernel.rel_tol, max_terms=run.kernel.max_terms)
    if args.L is not None:
        spec_kwargs["L"] = args.L
    if args.q is not None:
        spec_kwargs["q"] = args.q
    spec = KernelSpec(**spec_kwargs)
    start, stop, num = _parse_range(args.grid)
    grid = np.geomspace(start, stop, num) if args.log else np.linspace(start, stop, num)
    omega = complex(args.omega_re, args.omega_im)
    rows = []
    for x in grid:
        if args.kernel == "g3d":
            ev = greens_3d(x, args.z, args.z_src, spec)
        elif args.kernel == "g2d":
            ev = greens_2d_effective(x, spec)
        elif args.kernel == "static":
            ev = kernel_static(x, spec)
        else:
            ev = kernel_delayed(omega, x, spec)
        value = complex(ev.value)
        rows.append((x, value.real, value.imag, ev.terms_used))
    unit = "m" if args.kernel in ("g3d", "g2d") else "1/m"
    _emit_csv(args, [("rho_or_k", unit), ("value_re", ""), ("value_im", ""),
                     ("terms_used", "")], rows)
    return 0


def _steady_rows(run: RunConfig, geometry: str, n_values, solver):
    rows = []
    states = []
    for n in n_values:
        if solver == "imaginary-time":
            state = imaginary_time_ground_state(run.cavity, n, run.grid,
                                                geometry=geometry)
        elif geometry == "curved":
            state = solve_curved(run.cavity, n, run.grid)
        else:
            state = solve_flat(run.cavity, n, run.grid)
        obs = observables(state)
        rows.append((n, obs["mu"], obs["delta_r"], obs["delta_t_max"]))
        states.append(state)
    return rows, states


def _cmd_steady(args) -> int:
    _, overrides = _split_tokens(args, 0)
    run = _build_runconfig(args, overrides)
    if args.sweep:
        start, stop, num = _parse_range(args.sweep)
        n_values = np.linspace(start, stop, num)
    else:
        n_values = [args.N]
    rows, states = _steady_rows(run, args.geometry, n_values, args.solver)
    _emit_csv(args, [("n_bec", ""), ("mu", "rad/s"), ("delta_r", "m"),
                     ("delta_t_max", "K")], rows)
    if args.profiles:
        columns = [("r", "m")]
        table = [run.grid.nodes]
        for state in states:
            columns.append((f"density_N{int(state.n_bec)}", "1/m^3"))
            columns.append((f"delta_t_N{int(state.n_bec)}", "K"))
            table += [state.density, state.delta_t]
        write_csv(args.profiles, columns, zip(*table))
    return 0


def _cmd_dispersion(args) -> int:
    _, overrides = _split_tokens(args, 0)
    run = _build_runconfig(args, overrides)
    cond = UniformCondensate.from_photon_number(args.N, run.cavity)
    start, stop, num = _parse_range(args.k_grid)
    ks = np.linspace(start, stop, num)
    points = dispersion_sweep(ks, cond, run.kernel, args.mode)
    rows = [(p.k, p.omega.real, p.omega.imag, p.residual) for p in points]
    _emit_csv(args, [("k", "1/m"), ("re_omega", "rad/s"),
                     ("im_omega", "rad/s"), ("residual", "")], rows)
    return 0


def _cmd_critical(args) -> int:
    _, overrides = _split_tokens(args, 0)
    run = _build_runconfig(args, overrides)
    cond = UniformCondensate.from_photon_number(args.N, run.cavity)
    k_c = critical_momentum(cond, run.kernel, args.mode)
    v_mode = args.velocity_mode or args.mode
    v_c = critical_velocity(cond, run.kernel, v_mode,
                            k_c=k_c if v_mode == args.mode else None)
    if args.json:
        _emit(args, json.dumps({"mode": args.mode, "n_bec": args.N,
                                "k_c": k_c, "v_c": v_c}, indent=2) + "\n")
    else:
        _emit_csv(args, [("k_c", "1/m"), ("v_c", "m/s")], [(k_c, v_c)])
    return 0


def _cmd_scan(args) -> int:
    _, overrides = _split_tokens(args, 0)
    run = _build_runconfig(args, overrides)
    start, stop, num = _parse_range(args.range)
    values = np.geomspace(start, stop, num) if args.log else np.linspace(start, stop, num)
    table = scan(args.axis, values, args.N, run.cavity, mode=args.mode,
                 velocity_mode=args.velocity_mode, rel_tol=run.kernel.rel_tol)
    unit = table.unit
    _emit_csv(args, [(table.swept_parameter, unit), ("k_critical", "1/m"),
                     ("v_critical", "m/s")], table.rows)
    return 0


def _cmd_figure(args) -> int:
    words, overrides = _split_tokens(args, 1, allowed=FIGURE_IDS)
    figure_id = words[0]
    run = _build_runconfig(args, ())
    job = FigureJob(figure_id=figure_id, overrides=tuple(overrides))
    out_dir = args.out or f"out/{figure_id}"
    manifest = run_figure(job, run, out_dir, jobs=args.jobs)
    sys.stdout.write(f"{figure_id}: wrote {len(manifest['files'])} files "
                     f"to {out_dir} ({manifest['wall_time_s']:.1f}s, "
                     f"{len(manifest['errors'])} point errors)\n")
    return 0


# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--defaults", action="store_true",
                   help="start from built-in defaults (implied when no --config)")
    p.add_argument("--out", default=None, help="output file (or directory for figure)")
    p.add_argument("--json", action="store_true", help="JSON output where supported")
    p.add_argument("--tol", type=float, default=None,
                   help="kernel truncation tolerance override")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for figure jobs")
    p.add_argument("tokens", nargs="*", metavar="...",
                   help="action words and key=value overrides")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonbec",
        description="Thermo-optic photon-condensate steady states, heat "
                    "kernels, excitation spectra and critical scans")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="show configuration and derived quantities")
    _add_common(p)
    p.set_defaults(func=_cmd_params)

    p = sub.add_parser("kernel", help="dump a kernel over a grid as CSV")
    p.add_argument("--kernel", choices=_KERNELS, required=True)
    p.add_argument("--grid", required=True, metavar="MIN:MAX:STEPS")
    p.add_argument("--log", action="store_true", help="log-spaced grid")
    p.add_argument("--L", type=float, default=None, help="kernel L override [m]")
    p.add_argument("--q", type=int, default=None, help="kernel q override")
    p.add_argument("--z", type=float, default=0.0, help="g3d field plane [m]")
    p.add_argument("--z-src", type=float, default=0.0, help="g3d source plane [m]")
    p.add_argument("--omega-re", type=float, default=0.0)
    p.add_argument("--omega-im", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("steady", help="self-consistent steady state(s)")
    p.add_argument("--N", type=float, default=6e4, help="condensate photon number")
    p.add_argument("--geometry", choices=["flat", "curved"], default="curved")
    p.add_argument("--sweep", default=None, metavar="N_START:N_END:STEPS")
    p.add_argument("--solver", choices=["fixed-point", "imaginary-time"],
                   default="fixed-point")
    p.add_argument("--profiles", default=None,
                   help="also write radial profiles to this CSV")
    _add_common(p)
    p.set_defaults(func=_cmd_steady)

    p = sub.add_parser("dispersion", help="excitation dispersion on a k grid")
    p.add_argument("--mode", choices=["static", "delayed"], default="static")
    p.add_argument("--N", type=float, default=6e4)
    p.add_argument("--k-grid", required=True, metavar="MIN:MAX:STEPS")
    _add_common(p)
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("critical", help="critical momentum and velocity")
    p.add_argument("--mode", choices=["static", "delayed"], default="static")
    p.add_argument("--velocity-mode", choices=["static", "delayed"], default=None)
    p.add_argument("--N", type=float, default=6e4)
    _add_common(p)
    p.set_defaults(func=_cmd_critical)

    p = sub.add_parser("scan", help="critical quantities along one parameter")
    p.add_argument("--axis", choices=["alpha_in", "L", "n_bec"], required=True)
    p.add_argument("--range", required=True, metavar="START:STOP:STEPS")
    p.add_argument("--log", action="store_true", help="log-spaced scan values")
    p.add_argument("--mode", choices=["static", "delayed"], default="static")
    p.add_argument("--velocity-mode", choices=["static", "delayed"], default=None)
    p.add_argument("--N", type=float, default=6e4)
    _add_common(p)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("figure", help="write the data set for one figure")
    _add_common(p)
    p.set_defaults(func=_cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    # argparse cannot intersperse free tokens with optionals: sweep up the
    # key=value leftovers itself and reject anything else
    args, unknown = parser.parse_known_args(argv)
    bad = [tok for tok in unknown if "=" not in tok]
    if bad:
        parser.error(f"unrecognized arguments: {' '.join(bad)}")
    args.tokens = list(getattr(args, "tokens", []) or []) + list(unknown)
    try:
        return args.func(args)
    except ConfigError as exc:
        key = f" (key: {exc.key})" if getattr(exc, "key", None) else ""
        print(f"configuration error: {exc}{key}", file=sys.stderr)
        return 1
    except PartialFigureError as exc:
        print(f"partial figure failure: {exc}", file=sys.stderr)
        return 3
    except PhotonBECError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"configuration error: cannot write output: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
