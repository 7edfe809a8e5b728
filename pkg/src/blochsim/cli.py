"""Command-line driver.

    blochsim KEYPARAMS [--figures DIR]

reads the two-tier configuration, runs the requested calculation and writes
delimited output: the steady-state table to stdout (and to a file when
filename_rho_out is set), time-dependent components to filename_rho_out,
propagated amplitudes to filename_tdamps_out.  --figures also renders PNG
summaries of the same results.

Exit codes: 0 success, 2 configuration parse error, 3 validation error,
4 solver failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import doppler, dynamics, mbe, steady
from .config import (ConfigParseError, ConfigValidationError, RunConfig,
                     parse_config)
from .liouvillian import build, split_velocity, weak_probe_reduce
from .system import coher_index, pop_index, populations

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4


def steady_table(r: np.ndarray, n: int) -> str:
    """Upper-triangle density matrix table, column-major pair order."""
    lines = ["   i   j   Re rho(i,j)   Im rho(i,j)", ""]
    for j in range(1, n + 1):
        for i in range(1, j + 1):
            if i == j:
                re, im = r[pop_index(j)], 0.0
            else:
                x, y = coher_index(i, j)
                re, im = r[x], r[y]
            lines.append(f"{i:4d}{j:4d}{re:14.5E}{im:14.5E}")
    return "\n".join(lines) + "\n"


def _velocity_grid(cfg: RunConfig):
    if cfg.velgrid_file:
        return doppler.load_grid(cfg.base_dir / cfg.velgrid_file)
    return doppler.make_grid("trapezoid", cfg.n_v_classes, cfg.v_span,
                             cfg.urms)


def _initial_pops(cfg: RunConfig) -> np.ndarray:
    return populations(cfg.initial_r, cfg.system.n_states)


def _run_steady(cfg: RunConfig, figures):
    n = cfg.system.n_states
    if cfg.weak_probe:
        lmat, _ = weak_probe_reduce(cfg.system, cfg.fields,
                                    _initial_pops(cfg))
        if cfg.doppler:
            # reduced operator is still affine in v; average numerically
            amps_off = [None] * len(cfg.fields)
            amps_off[0] = 0.0
            l1 = split_velocity(cfg.system, cfg.fields).l1
            grid = _velocity_grid(cfg)
            r = doppler.average_steady_numerical(
                lambda v: steady.steady_linear(lmat + v * l1, n),
                grid, cfg.urms)
        else:
            r = steady.steady_linear(lmat, n)
    elif cfg.doppler:
        form = steady.factor_steady_velocity(cfg.system, cfg.fields)
        r = steady.steady_doppler_semianalytic(form, cfg.urms)
    else:
        r = steady.steady_linear(build(cfg.system, cfg.fields), n)
    table = steady_table(r, n)
    sys.stdout.write(table)
    if cfg.rho_out:
        Path(cfg.rho_out).write_text(table)
    if figures:
        from . import plots
        plots.steady_figure(r, n, figures / "steady_state.png")
    return EXIT_OK


def _td_writer(cfg: RunConfig, traj: dynamics.Trajectory):
    n = cfg.system.n_states
    comps = cfg.out_components
    if not comps:
        comps = [(j, j) for j in range(n)]
    cols = []
    headers = []
    for (i, j) in comps:
        lo, hi = sorted((i, j))
        if i == j:
            cols.append(traj.states[:, pop_index(i + 1)])
            headers.append(f"rho({i + 1},{j + 1})")
        else:
            x, y = coher_index(lo + 1, hi + 1)
            cols.append(traj.states[:, x])
            headers.append(f"Re_rho({lo + 1},{hi + 1})")
            cols.append(traj.states[:, y])
            headers.append(f"Im_rho({lo + 1},{hi + 1})")
    path = cfg.rho_out or "rho_out.dat"
    with open(path, "a" if cfg.append else "w") as fh:
        fh.write("#       t_us  " + "  ".join(f"{h:>14s}" for h in headers)
                 + "\n")
        for k in range(0, traj.times.size, cfg.nt_writeout):
            row = [f"{traj.times[k]: .6E}"]
            row += [f"{c[k]: .8E}" for c in cols]
            fh.write(" ".join(row) + "\n")
    return path


def _run_td(cfg: RunConfig, figures):
    n = cfg.system.n_states
    t0, t1, nt = cfg.t_start, cfg.t_end, cfg.n_time_steps
    if cfg.noncw:
        times, env = _applied_envelopes(cfg)
        vgrid = _velocity_grid(cfg) if cfg.doppler else None
        traj = mbe.td_obe_only(cfg.system, cfg.fields, times, env,
                               cfg.initial_r,
                               u=cfg.urms if cfg.doppler else None,
                               vgrid=vgrid, time_method=cfg.method,
                               n_substeps=cfg.n_substeps)
    else:
        if cfg.weak_probe:
            lmat, _ = weak_probe_reduce(cfg.system, cfg.fields,
                                        _initial_pops(cfg))
        else:
            lmat = build(cfg.system, cfg.fields)
        if cfg.doppler:
            split = split_velocity(cfg.system, cfg.fields)
            traj = doppler.average_td(lmat, split.l1, cfg.initial_r,
                                      _velocity_grid(cfg), cfg.urms,
                                      t0, t1, nt, method=cfg.method,
                                      n_substeps=cfg.n_substeps)
        elif cfg.method == "eigen":
            times = np.linspace(t0, t1, nt + 1)
            traj = dynamics.integrate_eigen(lmat, cfg.initial_r, times)
        elif cfg.method == "adaptive":
            traj = dynamics.integrate_adaptive(lmat, cfg.initial_r, t0, t1,
                                               nt)
        elif cfg.method == "rk5":
            traj = dynamics.integrate_rk5(lmat, cfg.initial_r, t0, t1, nt,
                                          cfg.n_substeps)
        else:
            traj = dynamics.integrate_rk4(lmat, cfg.initial_r, t0, t1, nt,
                                          cfg.n_substeps)
    path = _td_writer(cfg, traj)
    n_rows = len(range(0, traj.times.size, cfg.nt_writeout))
    sys.stdout.write(f"time-dependent run written to {path} "
                     f"({n_rows} rows)\n")
    if figures:
        from . import plots
        plots.trajectory_figure(traj.times, traj.states, n,
                                figures / "populations.png")
    return EXIT_OK


def _applied_envelopes(cfg: RunConfig):
    """Time mesh and complex envelopes for every field."""
    nf = len(cfg.fields)
    if cfg.td_fields_source == "file":
        if not cfg.tdamps_in:
            raise ConfigValidationError(
                "itdfieldsAorB = 2 needs filename_tdamps_in")
        ftimes, famps = mbe.read_envelopes(cfg.base_dir / cfg.tdamps_in, nf)
        times = np.linspace(ftimes[0], ftimes[-1], cfg.n_time_steps + 1)
        env = np.empty((nf, times.size), dtype=complex)
        for a in range(nf):
            env[a] = np.interp(times, ftimes, famps[a].real) \
                + 1j * np.interp(times, ftimes, famps[a].imag)
        return times, env
    times = np.linspace(cfg.t_start, cfg.t_end, cfg.n_time_steps + 1)
    env = np.empty((nf, times.size), dtype=complex)
    for a in range(nf):
        if not cfg.noncw:
            env[a] = cfg.fields[a].amplitude
            continue
        spec = cfg.envelopes.get(a)
        if spec is None or "shape" not in spec:
            raise ConfigValidationError(
                f"field {a + 1} has no envelope keys")
        env[a] = mbe.make_envelope(
            str(spec["shape"]), float(spec.get("peak", 0.0)),
            float(spec.get("center", 0.0)), float(spec.get("width", 1.0)),
            times, peak_unit=str(spec.get("peak_unit", "field")))
    return times, env


def _run_mbe(cfg: RunConfig, figures):
    times, env = _applied_envelopes(cfg)
    grid = mbe.PropagationGrid(cfg.z_max, cfg.n_z_steps, times[0], times[-1],
                               times.size - 1)
    vgrid = _velocity_grid(cfg) if cfg.doppler else None
    writer = mbe.amplitude_file_writer(cfg.tdamps_out, cfg.nt_writeout,
                                       cfg.append)
    result = mbe.propagate(cfg.system, cfg.fields, grid, env, cfg.initial_r,
                           cfg.density, u=cfg.urms if cfg.doppler else None,
                           vgrid=vgrid, time_method=cfg.method,
                           n_substeps=cfg.n_substeps, z_method=cfg.z_method,
                           nz_writeout=cfg.nz_writeout, writer=writer)
    sys.stdout.write(f"propagated amplitudes written to {cfg.tdamps_out} "
                     f"({result.z_out.size} positions)\n")
    if figures:
        from . import plots
        plots.propagation_figure(result.z_out, result.times, result.amps_out,
                                 figures / "propagation.png")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blochsim",
        description="Optical Bloch / Maxwell-Bloch solver")
    parser.add_argument("keyparams", help="key-parameters file")
    parser.add_argument("--figures", metavar="DIR", default=None,
                        help="also render PNG figures into DIR")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.keyparams)
    except ConfigParseError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    figures = None
    if args.figures:
        figures = Path(args.figures)
        figures.mkdir(parents=True, exist_ok=True)

    try:
        if cfg.mode == "steady":
            return _run_steady(cfg, figures)
        if cfg.mode == "td":
            return _run_td(cfg, figures)
        return _run_mbe(cfg, figures)
    except ConfigValidationError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
