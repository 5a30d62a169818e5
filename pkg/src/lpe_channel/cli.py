"""Command-line driver: ``lpe-channel <subcommand> --config run.toml``.

Exit codes: 0 success, 1 verification failure, 2 usage, 3 CFL violation,
4 non-finite state, 5 I/O error, 6 configuration or expression error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .domain import project_to_domain, stack_from_initial
from .errors import CFLViolation, ConfigError, NonFiniteStateError
from .horizontal import ChannelGrid
from .io import EnergyCSVWriter, RunConfig, fmt, load_config, stack_fields, write_snapshot, write_table
from .mode_n import BC_VARIANTS, STANDARD, SWAPPED
from .timestep import Stepper, cfl_dt, steps_for

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CFL, EXIT_NAN, EXIT_IO, EXIT_CONFIG = range(7)


def _out_dir(args) -> Path:
    out = Path(args.out or "lpe_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(summary: dict, out: Path | None, name: str) -> None:
    text = json.dumps(summary, indent=2, sort_keys=True)
    print(text)
    if out is not None:
        (out / name).write_text(text + "\n")


def simulate(rc: RunConfig, out: Path, override_cfl: bool = False,
             energy_name: str = "energy.csv", snapshots: bool = True) -> dict:
    """Project the initial data, step to ``Tend`` and write outputs under ``out``."""
    grid = ChannelGrid(rc.channel, rc.disc)
    rc.validate_fields(grid)
    dt = rc.integ.dt_override or rc.disc.dt
    stepper = Stepper(grid, rc.forcing_spec(), rc.integ, rc.bc_variant)
    stepper.check_dt(dt, override=override_cfl or rc.integ.dt_override is not None)
    nsteps = steps_for(rc.disc.Tend, dt)

    ic = project_to_domain(rc.initial_condition(grid), grid, rc.bc_variant)
    stack = stack_from_initial(ic, rc.disc.M, grid.shape)

    snap_steps = {}
    for t in rc.snapshot_times:
        k = round(t / dt)
        if not 0 <= k <= nsteps:
            raise ConfigError(f"snapshot time {t} outside [0, Tend]")
        snap_steps.setdefault(k, t)

    from .verification.energy import instantaneous

    def snap(k, st):
        if snapshots and k in snap_steps:
            write_snapshot(out / f"snapshot_{k:08d}.lpe", stack_fields(st), rc.disc.M)

    status = {"completed_steps": 0}
    # a blow-up is reported by the non-finite check; its overflow warnings are noise
    with np.errstate(over="ignore", invalid="ignore"), EnergyCSVWriter(out / energy_name) as writer:
        writer.add(stack.time, *instantaneous(stack, grid, stepper.forcing))
        snap(0, stack)

        def callback(k, st):
            status["completed_steps"] = k
            if k % rc.energy_every == 0 or k == nsteps:
                writer.add(st.time, *instantaneous(st, grid, stepper.forcing))
            snap(k, st)

        stack = stepper.advance(stack, dt, nsteps, callback)
        E_end = instantaneous(stack, grid)[0]
    return {"dt": dt, "steps": nsteps, "bc": rc.bc_variant, "cfl_limit": cfl_dt(rc.channel, rc.disc, rc.integ),
            "final_energy": [float(e) for e in E_end], "projection_residuals":
            {str(k): v for k, v in ic.residuals.items()}, "warnings": ic.warnings}


def cmd_simulate(rc: RunConfig, args) -> int:
    out = _out_dir(args)
    summary = simulate(rc, out, args.override_cfl)
    _emit(summary, out, "summary.json")
    return EXIT_OK


def cmd_verify(rc: RunConfig, args) -> int:
    from .verification.suites import run_verify

    report = run_verify(args.suite, rc.channel)
    for c in report.checks:
        print(c.line(), file=sys.stderr)
    text = report.to_json()
    print(text)
    if args.out:
        (_out_dir(args) / f"verify_{args.suite}.json").write_text(text + "\n")
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_convergence(rc: RunConfig, args) -> int:
    from .verification.mms import mms_run, smoke_solution

    opts = {"n": 1, "Ny": 33, "Nx": 8, "T": 0.5, "dt_space": 2e-3, "dt_time": 0.025}
    opts.update(rc.convergence)
    table = mms_run(smoke_solution(rc.channel), rc.channel, n=int(opts["n"]), Ny=int(opts["Ny"]),
                    Nx=int(opts["Nx"]), T=float(opts["T"]), dt_space=float(opts["dt_space"]),
                    dt_time=float(opts["dt_time"]), scheme=rc.integ.scheme)
    out = _out_dir(args)
    write_table(out / "convergence.csv", ["kind", "h", "error", "order"],
                [(r["kind"], float(r["h"]), float(r["error"]), float(r["order"])) for r in table.rows])
    _emit({"y_orders": table.orders("y"), "t_orders": table.orders("t"),
           "x_error": table.errors("x")}, out, "convergence.json")
    return EXIT_OK


def cmd_demo_illposed(rc: RunConfig, args) -> int:
    """Same data and no forcing under both wall conditions; report the total-energy trend."""
    from dataclasses import replace

    from .io import read_energy_csv

    out = _out_dir(args)
    base = replace(rc, forcing={})
    summary = {}
    for variant in (STANDARD, SWAPPED):
        simulate(replace(base, bc_variant=variant), out, args.override_cfl,
                 energy_name=f"energy_{variant}.csv", snapshots=False)
        tab = read_energy_csv(out / f"energy_{variant}.csv")
        times = np.unique(tab["t"])
        total = np.array([tab["E"][(tab["t"] == t) & (tab["mode"] > 0)].sum() for t in times])
        d = np.diff(total)
        slack = 1e-12 * max(total[0], 1e-300)
        summary[variant] = {"E_start": float(total[0]), "E_end": float(total[-1]),
                            "non_increasing": bool(np.all(d <= slack)),
                            "non_decreasing": bool(np.all(d >= -slack))}
    ok = summary[STANDARD]["non_increasing"] and summary[SWAPPED]["non_decreasing"]
    summary["expected_trends"] = ok
    _emit(summary, out, "demo_illposed.json")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_spectrum(rc: RunConfig, args) -> int:
    from .verification.dense import assemble_dense, growth_spectrum

    modes = [int(n) for n in rc.spectrum.get("modes", range(1, rc.disc.M + 1))]
    wavenumbers = [int(m) for m in rc.spectrum.get("wavenumbers", range(0, rc.disc.Nx // 2 + 1))]
    rows = []
    worst = {STANDARD: -np.inf, SWAPPED: -np.inf}
    for n in modes:
        for m in wavenumbers:
            op = assemble_dense(n, m, rc.channel, rc.disc, check=False)
            for variant in (STANDARD, SWAPPED):
                ev = growth_spectrum(op, variant)
                ev = ev[np.lexsort((ev.imag, ev.real))]
                worst[variant] = max(worst[variant], float(ev.real.max()))
                rows += [(variant, n, m, float(e.real), float(e.imag)) for e in ev]
    out = _out_dir(args)
    write_table(out / "spectrum.csv", ["bc", "mode", "m", "re", "im"], rows)
    _emit({"max_growth_rate": {k: fmt(v) for k, v in worst.items()}}, out, "spectrum.json")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "convergence": cmd_convergence,
            "demo-illposed": cmd_demo_illposed, "spectrum": cmd_spectrum}


def build_parser() -> argparse.ArgumentParser:
    from .verification.suites import SUITES

    parser = argparse.ArgumentParser(prog="lpe-channel",
                                     description="Linearized primitive equations in a periodic channel")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--bc", choices=BC_VARIANTS)
        p.add_argument("--modes", type=int, metavar="M")
        p.add_argument("--dt", type=float, metavar="X")
        p.add_argument("--override-cfl", action="store_true")
        if name == "verify":
            p.add_argument("suite", nargs="?", default="all", choices=SUITES + ("all",))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        rc = load_config(args.config).with_overrides(args.modes, args.dt, args.bc)
        return COMMANDS[args.command](rc, args)
    except CFLViolation as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CFL
    except NonFiniteStateError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NAN
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
