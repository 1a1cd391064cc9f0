"""Command-line driver: ``freespin {run,compile,parse-check,bell,cnot-table,noise-sweep}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from collections import Counter
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .compiler import BellKind, compile_bell, compile_circuit, compile_cnot, load_circuit, unitary_of_schedule
from .config import DeviceConfig, NoiseParams, load_config, parse_quantity, TIME_UNITS
from .device import MergeMode
from .dsl import parse, serialize
from .errors import FreeSpinError
from .hilbert import BELL_SPIN_VECTORS, Grid, RegisterState, concurrence, fidelity, reduced_spin_density, reference_states, spin_product_state
from .noise import estimate_gate_error
from .schedule import Schedule, ScheduleError
from .simulate import TrajectoryRunner, run_schedule, sample_bits, spin_probabilities, trajectory_rng

SCHEMA = "freespin.report/1"
SWEEP_PARAMS = ("T2", "T1", "rotation_angle_jitter", "split_amplitude_imbalance")


class UsageError(Exception):
    pass


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _matrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[_complex_pair(z) for z in row] for row in m]


def _load_schedule(path: str) -> Schedule:
    return parse(Path(path).read_text(encoding="utf-8"))


def _load_params(path: str | None) -> tuple[DeviceConfig, NoiseParams | None]:
    if path is None:
        return DeviceConfig(), None
    return load_config(path)


def _parse_grid(text: str | None) -> Grid | None:
    if text is None:
        return None
    rows, _, cols = text.partition("x")
    return Grid(int(rows), int(cols))


def _initial_state(init: str | None, schedule: Schedule) -> RegisterState:
    if init is None:
        init = "0" * schedule.n_cells
    if len(init) != schedule.n_cells or set(init) - set("01+-"):
        raise UsageError(f"--init needs {schedule.n_cells} characters from 0, 1, +, -")
    return spin_product_state(list(init), schedule.grid)


def _emit(report: dict, json_out: str | None) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if json_out:
        Path(json_out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _budget(schedule: Schedule, params: NoiseParams | None, config: DeviceConfig) -> dict:
    est = estimate_gate_error(schedule, params or NoiseParams(), config)
    return {"T2": (params or NoiseParams()).T2, "total": est.total, "breakdown": est.breakdown, "warning": est.warning}


def _mc_fidelity(runner: TrajectoryRunner, reference: RegisterState, shots: int, seed: int) -> tuple[float, float]:
    fids = np.fromiter(
        (fidelity(r.state, reference) for r in runner.trajectories(shots, seed)), dtype=float, count=shots
    )
    return float(fids.mean()), float(fids.std(ddof=1) / math.sqrt(shots)) if shots > 1 else 0.0


# -- subcommands ----------------------------------------------------------------

def cmd_run(args) -> int:
    t0 = time.perf_counter()
    schedule = _load_schedule(args.schedule)
    config, params = _load_params(args.config)
    mode = MergeMode(args.mode)
    initial = _initial_state(args.init, schedule)
    report: dict = {
        "schema": SCHEMA,
        "command": "run",
        "n_cells": schedule.n_cells,
        "init": args.init or "0" * schedule.n_cells,
        "mode": mode.value,
        "seed": args.seed,
    }
    ideal = run_schedule(schedule, initial, mode=mode, rng=np.random.default_rng([args.seed, 0]))
    report["success_prob"] = ideal.success_prob
    if ideal.measurements:
        report["measurements"] = ideal.measurements
    report["fidelities"] = {
        name: fidelity(ideal.state, ref) for name, ref in reference_states(schedule.grid).items()
    }
    if schedule.n_cells == 2:
        report["concurrence"] = concurrence(reduced_spin_density(ideal.state, (0, 1)))
    if args.dump_state:
        report["final_state"] = ideal.state.to_dict()

    if args.shots:
        runner = TrajectoryRunner(schedule, initial, params, config, mode)
        hist: Counter[str] = Counter()
        fids = []
        for k, result in enumerate(runner.trajectories(args.shots, args.seed)):
            if schedule.has_measurements():
                hist["".join(str(v) for v in result.measurements.values())] += 1
            else:
                hist[sample_bits(result.state, trajectory_rng(args.seed, args.shots + k))] += 1
                fids.append(fidelity(result.state, ideal.state))
        report["shots"] = args.shots
        report["histogram"] = dict(sorted(hist.items()))
        if fids:
            f = np.array(fids)
            report["mean_fidelity"] = float(f.mean())
            report["std_error"] = float(f.std(ddof=1) / math.sqrt(len(f))) if len(f) > 1 else 0.0
    report["error_budget"] = _budget(schedule, params, config)
    if args.timings:
        report["timings"] = {"wall_seconds": time.perf_counter() - t0}
    _emit(report, args.json_out)
    return 0


def cmd_compile(args) -> int:
    gates = load_circuit(Path(args.circuit).read_text(encoding="utf-8"))
    grid = _parse_grid(args.grid)
    schedule = compile_circuit(gates, grid=grid, n_cells=args.cells)
    text = serialize(schedule)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_parse_check(args) -> int:
    schedule = _load_schedule(args.schedule)
    print(f"{args.schedule}: ok ({schedule.n_cells} cells, {len(schedule)} events)")
    return 0


def cmd_bell(args) -> int:
    kind = BellKind(args.kind)
    i, j = args.cells
    grid = _parse_grid(args.grid) or Grid.line(max(i, j) + 1)
    schedule = compile_bell(kind, i, j, grid)
    if args.emit:
        sys.stdout.write(serialize(schedule))
        return 0
    result = run_schedule(schedule)
    rho = reduced_spin_density(result.state, (i, j))
    target = BELL_SPIN_VECTORS[kind.reference_name]
    report = {
        "schema": SCHEMA,
        "command": "bell",
        "kind": kind.value,
        "cells": [i, j],
        "fidelity": float(np.real(target.conj() @ rho @ target)),
        "concurrence": concurrence(rho),
        "global_phase": _complex_pair(schedule.metadata["global_phase"]),
        "success_prob": result.success_prob,
        "schedule": serialize(schedule),
    }
    _emit(report, args.json_out)
    return 0


def _cnot_rows(config: DeviceConfig, params: NoiseParams | None) -> tuple[Schedule, list[dict], dict]:
    grid = Grid.line(2)
    schedule = compile_cnot(0, 1, grid)
    imbalance = params.split_amplitude_imbalance if params else 0.0
    coherent = NoiseParams(T2=math.inf, split_amplitude_imbalance=imbalance)
    rows = []
    raw = np.zeros((4, 4), dtype=complex)
    for col, bits in enumerate(("00", "01", "10", "11")):
        expected = bits[0] + (str(1 - int(bits[1])) if bits[0] == "1" else bits[1])
        result = run_schedule(
            schedule, spin_product_state(list(bits), grid), mode=MergeMode.POST_SELECTED, noise=coherent, config=config
        )
        probs = spin_probabilities(result.state)
        rows.append(
            {
                "input": bits,
                "expected": expected,
                "output": format(int(np.argmax(probs)), "02b"),
                "fidelity": fidelity(result.state, spin_product_state(list(expected), grid)),
                "success_prob": result.success_prob,
            }
        )
        amps = result.state.amplitudes * math.sqrt(result.success_prob)
        raw[:, col] = amps[[0, 5, 50, 55]]
    if not imbalance:
        u = unitary_of_schedule(schedule, (0, 1))
        return schedule, rows, {"matrix": u.matrix, "global_phase": u.global_phase}
    # split weights enter the map, so it is built from the runs above
    nz = np.flatnonzero(np.abs(raw[:, 0]) > 1e-10)
    phase = float(np.angle(raw[nz[0], 0])) if nz.size else 0.0
    return schedule, rows, {"matrix": raw * np.exp(-1j * phase), "global_phase": phase}


def cmd_cnot_table(args) -> int:
    config, params = _load_params(args.config)
    schedule, rows, unitary = _cnot_rows(config, params)
    report: dict = {
        "schema": SCHEMA,
        "command": "cnot-table",
        "rows": rows,
        "unitary": _matrix(unitary["matrix"]),
        "stripped_global_phase": unitary["global_phase"],
        "error_budget": _budget(schedule, params, config),
    }
    if args.shots:
        grid = schedule.grid
        noise = params or NoiseParams()
        mc = {"shots": args.shots, "seed": args.seed, "rows": {}}
        for row in rows:
            runner = TrajectoryRunner(schedule, spin_product_state(list(row["input"]), grid), noise, config)
            errors = sum(
                sample_bits(r.state, trajectory_rng(args.seed, args.shots + k)) != row["expected"]
                for k, r in enumerate(runner.trajectories(args.shots, args.seed))
            )
            mc["rows"][row["input"]] = errors / args.shots
        probe_in = spin_product_state(["+", "+"], grid)
        reference = run_schedule(schedule, probe_in).state
        mean, se = _mc_fidelity(TrajectoryRunner(schedule, probe_in, noise, config), reference, args.shots, args.seed)
        mc["coherence_probe"] = {"input": "++", "mean_infidelity": 1 - mean, "std_error": se}
        report["monte_carlo"] = mc

    out = io.StringIO()
    out.write("in  -> out  (expected)  fidelity     success_prob\n")
    for row in rows:
        out.write(
            f"{row['input']}  -> {row['output']}    ({row['expected']})        "
            f"{row['fidelity']:.12f}  {row['success_prob']:.12f}\n"
        )
    out.write(f"unitary (global phase {unitary['global_phase']:+.3e} rad stripped):\n")
    for line in unitary["matrix"]:
        out.write("  " + "  ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in line) + "\n")
    sys.stdout.write(out.getvalue())
    if args.json_out:
        _emit(report, args.json_out)
    return 0


def _sweep_values(args) -> list[float]:
    units = TIME_UNITS if args.param in ("T2", "T1") else {}
    if args.values:
        return [parse_quantity(v, units) for v in args.values.split(",")]
    if args.range:
        lo, hi, n = args.range.split(":")
        lo, hi, n = parse_quantity(lo, units), parse_quantity(hi, units), int(n)
        if args.param in ("T2", "T1"):
            return [float(v) for v in np.geomspace(lo, hi, n)]
        return [float(v) for v in np.linspace(lo, hi, n)]
    raise UsageError("noise-sweep needs --values or --range")


def cmd_noise_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise UsageError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    schedule = _load_schedule(args.schedule)
    if schedule.has_measurements():
        raise UsageError("noise-sweep needs a schedule without measure events")
    config, params = _load_params(args.config)
    base = params or NoiseParams()
    initial = _initial_state(args.init or "+" * schedule.n_cells, schedule)
    reference = run_schedule(schedule, initial).state

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["param", "value", "mean_fidelity", "std_error", "analytic_fidelity"])
    for value in _sweep_values(args):
        noise = replace(base, **{args.param: value})
        analytic = 1.0 - estimate_gate_error(schedule, noise, config).total
        if args.shots:
            runner = TrajectoryRunner(schedule, initial, noise, config)
            mean, se = _mc_fidelity(runner, reference, args.shots, args.seed)
            writer.writerow([args.param, repr(value), repr(mean), repr(se), repr(analytic)])
        else:
            writer.writerow([args.param, repr(value), "", "", repr(analytic)])
    if args.csv_out:
        Path(args.csv_out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freespin", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, shots=True):
        p.add_argument("--config", help="key=value device/noise file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json-out")
        if shots:
            p.add_argument("--shots", type=int, default=0)

    p = sub.add_parser("run", help="run a .qsp schedule")
    p.add_argument("schedule")
    p.add_argument("--init", help="initial spins, one of 0 1 + - per cell (default all 0)")
    p.add_argument("--mode", choices=[m.value for m in MergeMode], default=MergeMode.STRICT.value)
    p.add_argument("--dump-state", action="store_true")
    p.add_argument("--timings", action="store_true", help="add wall-clock timings (breaks byte-identical output)")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compile", help="lower a JSON circuit to .qsp text")
    p.add_argument("circuit")
    p.add_argument("--cells", type=int)
    p.add_argument("--grid", help="ROWSxCOLS")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("parse-check", help="parse and validate a .qsp file")
    p.add_argument("schedule")
    p.set_defaults(func=cmd_parse_check)

    p = sub.add_parser("bell", help="compile and verify a Bell preparation")
    p.add_argument("kind", choices=[k.value for k in BellKind])
    p.add_argument("--cells", type=int, nargs=2, default=(0, 1), metavar=("I", "J"))
    p.add_argument("--grid")
    p.add_argument("--emit", action="store_true", help="print the schedule instead of the report")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("cnot-table", help="truth table and unitary of the compiled CNOT")
    common(p)
    p.set_defaults(func=cmd_cnot_table)

    p = sub.add_parser("noise-sweep", help="fidelity vs a noise parameter, as CSV")
    p.add_argument("schedule")
    p.add_argument("--param", required=True)
    p.add_argument("--values", help="comma separated, e.g. 50ns,500ns,5us,50us")
    p.add_argument("--range", help="LO:HI:N (log spaced for times)")
    p.add_argument("--init")
    p.add_argument("--csv-out")
    common(p)
    p.set_defaults(func=cmd_noise_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScheduleError as exc:
        source = getattr(args, "schedule", "<input>")
        print(f"{source}:{exc.span or '?'}: {exc.code}: {exc.message}", file=sys.stderr)
        return 2
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"freespin: error: {exc}", file=sys.stderr)
        return 2
    except (FreeSpinError, ValueError, OSError) as exc:
        print(f"freespin: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
