"""
Gate-level circuits lowered to pulse schedules.

Two-qubit gates follow the charge-to-spin conversion recipe: open the QCA
square of the two cells, act on the spin with rotations conditioned on which
diagonal the electrons occupy, and close the square again.

For a pair (lo, hi) the "minus" diagonal puts the electrons in (C_lo, B_hi)
and the "plus" diagonal in (D_lo, A_hi) for LR squares; TB squares use the
transposed geometry, (B_lo, C_hi) and (D_lo, A_hi).
"""
from __future__ import annotations

import cmath
import enum
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .device import MergeMode
from .errors import (
    ChargeLeakageError,
    GateError,
    NonUnitaryMergeError,
    NonUnitaryScheduleError,
    NotAdjacentError,
    SameCellError,
)
from .hilbert import Direction, DotSite, Grid, QcaPair, cell_view, spin_product_state
from .schedule import BiasOff, BiasOn, Polarization, Rotation, Schedule, validate

PI = math.pi
UNITARY_TOL = 1e-10


class BellKind(str, enum.Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS = "psi+"
    PHI_MINUS = "phi-"
    PHI_PLUS = "phi+"

    @property
    def reference_name(self) -> str:
        return "bell_" + self.value[:-1] + ("_minus" if self.value.endswith("-") else "_plus")


# kind -> (prepare |01> from |00>?, angle at the plus dot of the second cell)
_BELL_RECIPES = {
    BellKind.PSI_MINUS: (True, PI),
    BellKind.PSI_PLUS: (True, 3 * PI),
    BellKind.PHI_MINUS: (False, PI),
    BellKind.PHI_PLUS: (False, 3 * PI),
}


@dataclass(frozen=True)
class Gate:
    kind: str  # RotX, RotY, RotZ, BellPrep, CNOT
    operands: tuple[int, ...]
    angle: float | None = None
    bell: BellKind | None = None

    @classmethod
    def from_record(cls, record: dict) -> "Gate":
        kind = record["kind"]
        operands = tuple(int(c) for c in record["operands"])
        angle = record.get("angle")
        if isinstance(angle, str):
            from .dsl import parse_angle

            angle = parse_angle(angle)
        bell = record.get("bell")
        gate = cls(kind, operands, None if angle is None else float(angle), None if bell is None else BellKind(bell))
        gate.check_shape()
        return gate

    def check_shape(self) -> None:
        if self.kind in ("RotX", "RotY", "RotZ"):
            if len(self.operands) != 1 or self.angle is None:
                raise ValueError(f"{self.kind} takes one operand and an angle")
        elif self.kind == "CNOT":
            if len(self.operands) != 2:
                raise ValueError("CNOT takes (control, target)")
        elif self.kind == "BellPrep":
            if len(self.operands) != 2 or self.bell is None:
                raise ValueError("BellPrep takes two operands and a bell kind")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")


def _grid_for(grid: Grid | None, *cells: int) -> Grid:
    return Grid.line(max(cells) + 1) if grid is None else grid


def _pair(grid: Grid, a: int, b: int) -> QcaPair:
    if a == b:
        raise SameCellError(f"two-qubit operation on a single cell {a}")
    for c in (a, b):
        if not 0 <= c < grid.n_cells:
            raise NotAdjacentError(f"cell {c} is not on the {grid.rows}x{grid.cols} grid")
    return QcaPair.between(grid, a, b)


def _branch_dots(pair: QcaPair, cell: int) -> tuple[DotSite, DotSite]:
    """(minus-diagonal dot, plus-diagonal dot) of ``cell`` within ``pair``."""
    k = pair.cells.index(cell)
    return pair.minus_state[k], pair.plus_state[k]


def compile_single(axis: str, angle: float, cell: int, grid: Grid | None = None) -> Schedule:
    grid = _grid_for(grid, cell)
    grid.check_cell(cell)
    return Schedule(grid.n_cells, (Rotation(cell, axis, float(angle)),), grid, {"global_phase": 1 + 0j})


def compile_bell(kind: BellKind | str, i: int, j: int, grid: Grid | None = None) -> Schedule:
    """Bell pair on cells (i, j) starting from |00>.

    psi kinds first flip cell j with R_x(pi), which leaves a recorded global
    phase of -i on the output.
    """
    kind = BellKind(kind)
    grid = _grid_for(grid, i, j)
    pair = _pair(grid, i, j)
    flip_second, angle_j = _BELL_RECIPES[kind]
    events = []
    phase = 1 + 0j
    if flip_second:
        events.append(Rotation(j, "x", PI))
        phase *= -1j
    events += [
        BiasOn(pair.cell_lo, pair.cell_hi, pair.direction),
        Rotation(i, "x", PI, _branch_dots(pair, i)[1]),
        Rotation(j, "x", angle_j, _branch_dots(pair, j)[1]),
        BiasOff(pair.cell_lo, pair.cell_hi, pair.direction),
    ]
    mirrored = pair.direction is Direction.TB or i != pair.cell_lo
    meta = {"global_phase": phase, "mirrored": mirrored, "bell": kind.value, "cells": (i, j)}
    return Schedule(grid.n_cells, tuple(events), grid, meta)


def compile_cnot(control: int, target: int, grid: Grid | None = None) -> Schedule:
    """CNOT via polarization pulse plus branch-conditional rotations.

    Minus-diagonal dots get R_z(pi/2) on the control and R_x(pi/2) on the
    target, plus-diagonal dots R_z(3pi/2) and R_x(3pi/2). Orientations other
    than control-left LR reuse that branch assignment on the mirrored dots.
    """
    grid = _grid_for(grid, control, target)
    pair = _pair(grid, control, target)
    c_minus, c_plus = _branch_dots(pair, control)
    t_minus, t_plus = _branch_dots(pair, target)
    events = (
        BiasOn(pair.cell_lo, pair.cell_hi, pair.direction),
        Polarization(pair.cell_lo, pair.cell_hi, PI / 2),
        Rotation(control, "z", PI / 2, c_minus),
        Rotation(control, "z", 3 * PI / 2, c_plus),
        Rotation(target, "x", PI / 2, t_minus),
        Rotation(target, "x", 3 * PI / 2, t_plus),
        BiasOff(pair.cell_lo, pair.cell_hi, pair.direction),
    )
    mirrored = pair.direction is Direction.TB or control != pair.cell_lo
    meta = {"global_phase": 1 + 0j, "mirrored": mirrored, "cells": (control, target)}
    return Schedule(grid.n_cells, events, grid, meta)


def compile_gate(gate: Gate, grid: Grid) -> Schedule:
    gate.check_shape()
    if gate.kind in ("RotX", "RotY", "RotZ"):
        return compile_single(gate.kind[-1].lower(), gate.angle, gate.operands[0], grid)
    if gate.kind == "CNOT":
        return compile_cnot(*gate.operands, grid=grid)
    return compile_bell(gate.bell, *gate.operands, grid=grid)


def compile_circuit(gates: Sequence[Gate | dict], grid: Grid | None = None, n_cells: int | None = None) -> Schedule:
    """Concatenate per-gate schedules and check the result's window structure."""
    gates = [g if isinstance(g, Gate) else Gate.from_record(g) for g in gates]
    if grid is None:
        if n_cells is None:
            n_cells = max((max(g.operands) for g in gates), default=0) + 1
        grid = Grid.line(n_cells)
    events = []
    phase = 1 + 0j
    mirrored = False
    for index, gate in enumerate(gates):
        try:
            part = compile_gate(gate, grid)
        except (ValueError, IndexError) as exc:
            raise GateError(index, exc) from exc
        events.extend(part.events)
        phase *= part.metadata.get("global_phase", 1)
        mirrored |= part.metadata.get("mirrored", False)
    schedule = Schedule(grid.n_cells, tuple(events), grid, {"global_phase": phase, "mirrored": mirrored})
    validate(schedule)
    return schedule


def load_circuit(text: str) -> list[Gate]:
    records = json.loads(text)
    if not isinstance(records, list):
        raise ValueError("circuit JSON must be an array of gate records")
    gates = []
    for index, record in enumerate(records):
        try:
            gates.append(Gate.from_record(record))
        except (KeyError, ValueError, TypeError) as exc:
            raise GateError(index, exc) from exc
    return gates


@dataclass(frozen=True)
class ScheduleUnitary:
    matrix: np.ndarray  # spin-subspace map with the global phase removed
    global_phase: float  # radians that were stripped
    raw: np.ndarray  # before phase stripping


def unitary_of_schedule(
    schedule: Schedule,
    cells: int | Iterable[int],
    *,
    require_unitary: bool = True,
    mode: MergeMode = MergeMode.STRICT,
) -> ScheduleUnitary:
    """Reconstruct the map a schedule induces on the spins of ``cells``.

    Every spin basis input (charges at Q, other cells |0>) is run through the
    schedule, the charge must come back to the qubit dots, and the outputs
    restricted to ``cells`` form the columns. The global phase is fixed by
    making the first non-negligible entry of the first column real positive.

    ``require_unitary=False`` returns the linear map even when it is not an
    isometry; merges then run without the strict norm check so that
    protocols valid only on particular inputs can be inspected.
    """
    from .simulate import run_schedule

    cells = [cells] if isinstance(cells, int) else list(cells)
    if schedule.has_measurements():
        raise ValueError("measurement events have no unitary")
    validate(schedule)
    for c in cells:
        schedule.grid.check_cell(c)
    n, k = schedule.n_cells, len(cells)
    if not require_unitary:
        mode = MergeMode.POST_SELECTED
    dim = 2**k
    raw = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = format(col, f"0{k}b")
        spins = [0] * n
        for c, b in zip(cells, bits):
            spins[c] = int(b)
        try:
            result = run_schedule(schedule, spin_product_state(spins, schedule.grid), mode=mode)
        except NonUnitaryMergeError as exc:
            if require_unitary or exc.success_prob != 0:
                raise
            continue  # the input is annihilated: zero column
        # undo post-selection renormalization to recover the linear map
        amps = result.state.amplitudes * math.sqrt(result.success_prob)
        view = cell_view(amps, n, list(range(n)))
        # charge must be back at Q for every cell
        charge_q = view[(slice(None), 0) * n]
        leak = np.sum(np.abs(view) ** 2) - np.sum(np.abs(charge_q) ** 2)
        if leak > UNITARY_TOL:
            raise ChargeLeakageError(f"input {bits}: {leak:.3g} of the weight left the qubit dots")
        others = [c for c in range(n) if c not in cells]
        sub = np.moveaxis(charge_q, cells + others, list(range(n)))
        sub = sub[(slice(None),) * k + (0,) * (n - k)]
        raw[:, col] = sub.reshape(-1)

    if require_unitary:
        dev = np.max(np.abs(raw.conj().T @ raw - np.eye(dim)))
        if dev > UNITARY_TOL:
            raise NonUnitaryScheduleError(f"spin map deviates from unitarity by {dev:.3g}")
    phase = 0.0
    for entry in raw[:, 0]:
        if abs(entry) > UNITARY_TOL:
            phase = cmath.phase(entry)
            break
    return ScheduleUnitary(raw * cmath.exp(-1j * phase), phase, raw)

