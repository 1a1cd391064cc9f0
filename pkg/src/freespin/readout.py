"""
Spin-to-charge readout through a quantum point contact.

A readout pulse lowers the C/D dots of the cell; only the |1> spin component
tunnels out, the QPC sees the charge move, and the electron comes back to
the qubit dot when the pulse ends.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .device import single_cell_return, single_cell_split
from .errors import ActiveWindowError, ChargeNotAtQubitDotError
from .hilbert import NORM_TOL, Direction, DotSite, RegisterState, cell_view, from_cell_view

BRANCH_TOL = 1e-14


@dataclass(frozen=True)
class MeasurementRecord:
    cell: int
    outcome: int
    probability_of_outcome: float
    post_state: RegisterState


def spin_one_probability(state: RegisterState, cell: int) -> float:
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    return float(np.sum(np.abs(v[1]) ** 2))


def measure_z(
    state: RegisterState,
    cell: int,
    rng: np.random.Generator,
    direction: Direction = Direction.LR,
) -> MeasurementRecord:
    p_one, post0, post1 = measurement_branches(state, cell, direction)
    outcome = int(rng.random() < p_one)
    if outcome:
        return MeasurementRecord(cell, 1, p_one, post1)
    return MeasurementRecord(cell, 0, 1.0 - p_one, post0)


def measurement_branches(
    state: RegisterState, cell: int, direction: Direction = Direction.LR
) -> tuple[float, RegisterState | None, RegisterState | None]:
    """Probability of outcome 1 and the post-measurement state for each outcome.

    Runs the readout pulse sequence: spin-selective split, projective charge
    detection by the QPC, and the return of the electron to the qubit dot.
    """
    state.grid.check_cell(cell)
    if state.is_busy(cell):
        raise ActiveWindowError(f"cell {cell} is inside an open bias window")
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    if np.any(np.abs(v[:, 1:]) > NORM_TOL):
        raise ChargeNotAtQubitDotError(f"electron of cell {cell} is not in its qubit dot")
    split = single_cell_split(state, cell, direction, +1, spin_selective=True)
    d1, d2 = split.open_cells[cell]
    sv = cell_view(split.amplitudes, split.n_cells, [cell])
    p_moved = min(max(float(np.sum(np.abs(sv[:, [d1, d2]]) ** 2)), 0.0), 1.0)
    # snap certain outcomes so the impossible branch is never normalized
    if p_moved < BRANCH_TOL:
        p_moved = 0.0
    elif p_moved > 1.0 - BRANCH_TOL:
        p_moved = 1.0

    posts = []
    for moved, prob in ((False, 1.0 - p_moved), (True, p_moved)):
        if prob <= 0:
            posts.append(None)
            continue
        branch = sv.copy()
        if moved:
            branch[:, DotSite.Q] = 0
        else:
            branch[:, [d1, d2]] = 0
        projected = split.evolve(from_cell_view(branch, split.n_cells, [cell]) / math.sqrt(prob))
        posts.append(single_cell_return(projected, cell))
    return p_moved, posts[0], posts[1]


@dataclass(frozen=True)
class QpcTrace:
    sample_rate: float
    samples: np.ndarray
    event_window: tuple[int, int] | None  # [start, end) sample indices

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time_s", "current"])
        for t, i in zip(self.times, self.samples):
            writer.writerow([repr(float(t)), repr(float(i))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def synthesize_trace(
    record: MeasurementRecord,
    sample_rate: float = 10e9,
    noise_floor_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
    *,
    n_samples: int = 200,
    baseline: float = 1.0,
    step_depth: float = 0.2,
    window: tuple[float, float] = (0.3, 0.7),
) -> QpcTrace:
    """Synthetic I_QPC samples for one readout.

    Outcome 1 drops the current by ``step_depth`` while the electron sits in
    the ancilla dots (the fraction ``window`` of the trace).
    """
    samples = np.full(n_samples, baseline, dtype=float)
    event = None
    if record.outcome == 1:
        event = (int(round(window[0] * n_samples)), int(round(window[1] * n_samples)))
        samples[event[0]:event[1]] -= step_depth
    if noise_floor_sigma > 0:
        if rng is None:
            raise ValueError("a noisy trace needs an rng")
        samples = samples + rng.normal(0.0, noise_floor_sigma, n_samples)
    return QpcTrace(sample_rate, samples, event)


def detect_event(trace: QpcTrace, step_depth: float = 0.2, baseline: float | None = None) -> tuple[int, int] | None:
    """Half-depth threshold detector; returns the [start, end) window or None."""
    if baseline is None:
        baseline = float(np.median(trace.samples))
    below = np.flatnonzero(trace.samples < baseline - step_depth / 2)
    if below.size == 0:
        return None
    return int(below[0]), int(below[-1]) + 1
