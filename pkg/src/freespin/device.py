"""
Primitive pulse operations on a register.

Bias pulses move electrons between the qubit dot and the ancilla corners,
spin rotations act on the spin factor (optionally only where the electron sits
in a given ancilla dot), and the bias-polarization pulse phases the two
diagonals of an active QCA square.

Every function returns a new :class:`RegisterState`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChargeNotAtQubitDotError,
    DotsInUseError,
    NonUnitaryMergeError,
    PairNotActiveError,
    QcaAlreadyActiveError,
    QubitDotConditionError,
)
from .hilbert import (
    LOWERED_DOTS,
    NORM_TOL,
    Direction,
    DotSite,
    QcaPair,
    RegisterState,
    cell_view,
    from_cell_view,
)

Q = DotSite.Q
MERGE_TOL = 1e-9

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class MergeMode(enum.Enum):
    STRICT = "strict"
    POST_SELECTED = "postselected"


@dataclass(frozen=True)
class BiasPulse:
    cell: int
    direction: Direction
    sign: int
    duration: float

    @property
    def lowered(self) -> tuple[DotSite, DotSite]:
        return LOWERED_DOTS[(Direction(self.direction), self.sign)]


@dataclass(frozen=True)
class RotationPulse:
    cell: int
    axis: str
    angle: float
    condition: DotSite | None = None
    duration: float = 1e-12


@dataclass(frozen=True)
class PolarizationPulse:
    pair: QcaPair
    angle: float
    duration: float = 50e-12


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle sigma_axis / 2)."""
    if not math.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    return math.cos(angle / 2) * np.eye(2, dtype=complex) - 1j * math.sin(angle / 2) * _PAULI[axis]


def _require_at_q(state: RegisterState, cells) -> None:
    for cell in cells:
        v = cell_view(state.amplitudes, state.n_cells, [cell])
        if np.any(np.abs(v[:, 1:, :]) > NORM_TOL):
            raise ChargeNotAtQubitDotError(f"electron of cell {cell} is not in its qubit dot")


def qca_split(
    state: RegisterState,
    i: int,
    j: int,
    direction: Direction | str | None = None,
    imbalance: float = 0.0,
) -> RegisterState:
    """Bias on: |Q_lo Q_hi> -> a|minus diagonal> + b|plus diagonal>.

    ``imbalance`` gives a = sqrt((1+e)/2), b = sqrt((1-e)/2); zero is the
    identical-dot case with equal weights.
    """
    pair = QcaPair.between(state.grid, i, j, direction)
    if pair in state.active_pairs:
        raise QcaAlreadyActiveError(f"QCA square {pair} is already biased")
    for c in pair.cells:
        if state.is_busy(c):
            raise DotsInUseError(f"cell {c} already has an open bias window")
    _require_at_q(state, pair.cells)
    if not -1.0 <= imbalance <= 1.0:
        raise ValueError("imbalance must lie in [-1, 1]")
    a, b = math.sqrt((1 + imbalance) / 2), math.sqrt((1 - imbalance) / 2)

    cells = list(pair.cells)
    v = cell_view(state.amplitudes, state.n_cells, cells)
    out = np.zeros_like(v)
    (m_lo, m_hi), (p_lo, p_hi) = pair.minus_state, pair.plus_state
    src = v[:, Q, :, Q, :]
    out[:, m_lo, :, m_hi, :] = a * src
    out[:, p_lo, :, p_hi, :] = b * src
    return state.evolve(
        from_cell_view(out, state.n_cells, cells),
        active_pairs=state.active_pairs | {pair},
    )


def qca_merge(
    state: RegisterState,
    i: int,
    j: int,
    mode: MergeMode = MergeMode.STRICT,
    direction: Direction | str | None = None,
) -> tuple[RegisterState, float]:
    """Bias off: both diagonals of the QCA square return to |Q_lo Q_hi>.

    Each branch is carried back with unit weight and the spin amplitudes of the
    two branches add. This is norm preserving exactly when the branch spin
    states are (real-part) orthogonal, which is what the charge-to-spin
    conversion protocols arrange; otherwise the returned ``success_prob`` (the
    squared norm of the result) differs from one. STRICT mode raises in that
    case, POST_SELECTED renormalizes.
    """
    pair = QcaPair.between(state.grid, i, j, direction)
    if pair not in state.active_pairs:
        raise PairNotActiveError(f"QCA square {pair} is not biased")
    cells = list(pair.cells)
    v = cell_view(state.amplitudes, state.n_cells, cells)
    (m_lo, m_hi), (p_lo, p_hi) = pair.minus_state, pair.plus_state
    out = np.zeros_like(v)
    out[:, Q, :, Q, :] = v[:, m_lo, :, m_hi, :] + v[:, p_lo, :, p_hi, :]
    amps = from_cell_view(out, state.n_cells, cells)
    norm_sq = float(np.vdot(amps, amps).real)
    prior = float(np.vdot(state.amplitudes, state.amplitudes).real)
    success_prob = norm_sq / prior
    if mode is MergeMode.STRICT and abs(success_prob - 1) > MERGE_TOL:
        raise NonUnitaryMergeError(success_prob)
    if norm_sq == 0.0:
        raise NonUnitaryMergeError(0.0)
    return state.evolve(amps / math.sqrt(norm_sq), active_pairs=state.active_pairs - {pair}), success_prob


def spin_rotate_conditional(
    state: RegisterState, cell: int, dot: DotSite | str, axis: str, angle: float
) -> RegisterState:
    """Rotate the spin of ``cell`` only on the branch where its electron sits in ``dot``."""
    dot = DotSite.parse(dot)
    if dot is Q:
        raise QubitDotConditionError("conditional rotations must target an ancilla dot")
    state.grid.check_cell(cell)
    r = rotation_matrix(axis, angle)
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    v[:, dot, :] = np.tensordot(r, v[:, dot, :], axes=1)
    return state.evolve(from_cell_view(v, state.n_cells, [cell]))


def spin_rotate(state: RegisterState, cell: int, axis: str, angle: float) -> RegisterState:
    state.grid.check_cell(cell)
    r = rotation_matrix(axis, angle)
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    v = np.tensordot(r, v, axes=1)
    return state.evolve(from_cell_view(v, state.n_cells, [cell]))


def apply_spin_operator(state: RegisterState, cell: int, op: np.ndarray) -> RegisterState:
    """Apply a (not necessarily unitary) 2x2 operator to a cell's spin at every site."""
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    v = np.tensordot(np.asarray(op, dtype=complex), v, axes=1)
    return state.evolve(from_cell_view(v, state.n_cells, [cell]))


def polarization_pulse(
    state: RegisterState, pair: QcaPair, angle: float
) -> RegisterState:
    """exp(-i angle P / 2): minus diagonal gains e^{+i angle/2}, plus diagonal e^{-i angle/2}."""
    if pair not in state.active_pairs:
        raise PairNotActiveError(f"QCA square {pair} is not biased")
    cells = list(pair.cells)
    v = cell_view(state.amplitudes, state.n_cells, cells)
    (m_lo, m_hi), (p_lo, p_hi) = pair.minus_state, pair.plus_state
    v[:, m_lo, :, m_hi, :] *= np.exp(0.5j * angle)
    v[:, p_lo, :, p_hi, :] *= np.exp(-0.5j * angle)
    return state.evolve(from_cell_view(v, state.n_cells, cells))


def single_cell_split(
    state: RegisterState,
    cell: int,
    direction: Direction | str = Direction.LR,
    sign: int = +1,
    spin_selective: bool = True,
) -> RegisterState:
    """Lower two ancilla dots of one cell.

    With ``spin_selective`` only the |1> component tunnels, into an equal
    superposition of the two lowered dots; |0> stays in the qubit dot.
    """
    state.grid.check_cell(cell)
    if state.is_busy(cell):
        raise DotsInUseError(f"cell {cell} already has an open bias window")
    _require_at_q(state, [cell])
    d1, d2 = LOWERED_DOTS[(Direction(direction), sign)]
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    out = v.copy()
    moving = [1] if spin_selective else [0, 1]
    s = 1 / math.sqrt(2)
    for spin in moving:
        out[spin, d1] = s * v[spin, Q]
        out[spin, d2] = s * v[spin, Q]
        out[spin, Q] = 0
    open_cells = dict(state.open_cells)
    open_cells[cell] = (d1, d2)
    return state.evolve(from_cell_view(out, state.n_cells, [cell]), open_cells=open_cells)


def single_cell_return(state: RegisterState, cell: int) -> RegisterState:
    """Bias off for a single-cell split; the exact inverse of :func:`single_cell_split`."""
    if cell not in state.open_cells:
        raise PairNotActiveError(f"cell {cell} has no open single-cell split")
    d1, d2 = state.open_cells[cell]
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    s = 1 / math.sqrt(2)
    v[:, Q] = v[:, Q] + s * (v[:, d1] + v[:, d2])
    v[:, d1] = 0
    v[:, d2] = 0
    amps = from_cell_view(v, state.n_cells, [cell])
    norm = np.linalg.norm(amps)
    open_cells = {c: d for c, d in state.open_cells.items() if c != cell}
    return state.evolve(amps / norm, open_cells=open_cells)
