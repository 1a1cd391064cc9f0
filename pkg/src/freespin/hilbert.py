"""
Joint spin x charge state of an N-cell register.

Every cell holds one excess electron whose local basis is (spin, site) with
spin in {0, 1} and site in {Q, A, B, C, D}; the local dimension is 10.

Basis ordering is cell-major (cell 0 is the most significant digit); inside
a cell the local index is ``spin * 5 + site`` with sites ordered Q, A, B, C, D.
So the flat index of a label ``[(s0, x0), (s1, x1), ...]`` is

    sum_k (5 * s_k + x_k) * 10 ** (n_cells - 1 - k)

Corner dots: A top-left, B bottom-left, C top-right, D bottom-right.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIndexError,
    GridMismatchError,
    IndexOutOfRangeError,
    LabelLengthMismatchError,
    NotADensityMatrixError,
    NotAdjacentError,
    SameCellError,
    ZeroCellsError,
)

N_SPIN = 2
N_SITE = 5
LOCAL_DIM = N_SPIN * N_SITE

NORM_TOL = 1e-12
DENSITY_TOL = 1e-9


class DotSite(enum.IntEnum):
    Q = 0
    A = 1
    B = 2
    C = 3
    D = 4

    @classmethod
    def parse(cls, value: "DotSite | str | int") -> "DotSite":
        if isinstance(value, DotSite):
            return value
        if isinstance(value, str):
            try:
                return cls[value]
            except KeyError:
                raise ValueError(f"unknown dot site {value!r}") from None
        return cls(value)


ANCILLA_DOTS = (DotSite.A, DotSite.B, DotSite.C, DotSite.D)


class Direction(str, enum.Enum):
    LR = "LR"
    TB = "TB"


# Dots lowered by a bias pulse: (direction, sign) -> two ancilla dots.
LOWERED_DOTS: dict[tuple[Direction, int], tuple[DotSite, DotSite]] = {
    (Direction.LR, +1): (DotSite.C, DotSite.D),
    (Direction.LR, -1): (DotSite.A, DotSite.B),
    (Direction.TB, +1): (DotSite.B, DotSite.D),
    (Direction.TB, -1): (DotSite.A, DotSite.C),
}


@dataclass(frozen=True)
class CellBasisLabel:
    spin: int
    site: DotSite

    def __post_init__(self):
        if self.spin not in (0, 1):
            raise ValueError(f"spin must be 0 or 1, got {self.spin!r}")
        object.__setattr__(self, "site", DotSite.parse(self.site))

    @property
    def local_index(self) -> int:
        return self.spin * N_SITE + int(self.site)


@dataclass(frozen=True)
class Grid:
    """Rectangular cell layout; cell index = row * cols + col."""

    rows: int
    cols: int

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @classmethod
    def line(cls, n_cells: int) -> "Grid":
        return cls(1, n_cells)

    def position(self, cell: int) -> tuple[int, int]:
        self.check_cell(cell)
        return divmod(cell, self.cols)

    def check_cell(self, cell: int) -> None:
        if not 0 <= cell < self.n_cells:
            raise IndexOutOfRangeError(f"cell {cell} outside register of {self.n_cells} cells")

    def direction_between(self, i: int, j: int) -> Direction:
        """Direction of the QCA square shared by cells ``i`` and ``j``."""
        if i == j:
            raise SameCellError(f"cells {i} and {j} are the same cell")
        (ri, ci), (rj, cj) = self.position(i), self.position(j)
        if ri == rj and abs(ci - cj) == 1:
            return Direction.LR
        if ci == cj and abs(ri - rj) == 1:
            return Direction.TB
        raise NotAdjacentError(f"cells {i} and {j} are not grid neighbours")

    def ordered(self, i: int, j: int, direction: Direction) -> tuple[int, int]:
        """Return (left/top, right/bottom) after checking adjacency along ``direction``."""
        direction = Direction(direction)
        if self.direction_between(i, j) is not direction:
            raise NotAdjacentError(f"cells {i} and {j} are not adjacent along {direction.value}")
        return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class QcaPair:
    """An inter-cell QCA square between ``cell_lo`` (left/top) and ``cell_hi``."""

    cell_lo: int
    cell_hi: int
    direction: Direction

    @classmethod
    def between(cls, grid: Grid, i: int, j: int, direction: Direction | str | None = None) -> "QcaPair":
        if direction is None:
            direction = grid.direction_between(i, j)
        direction = Direction(direction)
        lo, hi = grid.ordered(i, j, direction)
        return cls(lo, hi, direction)

    @property
    def cells(self) -> tuple[int, int]:
        return (self.cell_lo, self.cell_hi)

    @property
    def minus_state(self) -> tuple[DotSite, DotSite]:
        # LR: (C_lo, B_hi); TB is the transpose of the LR geometry, swapping B and C.
        if self.direction is Direction.LR:
            return (DotSite.C, DotSite.B)
        return (DotSite.B, DotSite.C)

    @property
    def plus_state(self) -> tuple[DotSite, DotSite]:
        return (DotSite.D, DotSite.A)

    def lowered(self, cell: int) -> tuple[DotSite, DotSite]:
        if cell == self.cell_lo:
            return LOWERED_DOTS[(self.direction, +1)]
        if cell == self.cell_hi:
            return LOWERED_DOTS[(self.direction, -1)]
        raise IndexOutOfRangeError(f"cell {cell} is not part of {self}")


@dataclass(frozen=True)
class RegisterState:
    """Dense amplitude vector plus the bookkeeping of open bias windows.

    ``active_pairs`` holds QCA squares whose bias is on; ``open_cells`` maps a
    cell with an open single-cell split to its two lowered dots.
    """

    grid: Grid
    amplitudes: np.ndarray
    active_pairs: frozenset[QcaPair] = frozenset()
    open_cells: Mapping[int, tuple[DotSite, DotSite]] = field(default_factory=dict)

    def __post_init__(self):
        if self.amplitudes.shape != (LOCAL_DIM**self.grid.n_cells,):
            raise DimensionMismatchError(
                f"expected {LOCAL_DIM**self.grid.n_cells} amplitudes, got {self.amplitudes.shape}"
            )

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def evolve(self, amplitudes: np.ndarray, **changes) -> "RegisterState":
        return replace(self, amplitudes=amplitudes, **changes)

    def pair_of(self, cell: int) -> QcaPair | None:
        for pair in self.active_pairs:
            if cell in pair.cells:
                return pair
        return None

    def is_busy(self, cell: int) -> bool:
        return self.pair_of(cell) is not None or cell in self.open_cells

    def to_dict(self) -> dict:
        out = {
            "n_cells": self.n_cells,
            "grid": [self.grid.rows, self.grid.cols],
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }
        if self.active_pairs:
            out["active_pairs"] = sorted(
                [p.cell_lo, p.cell_hi, p.direction.value] for p in self.active_pairs
            )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "RegisterState":
        grid = Grid(*data["grid"])
        if grid.n_cells != data["n_cells"]:
            raise GridMismatchError(f"grid {grid} does not hold {data['n_cells']} cells")
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]], dtype=complex)
        pairs = frozenset(QcaPair(lo, hi, Direction(d)) for lo, hi, d in data.get("active_pairs", []))
        return cls(grid, amps, pairs)

    @classmethod
    def from_json(cls, text: str) -> "RegisterState":
        return cls.from_dict(json.loads(text))


def _as_grid(n_cells: int, grid: Grid | tuple[int, int] | None) -> Grid:
    if n_cells < 1:
        raise ZeroCellsError("a register needs at least one cell")
    if grid is None:
        return Grid.line(n_cells)
    if not isinstance(grid, Grid):
        grid = Grid(*grid)
    if grid.rows < 1 or grid.cols < 1 or grid.n_cells != n_cells:
        raise GridMismatchError(f"{grid.rows}x{grid.cols} grid does not hold {n_cells} cells")
    return grid


def basis_index(labels: Sequence[CellBasisLabel | tuple[int, DotSite | str]]) -> int:
    index = 0
    for label in labels:
        if not isinstance(label, CellBasisLabel):
            label = CellBasisLabel(*label)
        index = index * LOCAL_DIM + label.local_index
    return index


def new_register(n_cells: int, grid: Grid | tuple[int, int] | None = None) -> RegisterState:
    """All spins |0>, every electron in its qubit dot."""
    grid = _as_grid(n_cells, grid)
    amps = np.zeros(LOCAL_DIM**n_cells, dtype=complex)
    amps[0] = 1.0
    return RegisterState(grid, amps)


def spin_product_state(
    spins: Sequence[np.ndarray | Sequence[complex] | int | str],
    grid: Grid | tuple[int, int] | None = None,
) -> RegisterState:
    """Product of per-cell spin states with all charges at Q.

    Each entry is a 2-vector, a bit (0/1) or one of ``"+"``/``"-"``.
    """
    grid = _as_grid(len(spins), grid)
    amps = np.ones(1, dtype=complex)
    for s in spins:
        amps = np.kron(amps, _charge_q(_spin_vector(s)))
    return RegisterState(grid, amps / np.linalg.norm(amps))


def spin_register(
    spin_amplitudes: np.ndarray, grid: Grid | tuple[int, int] | None = None
) -> RegisterState:
    """Embed a 2**n spin vector (cell 0 most significant) with all charges at Q."""
    spin_amplitudes = np.asarray(spin_amplitudes, dtype=complex)
    n = int(round(np.log2(spin_amplitudes.size)))
    if 2**n != spin_amplitudes.size:
        raise DimensionMismatchError("spin vector length must be a power of two")
    grid = _as_grid(n, grid)
    t = np.zeros((N_SPIN, N_SITE) * n, dtype=complex)
    spins = spin_amplitudes.reshape((N_SPIN,) * n)
    t[tuple(slice(None) if k % 2 == 0 else 0 for k in range(2 * n))] = spins
    return RegisterState(grid, t.reshape(-1) / np.linalg.norm(spin_amplitudes))


def _spin_vector(s) -> np.ndarray:
    if isinstance(s, str):
        return {
            "0": np.array([1, 0], dtype=complex),
            "1": np.array([0, 1], dtype=complex),
            "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
            "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
        }[s]
    if isinstance(s, (int, np.integer)):
        return np.eye(2, dtype=complex)[int(s)]
    return np.asarray(s, dtype=complex)


def _charge_q(spin: np.ndarray) -> np.ndarray:
    local = np.zeros((N_SPIN, N_SITE), dtype=complex)
    local[:, DotSite.Q] = spin
    return local.reshape(-1)


def amplitude(state: RegisterState, labels: Sequence[CellBasisLabel | tuple]) -> complex:
    if len(labels) != state.n_cells:
        raise LabelLengthMismatchError(f"need {state.n_cells} labels, got {len(labels)}")
    return complex(state.amplitudes[basis_index(labels)])


def fidelity(a: RegisterState, b: RegisterState) -> float:
    if a.n_cells != b.n_cells:
        raise DimensionMismatchError(f"{a.n_cells}-cell vs {b.n_cells}-cell register")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def overlap(a: RegisterState, b: RegisterState) -> complex:
    if a.n_cells != b.n_cells:
        raise DimensionMismatchError(f"{a.n_cells}-cell vs {b.n_cells}-cell register")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


# -- local views -------------------------------------------------------------

def cell_view(amplitudes: np.ndarray, n_cells: int, cells: Sequence[int]) -> np.ndarray:
    """Copy of the amplitudes reshaped to (2, 5) * len(cells) + (rest,)."""
    t = amplitudes.reshape((LOCAL_DIM,) * n_cells)
    t = np.moveaxis(t, list(cells), list(range(len(cells))))
    return t.reshape((N_SPIN, N_SITE) * len(cells) + (-1,)).copy()


def from_cell_view(view: np.ndarray, n_cells: int, cells: Sequence[int]) -> np.ndarray:
    k = len(cells)
    t = view.reshape((LOCAL_DIM,) * k + (LOCAL_DIM,) * (n_cells - k))
    t = np.moveaxis(t, list(range(k)), list(cells))
    return np.ascontiguousarray(t).reshape(-1)


def _check_cells(state: RegisterState, cells: Iterable[int]) -> list[int]:
    cells = list(cells)
    for c in cells:
        state.grid.check_cell(c)
    if len(set(cells)) != len(cells):
        raise DuplicateIndexError(f"repeated cell index in {cells}")
    return cells


def charge_off_q_weight(state: RegisterState, cell: int) -> float:
    """Probability that the electron of ``cell`` is not in its qubit dot."""
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    return float(np.sum(np.abs(v[:, 1:, :]) ** 2))


def reduced_spin_density(state: RegisterState, cells: Sequence[int]) -> np.ndarray:
    """Spin density matrix of ``cells`` with all charge and other spins traced out."""
    cells = _check_cells(state, cells)
    k = len(cells)
    v = cell_view(state.amplitudes, state.n_cells, cells)
    # (s0, x0, s1, x1, ..., rest) -> (s0, s1, ..., x0, x1, ..., rest)
    order = [2 * m for m in range(k)] + [2 * m + 1 for m in range(k)] + [2 * k]
    m = v.transpose(order).reshape(N_SPIN**k, -1)
    return m @ m.conj().T


def check_density_matrix(rho: np.ndarray, tol: float = DENSITY_TOL) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NotADensityMatrixError(f"not a square matrix: shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise NotADensityMatrixError("matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise NotADensityMatrixError(f"trace {np.trace(rho).real:.3g} != 1")
    if np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) < -tol:
        raise NotADensityMatrixError("matrix has a negative eigenvalue")


_YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise NotADensityMatrixError(f"concurrence needs a 4x4 matrix, got {rho.shape}")
    check_density_matrix(rho)
    rho = (rho + rho.conj().T) / 2
    w, v = np.linalg.eigh(rho)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    flipped = _YY @ rho.conj() @ _YY
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(sqrt_rho @ flipped @ sqrt_rho), 0, None))
    lam = np.sort(lam)[::-1]
    return float(np.clip(lam[0] - lam[1] - lam[2] - lam[3], 0.0, 1.0))


# -- named reference states --------------------------------------------------

_S2 = 1 / np.sqrt(2)
BELL_SPIN_VECTORS: dict[str, np.ndarray] = {
    "bell_psi_minus": np.array([0, _S2, -_S2, 0], dtype=complex),
    "bell_psi_plus": np.array([0, _S2, _S2, 0], dtype=complex),
    "bell_phi_minus": np.array([_S2, 0, 0, -_S2], dtype=complex),
    "bell_phi_plus": np.array([_S2, 0, 0, _S2], dtype=complex),
}


def reference_states(grid: Grid) -> dict[str, RegisterState]:
    """Built-in targets for a register: Bell states (2 cells) and the computational basis."""
    n = grid.n_cells
    refs: dict[str, RegisterState] = {}
    if n == 2:
        for name, vec in BELL_SPIN_VECTORS.items():
            refs[name] = spin_register(vec, grid)
    if n <= 4:
        for k in range(2**n):
            bits = format(k, f"0{n}b")
            refs[f"basis_{bits}"] = spin_product_state(list(bits), grid)
    return refs
