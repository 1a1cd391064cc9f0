"""
Schedule execution: single noiseless runs and seeded Monte Carlo trajectories.

Trajectory ``k`` of a batch draws from ``numpy.random.default_rng([seed, k])``,
so results do not depend on execution order. A batch memoizes the states of
the noiseless path (keyed by event index and the measurement outcomes seen so
far); a trajectory only recomputes once noise has actually touched it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .config import DeviceConfig, NoiseParams
from .device import (
    MergeMode,
    polarization_pulse,
    qca_merge,
    qca_split,
    spin_rotate,
    spin_rotate_conditional,
)
from .errors import GridMismatchError
from .hilbert import N_SPIN, QcaPair, RegisterState, cell_view, new_register
from .noise import apply_trajectory_noise
from .readout import measurement_branches
from .schedule import (
    DEFAULT_DEVICE,
    BiasOff,
    BiasOn,
    Measure,
    Polarization,
    Rotation,
    Schedule,
    TimedEvent,
    Wait,
    timeline,
    validate,
)


@dataclass
class RunResult:
    state: RegisterState
    success_prob: float = 1.0
    measurements: dict[str, int] = field(default_factory=dict)
    noisy: bool = False


def apply_event(
    state: RegisterState,
    event,
    mode: MergeMode = MergeMode.STRICT,
    imbalance: float = 0.0,
) -> tuple[RegisterState, float]:
    """Apply one deterministic (non-measurement) event; returns (state, merge success_prob)."""
    if isinstance(event, BiasOn):
        return qca_split(state, event.lo, event.hi, event.direction, imbalance), 1.0
    if isinstance(event, BiasOff):
        return qca_merge(state, event.lo, event.hi, mode, event.direction)
    if isinstance(event, Rotation):
        if event.dot is None:
            return spin_rotate(state, event.cell, event.axis, event.angle), 1.0
        return spin_rotate_conditional(state, event.cell, event.dot, event.axis, event.angle), 1.0
    if isinstance(event, Polarization):
        pair = QcaPair.between(state.grid, event.lo, event.hi)
        return polarization_pulse(state, pair, event.angle), 1.0
    if isinstance(event, Wait):
        return state, 1.0
    raise TypeError(f"apply_event cannot handle {event!r}")


def _initial(schedule: Schedule, state: RegisterState | None) -> RegisterState:
    if state is None:
        return new_register(schedule.n_cells, schedule.grid)
    if state.n_cells != schedule.n_cells:
        raise GridMismatchError(f"schedule needs {schedule.n_cells} cells, register has {state.n_cells}")
    return state


class TrajectoryRunner:
    """Runs one schedule from one initial state, many times."""

    def __init__(
        self,
        schedule: Schedule,
        initial: RegisterState | None = None,
        noise: NoiseParams | None = None,
        config: DeviceConfig = DEFAULT_DEVICE,
        mode: MergeMode = MergeMode.STRICT,
    ):
        validate(schedule)
        self.schedule = schedule
        self.initial = _initial(schedule, initial)
        self.noise = None if noise is None or not noise.is_stochastic else noise
        self.imbalance = 0.0 if noise is None else noise.split_amplitude_imbalance
        self.mode = mode
        self.timeline: list[TimedEvent] = timeline(schedule, config)
        self._memo: dict = {}

    def run(self, rng: np.random.Generator | None = None) -> RunResult:
        if self.noise is not None and rng is None:
            raise ValueError("noisy runs need an rng")
        state = self.initial
        success = 1.0
        outcomes: dict[str, int] = {}
        history: tuple[int, ...] = ()
        clean = True

        for idx, te in enumerate(self.timeline):
            ev = te.event
            if isinstance(ev, Measure):
                if rng is None:
                    raise ValueError("schedules with measurements need an rng")
                key = (idx, history)
                branches = self._memo.get(key) if clean else None
                if branches is None:
                    branches = measurement_branches(state, ev.cell)
                    if clean:
                        self._memo[key] = branches
                p_one, post0, post1 = branches
                outcome = int(rng.random() < p_one)
                state = post1 if outcome else post0
                outcomes[ev.name] = outcome
                history += (outcome,)
            else:
                key = (idx, history)
                cached = self._memo.get(key) if clean else None
                if cached is None:
                    cached = apply_event(state, ev, self.mode, self.imbalance)
                    if clean:
                        self._memo[key] = cached
                state, p = cached
                success *= p

            if self.noise is not None:
                noisy = apply_trajectory_noise(state, te, self.noise, rng)
                if noisy is not state:
                    clean = False
                    state = noisy
        return RunResult(state, success, outcomes, noisy=not clean)

    def trajectories(self, shots: int, seed: int) -> Iterator[RunResult]:
        for k in range(shots):
            yield self.run(trajectory_rng(seed, k))


def trajectory_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, k])


def run_schedule(
    schedule: Schedule,
    state: RegisterState | None = None,
    *,
    mode: MergeMode = MergeMode.STRICT,
    noise: NoiseParams | None = None,
    config: DeviceConfig = DEFAULT_DEVICE,
    rng: np.random.Generator | None = None,
) -> RunResult:
    """Run a schedule once. Noise (if any) and measurements draw from ``rng``."""
    return TrajectoryRunner(schedule, state, noise, config, mode).run(rng)


def spin_probabilities(state: RegisterState) -> np.ndarray:
    """Computational-basis probabilities of all spins, charge traced out."""
    n = state.n_cells
    v = cell_view(state.amplitudes, n, list(range(n)))
    order = [2 * m for m in range(n)] + [2 * m + 1 for m in range(n)] + [2 * n]
    probs = np.sum(np.abs(v.transpose(order).reshape(N_SPIN**n, -1)) ** 2, axis=1)
    return probs / probs.sum()


def sample_bits(state: RegisterState, rng: np.random.Generator) -> str:
    probs = spin_probabilities(state)
    k = int(rng.choice(probs.size, p=probs))
    return format(k, f"0{state.n_cells}b")
