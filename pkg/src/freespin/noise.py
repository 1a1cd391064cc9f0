"""
Trajectory noise tied to pulse durations, and the matching analytic error budget.

Dephasing is unravelled as random sigma_z flips: over an idle time t each
touched spin flips with probability 1 - exp(-t / T2). Amplitude decay (T1)
is sampled as a quantum jump |1> -> |0>. Rotation jitter adds a Gaussian
error to the rotation angle.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .config import DeviceConfig, NoiseParams
from .device import apply_spin_operator, spin_rotate, spin_rotate_conditional
from .errors import NegativeDurationError
from .hilbert import RegisterState, cell_view
from .schedule import DEFAULT_DEVICE, BiasOff, Rotation, Schedule, TimedEvent, timeline

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |1> -> |0>
WARNING_THRESHOLD = 1e-2


def dephasing_prob(t: float, T2: float) -> float:
    if t < 0:
        raise NegativeDurationError(f"duration {t} is negative")
    if T2 <= 0:
        raise ValueError("T2 must be positive")
    return -math.expm1(-t / T2)


def decay_prob(t: float, T1: float) -> float:
    if t < 0:
        raise NegativeDurationError(f"duration {t} is negative")
    return -math.expm1(-t / T1)


def apply_trajectory_noise(
    state: RegisterState,
    event: TimedEvent,
    params: NoiseParams,
    rng: np.random.Generator,
) -> RegisterState:
    """Sample one trajectory's noise for an event that has just been applied.

    Returns ``state`` itself (same object) when nothing happened, so callers
    can detect untouched trajectories by identity.
    """
    ev = event.event
    if isinstance(ev, Rotation) and params.rotation_angle_jitter > 0:
        delta = rng.normal(0.0, params.rotation_angle_jitter)
        if ev.dot is None:
            state = spin_rotate(state, ev.cell, ev.axis, delta)
        else:
            state = spin_rotate_conditional(state, ev.cell, ev.dot, ev.axis, delta)

    if event.noise_time <= 0:
        return state
    p_phase = dephasing_prob(event.noise_time, params.T2)
    p_decay = decay_prob(event.noise_time, params.T1)
    for cell in event.noise_cells:
        if p_phase > 0 and rng.random() < p_phase:
            state = apply_spin_operator(state, cell, SIGMA_Z)
        if p_decay > 0:
            state = _amplitude_damping_jump(state, cell, p_decay, rng)
    return state


def _amplitude_damping_jump(state: RegisterState, cell: int, gamma: float, rng) -> RegisterState:
    v = cell_view(state.amplitudes, state.n_cells, [cell])
    p1 = float(np.sum(np.abs(v[1]) ** 2))
    if rng.random() < gamma * p1:
        out = apply_spin_operator(state, cell, SIGMA_MINUS)
    else:
        out = apply_spin_operator(state, cell, np.diag([1.0, math.sqrt(1.0 - gamma)]))
    return out.evolve(out.amplitudes / np.linalg.norm(out.amplitudes))


@dataclass(frozen=True)
class GateErrorEstimate:
    total: float
    breakdown: dict[str, float] = field(default_factory=dict)
    threshold: float = WARNING_THRESHOLD

    @property
    def warning(self) -> bool:
        return self.total > self.threshold

    def __float__(self) -> float:
        return self.total


def estimate_gate_error(
    schedule: Schedule,
    params: NoiseParams,
    config: DeviceConfig = DEFAULT_DEVICE,
) -> GateErrorEstimate:
    """First-order infidelity: sum of per-cell dephasing probabilities.

    Window-nested pulses cost nothing beyond their window; T1 and jitter are
    not included.
    """
    breakdown: dict[str, float] = defaultdict(float)
    for te in timeline(schedule, config):
        if te.noise_time <= 0 or not te.noise_cells:
            continue
        kind = "bias_window" if isinstance(te.event, BiasOff) else type(te.event).__name__.lower()
        breakdown[kind] += len(te.noise_cells) * dephasing_prob(te.noise_time, params.T2)
    return GateErrorEstimate(sum(breakdown.values()), dict(breakdown))
