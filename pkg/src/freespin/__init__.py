"""Pulse-level simulator and gate compiler for free-spin quantum computation in QCA-coupled quantum-dot cells."""
from .compiler import BellKind, Gate, compile_bell, compile_circuit, compile_cnot, compile_single, unitary_of_schedule
from .config import DeviceConfig, NoiseParams, load_config
from .device import (
    MergeMode,
    polarization_pulse,
    qca_merge,
    qca_split,
    single_cell_return,
    single_cell_split,
    spin_rotate,
    spin_rotate_conditional,
)
from .dsl import parse, serialize
from .hilbert import (
    CellBasisLabel,
    Direction,
    DotSite,
    Grid,
    QcaPair,
    RegisterState,
    amplitude,
    concurrence,
    fidelity,
    new_register,
    reduced_spin_density,
)
from .noise import apply_trajectory_noise, dephasing_prob, estimate_gate_error
from .readout import measure_z, synthesize_trace
from .schedule import Schedule
from .simulate import TrajectoryRunner, run_schedule

__version__ = "0.1.0"
