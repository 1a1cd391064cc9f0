import json
import math

import numpy as np
import pytest

from freespin import errors
from freespin.compiler import (
    BellKind,
    Gate,
    compile_bell,
    compile_circuit,
    compile_cnot,
    compile_single,
    load_circuit,
    unitary_of_schedule,
)
from freespin.dsl import parse, serialize
from freespin.hilbert import (
    DotSite,
    Grid,
    charge_off_q_weight,
    concurrence,
    fidelity,
    reduced_spin_density,
    spin_product_state,
    spin_register,
)
from freespin.schedule import BiasOff, BiasOn, Polarization, Rotation, Schedule, ScheduleSemanticError
from freespin.simulate import run_schedule

from oracles import CNOT, HADAMARD, S2, cnot_oracle, equal_up_to_phase, rot, spins_at

BELL = {
    BellKind.PSI_MINUS: [0, S2, -S2, 0],
    BellKind.PSI_PLUS: [0, S2, S2, 0],
    BellKind.PHI_MINUS: [S2, 0, 0, -S2],
    BellKind.PHI_PLUS: [S2, 0, 0, S2],
}


@pytest.mark.parametrize("kind", list(BellKind))
def test_bell_prep_from_00(kind):
    sched = compile_bell(kind, 0, 1)
    out = run_schedule(sched).state
    want = spins_at(2, np.array(BELL[kind]) * sched.metadata["global_phase"])
    np.testing.assert_allclose(out.amplitudes, want, atol=1e-10)
    rho = reduced_spin_density(out, (0, 1))
    assert concurrence(rho) == pytest.approx(1.0, abs=1e-9)


def test_psi_minus_schedule_structure():
    sched = compile_bell("psi-", 0, 1)
    assert sched.events == (
        Rotation(1, "x", math.pi),
        BiasOn(0, 1, "LR"),
        Rotation(0, "x", math.pi, DotSite.D),
        Rotation(1, "x", math.pi, DotSite.A),
        BiasOff(0, 1, "LR"),
    )
    assert sched.metadata["global_phase"] == -1j


def test_phi_plus_uses_three_pi():
    sched = compile_bell("phi+", 0, 1)
    assert sched.events[2] == Rotation(1, "x", 3 * math.pi, DotSite.A)
    out = run_schedule(sched).state
    np.testing.assert_allclose(out.amplitudes, spins_at(2, [S2, 0, 0, S2]), atol=1e-10)


def test_bell_on_same_cell_is_rejected():
    with pytest.raises(errors.NotAdjacentError):
        compile_bell("psi-", 0, 0)


@pytest.mark.parametrize(
    "grid, i, j",
    [(Grid.line(2), 1, 0), (Grid(2, 1), 0, 1), (Grid(2, 1), 1, 0), (Grid(2, 2), 1, 3), (Grid.line(3), 2, 1)],
)
@pytest.mark.parametrize("kind", list(BellKind))
def test_bell_in_other_orientations(grid, i, j, kind):
    sched = compile_bell(kind, i, j, grid)
    out = run_schedule(sched).state
    rho = reduced_spin_density(out, (i, j))
    target = np.array(BELL[kind])
    assert np.real(target.conj() @ rho @ target) == pytest.approx(1.0, abs=1e-10)
    assert sched.metadata["mirrored"]


def test_cnot_schedule_structure():
    sched = compile_cnot(0, 1)
    assert sched.events == (
        BiasOn(0, 1, "LR"),
        Polarization(0, 1, math.pi / 2),
        Rotation(0, "z", math.pi / 2, DotSite.C),
        Rotation(0, "z", 3 * math.pi / 2, DotSite.D),
        Rotation(1, "x", math.pi / 2, DotSite.B),
        Rotation(1, "x", 3 * math.pi / 2, DotSite.A),
        BiasOff(0, 1, "LR"),
    )
    assert not sched.metadata["mirrored"]


@pytest.mark.parametrize("bits, out", [("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")])
def test_cnot_truth_table_is_exact(bits, out):
    res = run_schedule(compile_cnot(0, 1), spin_product_state(list(bits)))
    np.testing.assert_allclose(res.state.amplitudes, spin_product_state(list(out)).amplitudes, atol=1e-12)


def test_cnot_on_superposition_makes_bell_state():
    res = run_schedule(compile_cnot(0, 1), spin_register(np.array([S2, 0, S2, 0])))
    np.testing.assert_allclose(res.state.amplitudes, spins_at(2, [S2, 0, 0, S2]), atol=1e-12)


def test_cnot_unitary_matches_canonical_and_oracle():
    u = unitary_of_schedule(compile_cnot(0, 1), (0, 1))
    assert np.max(np.abs(u.matrix - CNOT)) < 1e-10
    assert abs(u.global_phase) < 1e-10
    assert np.max(np.abs(u.raw - cnot_oracle())) < 1e-10


@pytest.mark.parametrize(
    "grid, control, target",
    [(Grid.line(2), 1, 0), (Grid(2, 1), 0, 1), (Grid(2, 1), 1, 0), (Grid(2, 3), 4, 1)],
)
def test_mirrored_cnot_is_cnot(grid, control, target):
    sched = compile_cnot(control, target, grid)
    u = unitary_of_schedule(sched, (control, target))
    assert np.max(np.abs(u.matrix - CNOT)) < 1e-10
    assert sched.metadata["mirrored"]


def test_cnot_errors():
    with pytest.raises(errors.SameCellError):
        compile_cnot(1, 1)
    with pytest.raises(errors.NotAdjacentError):
        compile_cnot(0, 2, Grid.line(3))
    with pytest.raises(errors.NotAdjacentError):
        compile_cnot(0, 5, Grid.line(2))


def test_compile_single():
    sched = compile_single("x", math.pi, 0)
    assert sched.events == (Rotation(0, "x", math.pi),)
    assert compile_single("z", math.pi / 2, 1).events == (Rotation(1, "z", math.pi / 2),)


def test_zxz_circuit_is_hadamard():
    gates = [Gate("RotZ", (0,), math.pi / 2), Gate("RotX", (0,), math.pi / 2), Gate("RotZ", (0,), math.pi / 2)]
    u = unitary_of_schedule(compile_circuit(gates), 0)
    assert equal_up_to_phase(u.matrix, HADAMARD, 1e-12)


def test_circuit_of_one_rotation_equals_compile_single():
    assert compile_circuit([Gate("RotX", (0,), math.pi)]).events == compile_single("x", math.pi, 0).events


def test_hadamard_then_cnot_gives_phi_plus():
    h = [Gate("RotZ", (0,), math.pi / 2), Gate("RotX", (0,), math.pi / 2), Gate("RotZ", (0,), math.pi / 2)]
    sched = compile_circuit(h + [Gate("CNOT", (0, 1))])
    out = run_schedule(sched).state
    assert fidelity(out, spin_register(np.array([S2, 0, 0, S2]))) == pytest.approx(1.0, abs=1e-10)


def test_cnot_squared_is_identity():
    sched = compile_circuit([Gate("CNOT", (0, 1)), Gate("CNOT", (0, 1))])
    for bits in ("00", "01", "10", "11"):
        out = run_schedule(sched, spin_product_state(list(bits))).state
        assert fidelity(out, spin_product_state(list(bits))) == pytest.approx(1.0, abs=1e-12)


def test_circuit_errors_carry_gate_index():
    with pytest.raises(errors.GateError) as info:
        compile_circuit([Gate("RotX", (0,), 1.0), Gate("CNOT", (0, 2))], grid=Grid.line(3))
    assert info.value.index == 1
    assert isinstance(info.value.cause, errors.NotAdjacentError)


def test_load_circuit_parses_records():
    text = json.dumps(
        [
            {"kind": "RotY", "operands": [1], "angle": "pi/2"},
            {"kind": "BellPrep", "operands": [0, 1], "bell": "phi+"},
            {"kind": "CNOT", "operands": [1, 0]},
        ]
    )
    gates = load_circuit(text)
    assert gates[0].angle == pytest.approx(math.pi / 2)
    assert gates[1].bell is BellKind.PHI_PLUS
    with pytest.raises(errors.GateError):
        load_circuit('[{"kind": "Toffoli", "operands": [0, 1, 2]}]')


def test_empty_circuit():
    sched = compile_circuit([], n_cells=2)
    assert sched.events == () and sched.n_cells == 2
    u = unitary_of_schedule(Schedule(2, ()), (0, 1))
    np.testing.assert_allclose(u.matrix, np.eye(4), atol=1e-15)


def test_bell_map_is_not_unitary():
    sched = Schedule(2, compile_bell("psi-", 0, 1).events[1:])
    with pytest.raises(errors.NonUnitaryScheduleError):
        unitary_of_schedule(sched, (0, 1))
    m = unitary_of_schedule(sched, (0, 1), require_unitary=False).raw
    # on |01> the map yields psi-
    np.testing.assert_allclose(m @ [0, 1, 0, 0], [0, S2, -S2, 0], atol=1e-12)


def test_unitary_rejects_open_window():
    sched = Schedule(2, (BiasOn(0, 1, "LR"),))
    with pytest.raises(ScheduleSemanticError, match="UnclosedWindow"):
        unitary_of_schedule(sched, (0, 1))


def test_compiled_schedules_return_charge_to_q():
    for sched in (compile_cnot(0, 1), compile_bell("phi-", 0, 1)):
        out = run_schedule(sched).state
        assert charge_off_q_weight(out, 0) < 1e-24 and charge_off_q_weight(out, 1) < 1e-24


def test_compile_serialize_parse_run_agrees():
    sched = compile_circuit([Gate("RotY", (0,), 0.3), Gate("CNOT", (0, 1)), Gate("BellPrep", (1, 2), bell="psi+")])
    again = parse(serialize(sched))
    a = run_schedule(sched).state.amplitudes
    b = run_schedule(again).state.amplitudes
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_single_qubit_oracle_rotation_y():
    u = unitary_of_schedule(compile_single("y", 0.9, 0), 0)
    assert equal_up_to_phase(u.matrix, rot("y", 0.9), 1e-12)
