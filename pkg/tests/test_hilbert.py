import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freespin import errors
from freespin.device import qca_split, spin_rotate
from freespin.hilbert import (
    CellBasisLabel,
    Direction,
    DotSite,
    Grid,
    QcaPair,
    RegisterState,
    amplitude,
    basis_index,
    check_density_matrix,
    concurrence,
    fidelity,
    new_register,
    reduced_spin_density,
    reference_states,
    spin_product_state,
    spin_register,
)

from oracles import S2, index, pure_concurrence, spins_at, vec


def test_dot_site_has_five_values_and_round_trips():
    assert [d.name for d in DotSite] == ["Q", "A", "B", "C", "D"]
    for d in DotSite:
        assert DotSite.parse(d.name) is d
        assert DotSite.parse(int(d)) is d


def test_local_dimension_is_ten():
    labels = {CellBasisLabel(s, d).local_index for s in (0, 1) for d in DotSite}
    assert labels == set(range(10))


def test_basis_order_matches_index_arithmetic():
    for s0, d0, s1, d1 in itertools.product((0, 1), DotSite, (0, 1), DotSite):
        want = index(f"{s0}{d0.name}", f"{s1}{d1.name}")
        assert basis_index([(s0, d0), (s1, d1)]) == want


def test_new_register_single_cell():
    st1 = new_register(1, (1, 1))
    assert amplitude(st1, [(0, "Q")]) == 1
    assert np.count_nonzero(st1.amplitudes) == 1


def test_new_register_two_cells_is_all_zero_at_q():
    st2 = new_register(2, (1, 2))
    np.testing.assert_array_equal(st2.amplitudes, vec(2, {("0Q", "0Q"): 1}))


def test_new_register_grid_mismatch():
    with pytest.raises(errors.GridMismatchError):
        new_register(2, (3, 1))


def test_new_register_zero_cells():
    with pytest.raises(errors.ZeroCellsError):
        new_register(0)


def test_amplitude_queries():
    st2 = new_register(2)
    assert amplitude(st2, [(0, "Q"), (0, "Q")]) == 1 + 0j
    assert amplitude(st2, [(1, "Q"), (0, "Q")]) == 0
    with pytest.raises(errors.LabelLengthMismatchError):
        amplitude(st2, [(0, "Q")])


def test_amplitude_after_split():
    split = qca_split(spin_product_state([0, 1]), 0, 1, "LR")
    assert abs(amplitude(split, [(0, "C"), (1, "B")]) - S2) < 1e-12
    assert abs(amplitude(split, [(0, "D"), (1, "A")]) - S2) < 1e-12


def test_fidelity_basics():
    a = spin_product_state([0, 1])
    b = spin_product_state([1, 0])
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity(a, b) == 0.0
    with pytest.raises(errors.DimensionMismatchError):
        fidelity(a, new_register(1))


def test_fidelity_is_symmetric():
    rng = np.random.default_rng(3)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    w = rng.normal(size=4) + 1j * rng.normal(size=4)
    a, b = spin_register(v), spin_register(w)
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-15)
    want = abs(np.vdot(v, w)) ** 2 / (np.vdot(v, v).real * np.vdot(w, w).real)
    assert fidelity(a, b) == pytest.approx(want, abs=1e-12)


def test_grid_adjacency_and_directions():
    g = Grid(2, 2)
    assert g.direction_between(0, 1) is Direction.LR
    assert g.direction_between(0, 2) is Direction.TB
    with pytest.raises(errors.NotAdjacentError):
        g.direction_between(0, 3)
    with pytest.raises(errors.SameCellError):
        g.direction_between(1, 1)


def test_qca_pair_diagonals():
    lr = QcaPair.between(Grid.line(2), 1, 0)
    assert (lr.cell_lo, lr.cell_hi) == (0, 1)
    assert lr.minus_state == (DotSite.C, DotSite.B)
    assert lr.plus_state == (DotSite.D, DotSite.A)
    tb = QcaPair.between(Grid(2, 1), 0, 1)
    assert tb.direction is Direction.TB
    assert tb.minus_state == (DotSite.B, DotSite.C)
    assert tb.plus_state == (DotSite.D, DotSite.A)


def test_reduced_density_of_product_state():
    rho = reduced_spin_density(new_register(2), (0, 1))
    np.testing.assert_allclose(rho, np.diag([1, 0, 0, 0]), atol=1e-15)


def test_reduced_density_of_bell_state():
    psi = np.array([0, S2, -S2, 0])
    rho = reduced_spin_density(spin_register(psi), (0, 1))
    np.testing.assert_allclose(rho, np.outer(psi, psi.conj()), atol=1e-12)


def test_reduced_density_during_split_is_pure_product():
    split = qca_split(spin_product_state([0, 1]), 0, 1)
    rho = reduced_spin_density(split, (0, 1))
    np.testing.assert_allclose(rho, np.diag([0, 1, 0, 0]), atol=1e-12)


def test_reduced_density_traces_out_other_cells():
    # |0>|+>|1> on three cells; pair (2, 0) orders rows by cell 2 then cell 0
    st3 = spin_product_state([0, "+", 1])
    rho = reduced_spin_density(st3, (2, 0))
    np.testing.assert_allclose(rho, np.diag([0, 0, 1, 0]), atol=1e-12)


def test_reduced_density_errors():
    st2 = new_register(2)
    with pytest.raises(errors.IndexOutOfRangeError):
        reduced_spin_density(st2, (0, 2))
    with pytest.raises(errors.DuplicateIndexError):
        reduced_spin_density(st2, (1, 1))


@pytest.mark.parametrize(
    "rho, want",
    [
        (np.diag([1, 0, 0, 0]), 0.0),
        (np.eye(4) / 4, 0.0),
    ],
)
def test_concurrence_trivial(rho, want):
    assert concurrence(rho.astype(complex)) == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("name", ["bell_psi_minus", "bell_psi_plus", "bell_phi_minus", "bell_phi_plus"])
def test_concurrence_of_bell_projectors(name):
    ref = reference_states(Grid.line(2))[name]
    rho = reduced_spin_density(ref, (0, 1))
    assert concurrence(rho) == pytest.approx(1.0, abs=1e-9)


def test_concurrence_rejects_non_density():
    with pytest.raises(errors.NotADensityMatrixError):
        concurrence(np.diag([1, 1, 0, 0]).astype(complex))
    with pytest.raises(errors.NotADensityMatrixError):
        concurrence(np.diag([1.5, -0.5, 0, 0]).astype(complex))


_cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(_cplx, min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_concurrence_matches_pure_state_formula(v):
    psi = np.array(v) / np.linalg.norm(v)
    rho = np.outer(psi, psi.conj())
    assert concurrence(rho) == pytest.approx(pure_concurrence(psi), abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(_cplx, min_size=2, max_size=2), st.lists(_cplx, min_size=2, max_size=2))
def test_product_states_have_zero_concurrence(a, b):
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
        return
    state = spin_product_state([np.array(a), np.array(b)])
    assert concurrence(reduced_spin_density(state, (0, 1))) == pytest.approx(0.0, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("xyz"), st.integers(0, 2), st.floats(-7, 7)), max_size=6))
def test_norm_and_density_invariants_under_rotations(ops):
    state = spin_product_state(["+", 0, 1])
    for axis, cell, angle in ops:
        state = spin_rotate(state, cell, axis, angle)
    assert abs(state.norm() - 1) < 1e-12
    assert np.sum(np.abs(state.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)
    check_density_matrix(reduced_spin_density(state, (0, 2)))


def test_state_json_round_trip():
    split = qca_split(spin_product_state(["+", 1]), 0, 1)
    data = json.loads(split.to_json())
    assert set(data) >= {"n_cells", "grid", "amplitudes"}
    assert len(data["amplitudes"]) == 100
    back = RegisterState.from_json(split.to_json())
    np.testing.assert_array_equal(back.amplitudes, split.amplitudes)
    assert back.active_pairs == split.active_pairs


def test_spin_register_embeds_with_charge_at_q():
    psi = np.array([0, S2, -S2, 0])
    np.testing.assert_allclose(spin_register(psi).amplitudes, spins_at(2, psi), atol=1e-15)


def test_reference_states_cover_bell_and_basis():
    refs = reference_states(Grid.line(2))
    assert {"bell_psi_minus", "bell_phi_plus", "basis_00", "basis_11"} <= set(refs)
    np.testing.assert_allclose(refs["basis_10"].amplitudes, vec(2, {("1Q", "0Q"): 1}))
