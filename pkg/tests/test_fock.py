import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from conftest import random_density
from qndsim import tolerances as tol
from qndsim.fock import (
    ALL_MODES, METER_MODES, SIGNAL_MODES, DensityOperator, FockBasis, ModeIndex, Party,
    Polarization, basis_for, enumerate_basis, expectation, fock_state, partial_trace,
    tensor, truncated_weight, vacuum,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_mode_order_and_labels():
    assert [m.name for m in ALL_MODES] == ["SH", "SV", "MH", "MV"]
    assert ModeIndex.of(Party.METER, Polarization.V) is ModeIndex.MV
    assert ModeIndex.SV.party is Party.SIGNAL
    assert ModeIndex.MH.polarization is Polarization.H
    assert Polarization.H.orthogonal is Polarization.V


@pytest.mark.parametrize("n_modes,max_total,size", [(1, 2, 3), (2, 2, 6), (4, 2, 15), (4, 0, 1)])
def test_enumerate_basis_sizes(n_modes, max_total, size):
    assert len(enumerate_basis(n_modes, max_total)) == size


def test_enumerate_basis_order():
    assert enumerate_basis(1, 2) == [(0,), (1,), (2,)]
    assert enumerate_basis(2, 2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    states = enumerate_basis(4, 2)
    totals = [sum(s) for s in states]
    assert totals == sorted(totals)
    for t in range(3):
        grade = [s for s in states if sum(s) == t]
        assert grade == sorted(grade)


def test_enumerate_basis_is_complete_bijection():
    basis = FockBasis(ALL_MODES)
    brute = {occ for occ in itertools.product(range(3), repeat=4) if sum(occ) <= 2}
    assert set(basis.states) == brute
    assert len(basis.states) == len(brute)
    for i, s in enumerate(basis.states):
        assert basis.index(s) == i


@pytest.mark.parametrize("args", [(0, 2), (2, -1)])
def test_enumerate_basis_rejects_bad_input(args):
    with pytest.raises(ValueError):
        enumerate_basis(*args)


def test_density_operator_rejects_wrong_shape():
    with pytest.raises(ValueError):
        DensityOperator(ALL_MODES, np.eye(6))


def test_tensor_of_single_photons_is_basis_projector():
    h_s = fock_state({ModeIndex.SH: 1}, SIGNAL_MODES).density()
    h_m = fock_state({ModeIndex.MH: 1}, METER_MODES).density()
    rho = tensor(h_s, h_m)
    expected = np.zeros((15, 15))
    i = basis_for(ALL_MODES).index((1, 0, 1, 0))
    expected[i, i] = 1
    assert_allclose(rho.matrix, expected)
    assert truncated_weight(h_s, h_m) == 0


def test_tensor_with_vacuum_embeds(rng):
    a = random_density(rng, SIGNAL_MODES)
    rho = tensor(a, vacuum(METER_MODES))
    basis = rho.basis
    for i, si in enumerate(basis.states):
        for j, sj in enumerate(basis.states):
            if si[2:] == (0, 0) and sj[2:] == (0, 0):
                ai, aj = a.basis.index(si[:2]), a.basis.index(sj[:2])
                assert rho.matrix[i, j] == a.matrix[ai, aj]
            else:
                assert rho.matrix[i, j] == 0


def test_tensor_rejects_overlapping_modes():
    with pytest.raises(ValueError):
        tensor(vacuum(SIGNAL_MODES), vacuum((ModeIndex.SV, ModeIndex.MH)))


def test_tensor_truncates_above_cutoff():
    two = fock_state({ModeIndex.SH: 2}, SIGNAL_MODES).density()
    one = fock_state({ModeIndex.MH: 1}, METER_MODES).density()
    assert tensor(two, one).trace() == 0
    assert truncated_weight(two, one) == 1


def _at_most_one_photon(rng, modes):
    """Random state supported on photon numbers <= 1 so products stay under the cutoff."""
    basis = basis_for(modes)
    rho = random_density(rng, modes).matrix.copy()
    heavy = basis.photon_numbers() > 1
    rho[heavy, :] = 0
    rho[:, heavy] = 0
    return DensityOperator(modes, rho / np.trace(rho).real)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_tensor_trace_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a = _at_most_one_photon(rng, SIGNAL_MODES) * 0.7
    b = _at_most_one_photon(rng, METER_MODES) * 1.3
    assert tensor(a, b).trace() == pytest.approx(a.trace() * b.trace(), abs=tol.ROUND_TRIP)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_tensor_partial_trace_round_trip(seed):
    rng = np.random.default_rng(seed)
    a = _at_most_one_photon(rng, SIGNAL_MODES)
    b = _at_most_one_photon(rng, METER_MODES)
    rho = tensor(a, b)
    assert_allclose(partial_trace(rho, SIGNAL_MODES).matrix, a.matrix, atol=tol.ROUND_TRIP)
    assert_allclose(partial_trace(rho, METER_MODES).matrix, b.matrix, atol=tol.ROUND_TRIP)


def test_partial_trace_of_bell_pair():
    hh = fock_state({ModeIndex.SH: 1, ModeIndex.MH: 1})
    vv = fock_state({ModeIndex.SV: 1, ModeIndex.MV: 1})
    rho = ((hh + vv) * (1 / np.sqrt(2))).density()
    reduced = partial_trace(rho, SIGNAL_MODES)
    b = reduced.basis
    expected = np.zeros((6, 6))
    expected[b.index((1, 0)), b.index((1, 0))] = 0.5
    expected[b.index((0, 1)), b.index((0, 1))] = 0.5
    assert_allclose(reduced.matrix, expected, atol=tol.ROUND_TRIP)


def test_partial_trace_rejects_empty_keep(rng):
    with pytest.raises(ValueError):
        partial_trace(random_density(rng), set())
    with pytest.raises(ValueError):
        partial_trace(random_density(rng, SIGNAL_MODES), {ModeIndex.MH})


@settings(max_examples=30, deadline=None)
@given(seeds, st.sets(st.sampled_from(ALL_MODES), min_size=1, max_size=3))
def test_partial_trace_preserves_trace_in_any_grouping(seed, keep):
    rho = random_density(np.random.default_rng(seed))
    reduced = partial_trace(rho, keep)
    assert reduced.trace() == pytest.approx(rho.trace(), abs=tol.ROUND_TRIP)
    reduced.validate()
    # tracing the kept set one mode at a time, in either order, ends at the same scalar
    order = sorted(keep)
    for seq in (order, order[::-1]):
        cur = reduced
        for m in seq[:-1]:
            cur = partial_trace(cur, set(cur.modes) - {m})
        assert cur.trace() == pytest.approx(rho.trace(), abs=tol.ROUND_TRIP)


def test_partial_trace_matches_brute_force(rng):
    rho = random_density(rng)
    keep = (ModeIndex.SV, ModeIndex.MH)
    full, kept = rho.basis, basis_for(keep)
    brute = np.zeros((len(kept), len(kept)), dtype=complex)
    for i, si in enumerate(full.states):
        for j, sj in enumerate(full.states):
            if si[0] == sj[0] and si[3] == sj[3]:
                brute[kept.index((si[1], si[2])), kept.index((sj[1], sj[2]))] += rho.matrix[i, j]
    assert_allclose(partial_trace(rho, keep).matrix, brute, atol=tol.ROUND_TRIP)


def test_expectation_examples(rng):
    rho = random_density(rng)
    assert expectation(rho, np.eye(15)) == pytest.approx(1, abs=tol.ALGEBRAIC)
    x = fock_state({ModeIndex.MV: 2}).density()
    assert expectation(x, x) == pytest.approx(1)
    half = DensityOperator((ModeIndex.SH,), np.diag([0.5, 0.5, 0]))
    assert expectation(half, np.diag([1, 0, 0])) == pytest.approx(0.5)


def test_expectation_errors(rng):
    rho = random_density(rng)
    with pytest.raises(ValueError, match="dimension"):
        expectation(rho, np.eye(6))
    with pytest.raises(ValueError, match="imaginary"):
        expectation(rho, 1j * np.eye(15))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_random_states_are_valid(seed):
    rho = random_density(np.random.default_rng(seed))
    assert rho.hermiticity_defect() <= tol.ALGEBRAIC
    assert rho.min_eigenvalue() >= -tol.ALGEBRAIC
    assert abs(rho.trace() - 1) <= tol.ALGEBRAIC
