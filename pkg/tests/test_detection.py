import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from conftest import random_density
from oracles import bernoulli_click_probability
from qndsim import tolerances as tol
from qndsim.detection import (
    Arms, ClickPattern, DetectorModel, Outcome, all_patterns, completeness_defect,
    conditional_signal_state, pattern_probability, povm_element,
)
from qndsim.errors import ConditioningError
from qndsim.fock import ModeIndex, Polarization, fock_state, tensor, vacuum, SIGNAL_MODES, METER_MODES
from qndsim.analysis import reconstruct_predetection_state, BadKind

GRID = np.round(np.arange(0, 1.0001, 0.05), 10)
ZETAS = st.floats(min_value=0, max_value=1)
H_CLICK = ClickPattern.of(MH=True, MV=False)


def test_povm_ideal_and_blind():
    assert_allclose(povm_element(Outcome.CLICK, 1).matrix, np.diag([0, 1, 1]))
    assert_allclose(povm_element(Outcome.CLICK, 0).matrix, np.zeros((3, 3)))
    assert_allclose(povm_element(Outcome.NO_CLICK, 0).matrix, np.eye(3))


def test_povm_at_65_percent():
    # direct substitution: zeta (2 - zeta) = 0.65 * 1.35
    assert_allclose(povm_element(Outcome.CLICK, 0.65).diagonal, [0, 0.65, 0.8775], atol=1e-15)
    assert_allclose(povm_element(Outcome.NO_CLICK, 0.65).diagonal, [1, 0.35, 0.1225], atol=1e-15)


@pytest.mark.parametrize("zeta", [-0.1, 1.01, float("nan")])
def test_povm_rejects_bad_efficiency(zeta):
    with pytest.raises(ValueError):
        povm_element(Outcome.CLICK, zeta)


@pytest.mark.parametrize("zeta", GRID)
def test_completeness_and_positivity_on_grid(zeta):
    assert completeness_defect(zeta) <= tol.ROUND_TRIP
    for outcome in Outcome:
        d = povm_element(outcome, zeta).diagonal
        assert np.all((d >= 0) & (d <= 1))
        m = povm_element(outcome, zeta).matrix
        assert np.all(m[~np.eye(3, dtype=bool)] == 0)


def test_completeness_examples():
    assert completeness_defect(0) == 0
    assert completeness_defect(1) == 0
    assert completeness_defect(0.65) <= 1e-15


@pytest.mark.parametrize("photons", [0, 1, 2])
def test_click_entries_match_independent_bernoulli(photons):
    for zeta in GRID:
        assert povm_element(Outcome.CLICK, zeta).diagonal[photons] == pytest.approx(
            bernoulli_click_probability(photons, zeta), abs=1e-15)


def test_pattern_probability_examples():
    assert pattern_probability(vacuum(), ClickPattern.of(SH=False, SV=False, MH=False, MV=False),
                               0.3) == 1
    one = fock_state({ModeIndex.MH: 1}).density()
    assert pattern_probability(one, H_CLICK, 0.65) == pytest.approx(0.65)
    two = fock_state({ModeIndex.MH: 2}).density()
    assert pattern_probability(two, H_CLICK, 0.65) == pytest.approx(0.8775)


def test_pattern_probability_rejects_missing_detector():
    with pytest.raises(ValueError):
        pattern_probability(vacuum(METER_MODES), ClickPattern.of(SH=True), 0.5)


def test_click_pattern_uniqueness():
    with pytest.raises(ValueError):
        ClickPattern(((ModeIndex.MH, Outcome.CLICK), (ModeIndex.MH, Outcome.NO_CLICK)))
    assert ClickPattern.of(MV=False, MH=True) == H_CLICK
    assert len(set(all_patterns(Arms.BOTH.detectors))) == 16


def test_per_detector_efficiency():
    model = DetectorModel(0.5, {ModeIndex.MV: 0.9})
    rho = fock_state({ModeIndex.MH: 1, ModeIndex.MV: 1}).density()
    assert pattern_probability(rho, H_CLICK, model) == pytest.approx(0.5 * 0.1)
    with pytest.raises(ValueError):
        DetectorModel(0.5, {ModeIndex.MV: 1.5})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), ZETAS, st.sampled_from(list(Arms)))
def test_pattern_probabilities_are_exhaustive(seed, zeta, arms):
    rho = random_density(np.random.default_rng(seed))
    total = sum(pattern_probability(rho, p, zeta) for p in all_patterns(arms.detectors))
    assert total == pytest.approx(1, abs=tol.ALGEBRAIC)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), ZETAS, ZETAS, st.sampled_from(list(Arms)))
def test_all_click_probability_monotone_in_zeta(seed, z1, z2, arms):
    lo, hi = sorted((z1, z2))
    rho = random_density(np.random.default_rng(seed))
    all_click = ClickPattern(tuple((m, Outcome.CLICK) for m in arms.detectors))
    assert pattern_probability(rho, all_click, lo) <= pattern_probability(rho, all_click, hi) + 1e-15


def test_conditional_state_of_product():
    rho = tensor(fock_state({ModeIndex.SH: 1}, SIGNAL_MODES).density(),
                 fock_state({ModeIndex.MH: 1}, METER_MODES).density())
    p, signal = conditional_signal_state(rho, H_CLICK, 0.65)
    assert p == pytest.approx(0.65)
    expected = fock_state({ModeIndex.SH: 1}, SIGNAL_MODES).density().matrix
    assert_allclose(signal.matrix, expected, atol=tol.ALGEBRAIC)


def test_conditioning_on_impossible_outcome():
    with pytest.raises(ConditioningError, match="unconditionable"):
        conditional_signal_state(vacuum(), H_CLICK, 0.65)


def test_conditioning_requires_meter_pattern():
    with pytest.raises(ValueError):
        conditional_signal_state(vacuum(), ClickPattern.of(SH=True), 0.65)


def test_conditional_state_of_two_branch_reconstruction():
    # branch weights after the H-click/V-silent outcome: zeta/2 and zeta (1 - zeta)/2
    zeta = 0.65
    rho = reconstruct_predetection_state(Polarization.H, 0.5, 0.5, BadKind.ORTHOGONAL_MISSED)
    p, signal = conditional_signal_state(rho, H_CLICK, zeta)
    assert p == pytest.approx(zeta / 2 + zeta * (1 - zeta) / 2)
    b = signal.basis
    assert signal.matrix[b.index((1, 0)), b.index((1, 0))].real == pytest.approx(1 / (2 - zeta))
    assert signal.matrix[b.index((0, 0)), b.index((0, 0))].real == pytest.approx(1 - 1 / (2 - zeta))
    assert signal.matrix[b.index((1, 0)), b.index((1, 0))].real == pytest.approx(0.7407, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(min_value=0.01, max_value=1),
       st.sampled_from(list(all_patterns(Arms.METER.detectors))))
def test_conditional_state_is_valid(seed, zeta, pattern):
    rho = random_density(np.random.default_rng(seed))
    try:
        p, signal = conditional_signal_state(rho, pattern, zeta)
    except ConditioningError:
        return
    assert p > tol.MIN_PROBABILITY
    signal.validate()
