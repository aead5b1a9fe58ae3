"""Simulation of single-photon QND polarization measurement with
imperfect, non-number-resolving detectors."""

from qndsim.fock import (
    ModeIndex, Party, Polarization, FockBasis, StateVector, DensityOperator,
    enumerate_basis, tensor, partial_trace, expectation, fock_state,
)
from qndsim.optics import (
    ModeUnitary, Circuit, LiftedOperator, beam_splitter, wave_plate,
    phase_shift, lift_unitary, apply_circuit,
)
from qndsim.detection import (
    Outcome, Arms, DetectorModel, PovmElement, ClickPattern, povm_element,
    completeness_defect, pattern_probability, conditional_signal_state,
)
from qndsim.analysis import (
    BadKind, Reconstruction, ProbabilityTable, FidelityReport,
    build_probability_table, measurement_fidelity,
    reconstruct_predetection_state, qnd_fidelity, closed_form_qnd, sweep,
)
from qndsim.montecarlo import EstimateReport, sample_patterns, estimate_fidelities

__version__ = "0.1.0"
