"""Coincidence-based and non-post-selected fidelities of the QND scheme.

Two operating modes are compared:

* coincidence counting, where both signal and meter are detected and the
  measurement fidelity is an overlap between the input polarization
  distribution and the meter outcomes on coincidence events;
* QND operation, where only the meter is detected and the signal is left to
  propagate.  The QND fidelity is the probability that the signal really
  holds a ``k`` photon given that the meter reported ``k``.

The pre-detection state of the original circuit is not available, so
:func:`reconstruct_predetection_state` builds a two-branch mixture: the
intended branch plus an error branch in which both photons went to the
meter and the signal is empty.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Protocol

import numpy as np

from qndsim import tolerances as tol
from qndsim.detection import (
    Arms, ClickPattern, DetectorModel, Outcome, all_patterns, as_model,
    pattern_operator_diagonal, pattern_probability,
)
from qndsim.errors import ConditioningError
from qndsim.fock import (
    METER_MODES, SIGNAL_MODES, DensityOperator, ModeIndex, Party, Polarization,
    basis_for, expectation, fock_state, tensor,
)


class OperatingMode(enum.Enum):
    COINCIDENCE = "coincidence"
    QND = "qnd"

    @property
    def arms(self) -> Arms:
        return Arms.BOTH if self is OperatingMode.COINCIDENCE else Arms.METER


class ArmOutcome(enum.Enum):
    H = "H"
    V = "V"
    BOTH = "B"
    NONE = "0"
    UNMEASURED = "-"    # signal axis in QND mode

    @classmethod
    def of(cls, pol: Polarization) -> "ArmOutcome":
        return cls(pol.value)


MEASURED_OUTCOMES = (ArmOutcome.H, ArmOutcome.V, ArmOutcome.BOTH, ArmOutcome.NONE)


def arm_outcome(pattern: ClickPattern, party: Party) -> ArmOutcome:
    sig = party is Party.SIGNAL
    h = pattern.clicked(ModeIndex.SH if sig else ModeIndex.MH)
    v = pattern.clicked(ModeIndex.SV if sig else ModeIndex.MV)
    if h and v:
        return ArmOutcome.BOTH
    if h:
        return ArmOutcome.H
    if v:
        return ArmOutcome.V
    return ArmOutcome.NONE


@dataclass(frozen=True)
class ProbabilityTable:
    """Outcome probabilities keyed by (signal outcome, meter outcome)."""

    mode: OperatingMode
    entries: Mapping[tuple[ArmOutcome, ArmOutcome], float]

    @property
    def signal_outcomes(self) -> tuple[ArmOutcome, ...]:
        if self.mode is OperatingMode.QND:
            return (ArmOutcome.UNMEASURED,)
        return MEASURED_OUTCOMES

    def keys(self) -> list[tuple[ArmOutcome, ArmOutcome]]:
        return [(s, m) for s in self.signal_outcomes for m in MEASURED_OUTCOMES]

    def __getitem__(self, key: tuple[ArmOutcome, ArmOutcome]) -> float:
        return self.entries.get(key, 0.0)

    def p(self, signal: str, meter: str) -> float:
        """Shorthand lookup, e.g. ``table.p("H", "0")``; ``"-"`` for an unmeasured signal."""
        return self[ArmOutcome(signal), ArmOutcome(meter)]

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def meter_marginal(self) -> dict[ArmOutcome, float]:
        out = dict.fromkeys(MEASURED_OUTCOMES, 0.0)
        for (_, m), p in self.entries.items():
            out[m] += p
        return out

    def sub_table(self) -> dict[tuple[ArmOutcome, ArmOutcome], float]:
        """The {H, V, None} restriction, dropping double clicks."""
        keep = (ArmOutcome.H, ArmOutcome.V, ArmOutcome.NONE)
        return {k: v for k, v in self.entries.items()
                if k[1] in keep and (k[0] in keep or k[0] is ArmOutcome.UNMEASURED)}

    def format(self) -> str:
        cols = MEASURED_OUTCOMES
        head = "signal\\meter " + "".join(f"{c.value:>10}" for c in cols)
        rows = [head]
        for s in self.signal_outcomes:
            rows.append(f"{s.value:>12} " + "".join(f"{self[s, m]:10.6f}" for m in cols))
        return "\n".join(rows)


def table_from_patterns(pattern_probs: Mapping[ClickPattern, float],
                        mode: OperatingMode) -> ProbabilityTable:
    """Bin click-pattern probabilities (or frequencies) into per-arm outcomes."""
    entries: dict[tuple[ArmOutcome, ArmOutcome], float] = {}
    for pattern, p in pattern_probs.items():
        if mode is OperatingMode.COINCIDENCE:
            s = arm_outcome(pattern, Party.SIGNAL)
        else:
            s = ArmOutcome.UNMEASURED
        key = (s, arm_outcome(pattern, Party.METER))
        entries[key] = entries.get(key, 0.0) + p
    return ProbabilityTable(mode, entries)


def build_probability_table(rho: DensityOperator, zeta: float | DetectorModel,
                            mode: OperatingMode) -> ProbabilityTable:
    probs = {pat: pattern_probability(rho, pat, zeta) for pat in all_patterns(mode.arms.detectors)}
    return table_from_patterns(probs, mode)


def _as_distribution(input_dist) -> tuple[float, float]:
    if isinstance(input_dist, Polarization):
        return (1.0, 0.0) if input_dist is Polarization.H else (0.0, 1.0)
    if isinstance(input_dist, Mapping):
        pair = (float(input_dist.get(Polarization.H, 0.0)), float(input_dist.get(Polarization.V, 0.0)))
    else:
        pair = tuple(float(x) for x in input_dist)
    if len(pair) != 2 or min(pair) < 0 or abs(sum(pair) - 1) > tol.ALGEBRAIC:
        raise ValueError(f"input distribution over (H, V) must be non-negative and sum to 1: {pair}")
    return pair


def measurement_fidelity(input_dist, table: ProbabilityTable) -> float:
    """Squared Bhattacharyya overlap of the input and coincidence meter distributions.

    Only events where each arm reports exactly one polarization count.
    ``input_dist`` is an (H, V) pair, a mapping, or a Polarization (point mass).
    """
    if table.mode is not OperatingMode.COINCIDENCE:
        raise ValueError("measurement fidelity needs a coincidence-mode table")
    p_in = _as_distribution(input_dist)
    pols = (ArmOutcome.H, ArmOutcome.V)
    mass = sum(table[s, m] for s in pols for m in pols)
    if mass < tol.MIN_PROBABILITY:
        raise ConditioningError("no coincidences")
    q = [sum(table[s, m] for s in pols) / mass for m in pols]
    overlap = sum(math.sqrt(a * b) for a, b in zip(p_in, q))
    return min(overlap ** 2, 1.0)


class BadKind(enum.Enum):
    ORTHOGONAL_MISSED = "orthogonal_missed"   # meter holds k and perp-k photons
    SAME_MODE_PAIR = "same_mode_pair"         # meter holds two k photons


def _branch(k: Polarization, signal: int, meter_k: int, meter_perp: int) -> DensityOperator:
    occ = {
        ModeIndex.of(Party.SIGNAL, k): signal,
        ModeIndex.of(Party.METER, k): meter_k,
        ModeIndex.of(Party.METER, k.orthogonal): meter_perp,
    }
    return fock_state(occ).density()


def reconstruct_predetection_state(k: Polarization, good_weight: float, bad_weight: float,
                                   bad_kind: BadKind = BadKind.ORTHOGONAL_MISSED) -> DensityOperator:
    """Mixture of the intended branch |k>_s|k>_m and an empty-signal error branch."""
    if good_weight < 0 or bad_weight < 0 or abs(good_weight + bad_weight - 1) > tol.ROUND_TRIP:
        raise ValueError(f"branch weights must be non-negative and sum to 1, "
                         f"got {good_weight}, {bad_weight}")
    good = _branch(k, signal=1, meter_k=1, meter_perp=0)
    if bad_kind is BadKind.ORTHOGONAL_MISSED:
        bad = _branch(k, signal=0, meter_k=1, meter_perp=1)
    else:
        bad = _branch(k, signal=0, meter_k=2, meter_perp=0)
    return good_weight * good + bad_weight * bad


@dataclass(frozen=True)
class Reconstruction:
    k: Polarization = Polarization.H
    good_weight: float = 0.5
    bad_weight: float = 0.5
    bad_kind: BadKind = BadKind.ORTHOGONAL_MISSED

    def predetection_state(self) -> DensityOperator:
        return reconstruct_predetection_state(self.k, self.good_weight, self.bad_weight,
                                              self.bad_kind)


def conditioning_pattern(k: Polarization) -> ClickPattern:
    """Meter reports ``k``: the k detector clicks, the orthogonal one does not."""
    return ClickPattern({
        ModeIndex.of(Party.METER, k): Outcome.CLICK,
        ModeIndex.of(Party.METER, k.orthogonal): Outcome.NO_CLICK,
    })


def _meter_operator(k: Polarization, zeta) -> DensityOperator:
    diag = pattern_operator_diagonal(conditioning_pattern(k), METER_MODES, zeta)
    return DensityOperator(METER_MODES, np.diag(diag))


def _signal_projector(k: Polarization) -> DensityOperator:
    return fock_state({ModeIndex.of(Party.SIGNAL, k): 1}, SIGNAL_MODES).density()


def qnd_numerator(rho_sm: DensityOperator, k: Polarization, zeta: float | DetectorModel) -> float:
    """Unnormalized joint trace Tr[E_k^(1) E_perp^(0) (x) |k><k|_s rho]."""
    op = tensor(_signal_projector(k), _meter_operator(k, zeta))
    return expectation(rho_sm, op)


def qnd_fidelity(rho_sm: DensityOperator, k: Polarization, zeta: float | DetectorModel) -> float:
    """Probability the signal holds |k> given the meter reported ``k``.

    The joint trace is divided by the probability of the conditioning
    pattern, so ``1 - F`` is the chance of mistaking an empty signal for |k>.
    """
    numerator = qnd_numerator(rho_sm, k, zeta)
    signal_identity = DensityOperator(SIGNAL_MODES, np.eye(len(basis_for(SIGNAL_MODES))))
    denominator = expectation(rho_sm, tensor(signal_identity, _meter_operator(k, zeta)))
    if denominator < tol.MIN_PROBABILITY:
        raise ConditioningError(f"meter outcome {k.value} never occurs (p = {denominator:.3g})")
    return numerator / denominator


def closed_form_qnd(zeta: float) -> float:
    """1 / (2 - zeta)."""
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"detector efficiency must lie in [0, 1], got {zeta}")
    return 1.0 / (2.0 - zeta)


@dataclass(frozen=True)
class FidelityReport:
    zeta: float
    k: Polarization
    f_qnd_trace: float
    f_qnd_closed: float
    f_m: float | None = None        # None when there are no coincidences to condition on
    coincidence: ProbabilityTable | None = field(default=None, repr=False)
    qnd: ProbabilityTable | None = field(default=None, repr=False)


class Scenario(Protocol):
    k: Polarization

    def predetection_state(self) -> DensityOperator: ...


def fidelity_report(rho_sm: DensityOperator, k: Polarization,
                    zeta: float | DetectorModel) -> FidelityReport:
    model = as_model(zeta)
    coincidence = build_probability_table(rho_sm, model, OperatingMode.COINCIDENCE)
    try:
        f_m = measurement_fidelity(k, coincidence)
    except ConditioningError:
        f_m = None
    # the error branch only registers through the orthogonal meter detector
    perp = model.efficiency(ModeIndex.of(Party.METER, k.orthogonal))
    return FidelityReport(
        zeta=model.zeta,
        k=k,
        f_qnd_trace=qnd_fidelity(rho_sm, k, model),
        f_qnd_closed=closed_form_qnd(perp),
        f_m=f_m,
        coincidence=coincidence,
        qnd=build_probability_table(rho_sm, model, OperatingMode.QND),
    )


def zeta_grid(zeta_min: float, zeta_max: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not 0.0 <= zeta_min <= zeta_max <= 1.0:
        raise ValueError(f"need 0 <= zeta_min <= zeta_max <= 1, got {zeta_min}, {zeta_max}")
    if steps == 1:
        return np.array([zeta_min])
    return np.linspace(zeta_min, zeta_max, steps)


def sweep(zeta_min: float, zeta_max: float, steps: int,
          scenario: Scenario | None = None) -> list[FidelityReport]:
    """One report per point of a uniform efficiency grid."""
    scenario = scenario or Reconstruction()
    rho = scenario.predetection_state()
    return [fidelity_report(rho, scenario.k, float(z)) for z in zeta_grid(zeta_min, zeta_max, steps)]

