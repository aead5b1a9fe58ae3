"""Inefficient bucket detectors as two-outcome POVMs.

A detector with efficiency ``zeta`` on the truncated space {|0>, |1>, |2>}:

    no click:  diag(1, 1 - zeta, (1 - zeta)**2)
    click:     diag(0, zeta, zeta * (2 - zeta))

No dark counts.  Both elements are diagonal in the occupation basis, which
is what lets the Monte Carlo sampler draw configurations from diag(rho).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from qndsim import tolerances as tol
from qndsim.errors import ConditioningError
from qndsim.fock import (
    ALL_MODES, METER_MODES, SIGNAL_MODES, DensityOperator, ModeIndex, Party, basis_for,
    partial_trace,
)


class Outcome(enum.Enum):
    NO_CLICK = 0
    CLICK = 1


class Arms(enum.Enum):
    """Which arms carry detectors."""

    METER = "meter"        # QND operation: signal propagates freely
    BOTH = "both"          # coincidence counting

    @property
    def detectors(self) -> tuple[ModeIndex, ...]:
        return METER_MODES if self is Arms.METER else ALL_MODES


def _check_zeta(zeta: float) -> float:
    zeta = float(zeta)
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"detector efficiency must lie in [0, 1], got {zeta}")
    return zeta


@dataclass(frozen=True)
class DetectorModel:
    """Detector efficiency, uniform by default with optional per-detector overrides."""

    zeta: float
    per_detector: Mapping[ModeIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "zeta", _check_zeta(self.zeta))
        overrides = {ModeIndex(m): _check_zeta(z) for m, z in dict(self.per_detector).items()}
        object.__setattr__(self, "per_detector", overrides)

    def efficiency(self, mode: ModeIndex) -> float:
        return self.per_detector.get(mode, self.zeta)

    @property
    def uniform(self) -> bool:
        return all(z == self.zeta for z in self.per_detector.values())


def as_model(zeta: float | DetectorModel) -> DetectorModel:
    return zeta if isinstance(zeta, DetectorModel) else DetectorModel(zeta)


@dataclass(frozen=True, eq=False)
class PovmElement:
    outcome: Outcome
    matrix: np.ndarray

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix)


def _povm_diagonal(outcome: Outcome, zeta: float) -> np.ndarray:
    if outcome is Outcome.NO_CLICK:
        return np.array([1.0, 1.0 - zeta, (1.0 - zeta) ** 2])
    return np.array([0.0, zeta, zeta * (2.0 - zeta)])


def povm_element(outcome: Outcome, zeta: float) -> PovmElement:
    zeta = _check_zeta(zeta)
    return PovmElement(outcome, np.diag(_povm_diagonal(outcome, zeta)))


def completeness_defect(zeta: float) -> float:
    """Max-norm of E0 + E1 - 1 on {|0>, |1>, |2>}."""
    total = povm_element(Outcome.NO_CLICK, zeta).matrix + povm_element(Outcome.CLICK, zeta).matrix
    return float(np.max(np.abs(total - np.eye(3))))


@dataclass(frozen=True)
class ClickPattern:
    """One outcome per declared detector, keyed by detector mode."""

    outcomes: tuple[tuple[ModeIndex, Outcome], ...]

    def __post_init__(self):
        raw = self.outcomes.items() if isinstance(self.outcomes, Mapping) else self.outcomes
        items = sorted(((ModeIndex(m), Outcome(o)) for m, o in raw), key=lambda t: t[0])
        modes = [m for m, _ in items]
        if len(set(modes)) != len(modes):
            raise ValueError("a detector can have only one outcome")
        object.__setattr__(self, "outcomes", tuple(items))

    @classmethod
    def of(cls, **clicks: bool) -> "ClickPattern":
        """``ClickPattern.of(MH=True, MV=False)``."""
        return cls(tuple((ModeIndex[k], Outcome(int(v))) for k, v in clicks.items()))

    @property
    def detectors(self) -> tuple[ModeIndex, ...]:
        return tuple(m for m, _ in self.outcomes)

    def __getitem__(self, mode: ModeIndex) -> Outcome:
        return dict(self.outcomes)[mode]

    def clicked(self, mode: ModeIndex) -> bool:
        return self[mode] is Outcome.CLICK

    def label(self) -> str:
        return " ".join(f"{m.name}:{'C' if o is Outcome.CLICK else '-'}" for m, o in self.outcomes)

    def __lt__(self, other: "ClickPattern") -> bool:
        key = lambda p: [(m.value, o.value) for m, o in p.outcomes]  # noqa: E731
        return key(self) < key(other)


def all_patterns(detectors: tuple[ModeIndex, ...]) -> Iterator[ClickPattern]:
    for outs in itertools.product(Outcome, repeat=len(detectors)):
        yield ClickPattern(tuple(zip(detectors, outs)))


def pattern_operator_diagonal(pattern: ClickPattern, modes: tuple[ModeIndex, ...],
                              zeta: float | DetectorModel) -> np.ndarray:
    """Diagonal of the product POVM element, identity on undetected modes."""
    model = as_model(zeta)
    basis = basis_for(modes)
    missing = set(pattern.detectors) - set(basis.modes)
    if missing:
        raise ValueError(f"pattern detectors {missing} not present in state modes")
    diag = np.ones(len(basis))
    for mode, outcome in pattern.outcomes:
        entries = _povm_diagonal(outcome, model.efficiency(mode))
        pos = basis.modes.index(mode)
        diag *= entries[[s[pos] for s in basis.states]]
    return diag


def pattern_probability(rho: DensityOperator, pattern: ClickPattern,
                        zeta: float | DetectorModel) -> float:
    """``Tr[(product of per-detector POVM elements) rho]``."""
    diag = pattern_operator_diagonal(pattern, rho.modes, zeta)
    return float(np.dot(diag, np.diag(rho.matrix).real))


def conditional_signal_state(rho_sm: DensityOperator, meter_pattern: ClickPattern,
                             zeta: float | DetectorModel) -> tuple[float, DensityOperator]:
    """Probability of a meter click pattern and the resulting signal state.

    Uses the update ``sqrt(M) rho sqrt(M) / p`` followed by tracing out the
    meter; for these diagonal POVMs this just reweights Fock branches.
    """
    if any(m.party is not Party.METER for m in meter_pattern.detectors):
        raise ValueError("conditioning pattern must only involve meter detectors")
    diag = pattern_operator_diagonal(meter_pattern, rho_sm.modes, zeta)
    p = float(np.dot(diag, np.diag(rho_sm.matrix).real))
    if p < tol.MIN_PROBABILITY:
        raise ConditioningError(f"unconditionable outcome {meter_pattern.label()} (p = {p:.3g})")
    root = np.sqrt(diag)
    updated = root[:, None] * rho_sm.matrix * root[None, :] / p
    return p, partial_trace(DensityOperator(rho_sm.modes, updated), SIGNAL_MODES)
