"""Linear-optical mode transformations and their action on Fock states.

Convention: a mode unitary ``U`` maps creation operators as
``a_i^dag -> sum_j U[j, i] a_j^dag``, so column ``i`` of ``U`` is the image of
a single photon in mode ``i``.  Beam splitters are real rotations
``[[cos t, -sin t], [sin t, cos t]]`` acting on the (signal, meter) pair.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from qndsim import tolerances as tol
from qndsim.fock import (
    ALL_MODES, DensityOperator, FockBasis, ModeIndex, Party, Polarization,
    StateVector, basis_for, fock_state, party_modes,
)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def unitarity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    """Single-photon transformation on the listed target modes."""

    matrix: np.ndarray
    modes: tuple[ModeIndex, ...]
    name: str = "unitary"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        modes = tuple(ModeIndex(x) for x in self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"target modes must be distinct: {modes}")
        if m.shape != (len(modes), len(modes)):
            raise ValueError(f"matrix shape {m.shape} does not match {len(modes)} target modes")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "modes", modes)

    def embed(self, modes: Sequence[ModeIndex] = ALL_MODES) -> np.ndarray:
        """The full mode matrix over ``modes``, identity on non-targets."""
        modes = list(modes)
        out = np.eye(len(modes), dtype=complex)
        pos = [modes.index(m) for m in self.modes]
        out[np.ix_(pos, pos)] = self.matrix
        return out

    @property
    def dagger(self) -> "ModeUnitary":
        return ModeUnitary(self.matrix.conj().T, self.modes, self.name + "^dag")

    def __matmul__(self, other: "ModeUnitary") -> "ModeUnitary":
        """Composition: ``(self @ other)`` applies ``other`` first."""
        modes = tuple(sorted(set(self.modes) | set(other.modes)))
        return ModeUnitary(self.embed(modes) @ other.embed(modes), modes,
                           f"{self.name}*{other.name}")


def beam_splitter(theta_h: float, theta_v: float) -> ModeUnitary:
    """Signal/meter beam splitter with independent mixing angles for H and V.

    Equal angles give a polarization-independent splitter; unequal angles a
    partially polarizing one.  ``pi/4`` is 50:50.
    """
    if not (math.isfinite(theta_h) and math.isfinite(theta_v)):
        raise ValueError("beam splitter angles must be finite")
    m = np.zeros((4, 4), dtype=complex)
    # (SH, MH) and (SV, MV) pairs in the global order SH, SV, MH, MV
    m[np.ix_([0, 2], [0, 2])] = _rotation(theta_h)
    m[np.ix_([1, 3], [1, 3])] = _rotation(theta_v)
    return ModeUnitary(m, ALL_MODES, f"bs({theta_h:.4g},{theta_v:.4g})")


def wave_plate(party: Party, angle: float) -> ModeUnitary:
    """Rotation by ``angle`` between the H and V modes of one party."""
    if not math.isfinite(angle):
        raise ValueError("wave plate angle must be finite")
    return ModeUnitary(_rotation(angle), party_modes(party), f"wp_{party.value}({angle:.4g})")


def phase_shift(mode: ModeIndex, phi: float) -> ModeUnitary:
    if not math.isfinite(phi):
        raise ValueError("phase must be finite")
    return ModeUnitary(np.array([[np.exp(1j * phi)]]), (mode,), f"phase_{mode.name}({phi:.4g})")


def permanent(m: np.ndarray) -> complex:
    """Permanent by direct expansion over permutations; fine for n <= 4."""
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    rows = range(n)
    return complex(sum(math.prod(m[i, p[i]] for i in rows)
                       for p in itertools.permutations(rows)))


def _repeat_indices(occ: Sequence[int]) -> list[int]:
    return [i for i, n in enumerate(occ) for _ in range(n)]


@dataclass(frozen=True, eq=False)
class LiftedOperator:
    matrix: np.ndarray
    basis: FockBasis
    source: ModeUnitary | None = None

    def __matmul__(self, other: "LiftedOperator") -> "LiftedOperator":
        return LiftedOperator(self.matrix @ other.matrix, self.basis)

    def apply(self, psi: StateVector) -> StateVector:
        if psi.modes != self.basis.modes:
            raise ValueError("mode mismatch")
        return StateVector(psi.modes, self.matrix @ psi.amplitudes)


def lift_unitary(u: ModeUnitary, basis: FockBasis | None = None) -> LiftedOperator:
    """Second-quantized action of ``u`` on the truncated Fock basis.

    ``<m|U|n> = per(U[m, n]) / sqrt(prod m_i! prod n_j!)`` where ``U[m, n]``
    repeats row ``j`` ``m_j`` times and column ``i`` ``n_i`` times.  Entries
    between different photon numbers are never filled.
    """
    basis = basis or basis_for(ALL_MODES)
    if not set(u.modes) <= set(basis.modes):
        raise ValueError(f"unitary targets {u.modes} outside basis modes {basis.modes}")
    full = u.embed(basis.modes)
    if unitarity_defect(full) > tol.ALGEBRAIC:
        raise ValueError(f"mode matrix is not unitary (defect {unitarity_defect(full):.3g})")

    d = len(basis)
    out = np.zeros((d, d), dtype=complex)
    norms = [math.sqrt(math.prod(math.factorial(k) for k in s)) for s in basis.states]
    totals = basis.photon_numbers()
    for j, n_in in enumerate(basis.states):
        cols = _repeat_indices(n_in)
        for i in np.flatnonzero(totals == totals[j]):
            rows = _repeat_indices(basis.states[i])
            out[i, j] = permanent(full[np.ix_(rows, cols)]) / (norms[i] * norms[j])
    return LiftedOperator(out, basis, u)


@dataclass(frozen=True)
class Circuit:
    """Ordered list of mode unitaries; the first element acts first."""

    elements: tuple[ModeUnitary, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def lifted(self, basis: FockBasis | None = None) -> LiftedOperator:
        basis = basis or basis_for(ALL_MODES)
        total = LiftedOperator(np.eye(len(basis), dtype=complex), basis)
        for el in self.elements:
            total = lift_unitary(el, basis) @ total
        return total

    def inverse(self) -> "Circuit":
        return Circuit(tuple(el.dagger for el in reversed(self.elements)))

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.elements + other.elements)


def apply_circuit(rho: DensityOperator, circuit: Circuit) -> DensityOperator:
    """``L rho L^dag`` with ``L`` the lifted circuit."""
    if not circuit.elements:
        return rho
    lifted = circuit.lifted(rho.basis).matrix
    return DensityOperator(rho.modes, lifted @ rho.matrix @ lifted.conj().T)


@dataclass(frozen=True)
class CircuitScenario:
    """A product Fock input sent through a circuit, measured for polarization ``k``.

    Shipped circuit configurations are illustrative; the circuit of the
    original experiment is not modelled.
    """

    k: Polarization
    input_occupations: Mapping[ModeIndex, int]
    circuit: Circuit = field(default_factory=Circuit)

    def predetection_state(self) -> DensityOperator:
        rho = fock_state(self.input_occupations).density()
        return apply_circuit(rho, self.circuit)
