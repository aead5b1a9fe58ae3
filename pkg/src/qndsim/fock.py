"""Truncated multimode Fock space and dense state algebra.

Four optical modes are modelled: the signal and meter photons, each in
H and V polarization.  The global mode order is SH, SV, MH, MV and every
operator in the package is expressed in the basis returned by
:func:`enumerate_basis`, graded by total photon number and sorted
lexicographically (ascending) within a grade.

A product of two operators whose combined photon number exceeds the cutoff
is silently truncated by :func:`tensor`; use :func:`truncated_weight` to
check how much weight was dropped.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from qndsim import tolerances as tol


class Party(enum.Enum):
    SIGNAL = "S"
    METER = "M"


class Polarization(enum.Enum):
    H = "H"
    V = "V"

    @property
    def orthogonal(self) -> "Polarization":
        return Polarization.V if self is Polarization.H else Polarization.H


class ModeIndex(enum.IntEnum):
    """One of the four optical modes; the integer value is the global order."""

    SH = 0
    SV = 1
    MH = 2
    MV = 3

    @property
    def party(self) -> Party:
        return Party.SIGNAL if self.name[0] == "S" else Party.METER

    @property
    def polarization(self) -> Polarization:
        return Polarization(self.name[1])

    @classmethod
    def of(cls, party: Party, pol: Polarization) -> "ModeIndex":
        return cls[party.value + pol.value]

    @classmethod
    def parse(cls, label: str) -> "ModeIndex":
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValueError(f"unknown mode {label!r}; expected one of "
                             f"{[m.name for m in cls]}") from None


ALL_MODES: tuple[ModeIndex, ...] = tuple(ModeIndex)
SIGNAL_MODES = (ModeIndex.SH, ModeIndex.SV)
METER_MODES = (ModeIndex.MH, ModeIndex.MV)


def party_modes(party: Party) -> tuple[ModeIndex, ModeIndex]:
    return SIGNAL_MODES if party is Party.SIGNAL else METER_MODES


def enumerate_basis(n_modes: int, max_total: int) -> list[tuple[int, ...]]:
    """All occupation vectors of ``n_modes`` modes with at most ``max_total`` photons.

    States are graded by total photon number; within a grade they are in
    ascending lexicographic order.

    >>> enumerate_basis(1, 2)
    [(0,), (1,), (2,)]
    >>> len(enumerate_basis(4, 2))
    15
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if max_total < 0:
        raise ValueError("max_total must be >= 0")
    states = []
    for total in range(max_total + 1):
        grade = [occ for occ in itertools.product(range(total + 1), repeat=n_modes)
                 if sum(occ) == total]
        states.extend(sorted(grade))
    return states


def _normalize_modes(modes: Iterable[ModeIndex]) -> tuple[ModeIndex, ...]:
    modes = tuple(ModeIndex(m) for m in modes)
    if not modes:
        raise ValueError("at least one mode is required")
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated modes in {modes}")
    return tuple(sorted(modes))


class FockBasis:
    """Enumerated basis over a set of modes, with index lookup."""

    def __init__(self, modes: Sequence[ModeIndex], cutoff: int = tol.CUTOFF):
        self.modes = _normalize_modes(modes)
        self.cutoff = cutoff
        self.states = enumerate_basis(len(self.modes), cutoff)
        self._index = {s: i for i, s in enumerate(self.states)}

    @classmethod
    @functools.lru_cache(maxsize=None)
    def of(cls, modes: tuple[ModeIndex, ...]) -> "FockBasis":
        return cls(modes)

    def __len__(self) -> int:
        return len(self.states)

    def __repr__(self) -> str:
        return f"FockBasis({[m.name for m in self.modes]}, dim={len(self)})"

    def index(self, occupations: Sequence[int] | Mapping[ModeIndex, int]) -> int:
        if isinstance(occupations, Mapping):
            extra = set(occupations) - set(self.modes)
            if extra:
                raise ValueError(f"modes {extra} not in basis {self.modes}")
            occupations = tuple(int(occupations.get(m, 0)) for m in self.modes)
        key = tuple(int(n) for n in occupations)
        if key not in self._index:
            raise ValueError(f"occupation {key} not in truncated basis")
        return self._index[key]

    def occupation(self, i: int, mode: ModeIndex) -> int:
        return self.states[i][self.modes.index(mode)]

    def photon_numbers(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states])

    def label(self, i: int) -> str:
        return "|" + ",".join(str(n) for n in self.states[i]) + ">"


def basis_for(modes: Iterable[ModeIndex]) -> FockBasis:
    return FockBasis.of(_normalize_modes(modes))


@dataclass(frozen=True, eq=False)
class StateVector:
    modes: tuple[ModeIndex, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        modes = _normalize_modes(self.modes)
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} amplitudes, got {amps.shape}")

    @property
    def basis(self) -> FockBasis:
        return FockBasis.of(self.modes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.modes, self.amplitudes / n)

    def density(self) -> "DensityOperator":
        psi = self.amplitudes
        return DensityOperator(self.modes, np.outer(psi, psi.conj()))

    def __add__(self, other: "StateVector") -> "StateVector":
        if other.modes != self.modes:
            raise ValueError("mode mismatch")
        return StateVector(self.modes, self.amplitudes + other.amplitudes)

    def __mul__(self, c: complex) -> "StateVector":
        return StateVector(self.modes, c * self.amplitudes)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DensityOperator:
    modes: tuple[ModeIndex, ...]
    matrix: np.ndarray

    def __post_init__(self):
        modes = _normalize_modes(self.modes)
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "matrix", m)
        d = len(self.basis)
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix for modes "
                             f"{[x.name for x in modes]}, got {m.shape}")

    @property
    def basis(self) -> FockBasis:
        return FockBasis.of(self.modes)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def validate(self, normalized: bool = True, atol: float = tol.ALGEBRAIC) -> "DensityOperator":
        """Raise ``ValueError`` unless this is a (normalized) density operator."""
        if self.hermiticity_defect() > atol:
            raise ValueError("operator is not Hermitian")
        if self.min_eigenvalue() < -atol:
            raise ValueError("operator is not positive semidefinite")
        if normalized and abs(self.trace() - 1) > atol:
            raise ValueError(f"trace is {self.trace()!r}, expected 1")
        return self

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()

    def mix(self, other: "DensityOperator", weight: float) -> "DensityOperator":
        """``weight * self + (1 - weight) * other``."""
        if other.modes != self.modes:
            raise ValueError("mode mismatch")
        return DensityOperator(self.modes, weight * self.matrix + (1 - weight) * other.matrix)

    def __add__(self, other: "DensityOperator") -> "DensityOperator":
        if other.modes != self.modes:
            raise ValueError("mode mismatch")
        return DensityOperator(self.modes, self.matrix + other.matrix)

    def __mul__(self, c: float) -> "DensityOperator":
        return DensityOperator(self.modes, c * self.matrix)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"DensityOperator(modes={[m.name for m in self.modes]}, trace={self.trace():.6g})"


def fock_state(occupations: Mapping[ModeIndex, int],
               modes: Iterable[ModeIndex] = ALL_MODES) -> StateVector:
    """Pure occupation-number state; unspecified modes are in vacuum."""
    basis = basis_for(modes)
    psi = np.zeros(len(basis), dtype=complex)
    psi[basis.index(occupations)] = 1.0
    return StateVector(basis.modes, psi)


def vacuum(modes: Iterable[ModeIndex] = ALL_MODES) -> DensityOperator:
    return fock_state({}, modes).density()


def identity(modes: Iterable[ModeIndex] = ALL_MODES) -> np.ndarray:
    return np.eye(len(basis_for(modes)), dtype=complex)


def _product_indices(a_modes, b_modes):
    """Index triples (i_a, i_b, i_global) for product states within the cutoff."""
    ba, bb = basis_for(a_modes), basis_for(b_modes)
    glob = basis_for(ba.modes + bb.modes)
    pos_a = [glob.modes.index(m) for m in ba.modes]
    pos_b = [glob.modes.index(m) for m in bb.modes]
    ia, ib, ig = [], [], []
    for i, sa in enumerate(ba.states):
        for j, sb in enumerate(bb.states):
            if sum(sa) + sum(sb) > glob.cutoff:
                continue
            occ = [0] * len(glob.modes)
            for p, n in zip(pos_a, sa):
                occ[p] = n
            for p, n in zip(pos_b, sb):
                occ[p] = n
            ia.append(i)
            ib.append(j)
            ig.append(glob.index(occ))
    return glob, np.array(ia), np.array(ib), np.array(ig)


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    """Tensor product of operators on disjoint mode sets, in the global basis.

    Product states above the photon-number cutoff are dropped.
    """
    if set(a.modes) & set(b.modes):
        raise ValueError(f"overlapping mode sets {a.modes} and {b.modes}")
    glob, ia, ib, ig = _product_indices(a.modes, b.modes)
    out = np.zeros((len(glob), len(glob)), dtype=complex)
    out[np.ix_(ig, ig)] = a.matrix[np.ix_(ia, ia)] * b.matrix[np.ix_(ib, ib)]
    return DensityOperator(glob.modes, out)


def truncated_weight(a: DensityOperator, b: DensityOperator) -> float:
    """Trace lost by :func:`tensor` to the photon-number cutoff."""
    return a.trace() * b.trace() - tensor(a, b).trace()


def partial_trace(rho: DensityOperator, keep: Iterable[ModeIndex]) -> DensityOperator:
    keep = set(keep)
    if not keep:
        raise ValueError("keep must name at least one mode")
    if not keep <= set(rho.modes):
        raise ValueError(f"modes {keep - set(rho.modes)} not present in operator")
    if keep == set(rho.modes):
        return rho
    full = rho.basis
    kept = basis_for(keep)
    kpos = [full.modes.index(m) for m in kept.modes]
    tpos = [i for i, m in enumerate(full.modes) if m not in keep]

    groups: dict[tuple[int, ...], tuple[list[int], list[int]]] = {}
    for i, s in enumerate(full.states):
        traced = tuple(s[p] for p in tpos)
        g_full, g_kept = groups.setdefault(traced, ([], []))
        g_full.append(i)
        g_kept.append(kept.index([s[p] for p in kpos]))

    out = np.zeros((len(kept), len(kept)), dtype=complex)
    for g_full, g_kept in groups.values():
        out[np.ix_(g_kept, g_kept)] += rho.matrix[np.ix_(g_full, g_full)]
    return DensityOperator(kept.modes, out)


def expectation(rho: DensityOperator, op) -> float:
    """``Tr[op rho]`` for a Hermitian ``op``; raises on a non-negligible imaginary part."""
    m = op.matrix if isinstance(op, DensityOperator) else np.asarray(op)
    if m.shape != rho.matrix.shape:
        raise ValueError(f"dimension mismatch: {m.shape} vs {rho.matrix.shape}")
    value = np.einsum("ij,ji->", m, rho.matrix)
    if abs(value.imag) > tol.ALGEBRAIC:
        raise ValueError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)
