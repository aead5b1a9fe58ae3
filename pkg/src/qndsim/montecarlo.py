"""Shot-by-shot sampling of detector click patterns.

Every POVM element here is diagonal in the occupation basis, so a shot can
be simulated by drawing an occupation configuration from diag(rho) and then
detecting each photon independently with probability zeta; a detector
clicks if at least one of its photons is detected.  This is *not* valid for
observables with coherences in the occupation basis.

Randomness is counter based.  Shot ``i`` consumes the first output block of
Philox4x64-10 keyed by ``seed`` at counter ``i`` (numpy's
``Philox(key=seed, counter=i).random_raw(4)``).  Each 64-bit word ``w``
becomes the uniform ``(w >> 11) * 2**-53``.  Word 0 selects the occupation
configuration by inverse CDF over the basis order; words 1 and 2 are the
Bernoulli draws for the first and second monitored photon, with photons
ordered by detector mode.  Counts therefore do not depend on chunking or on
how many workers evaluate the shots.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from qndsim import tolerances as tol
from qndsim.analysis import (
    FidelityReport, OperatingMode, closed_form_qnd, conditioning_pattern,
    measurement_fidelity, table_from_patterns,
)
from qndsim.detection import (
    Arms, ClickPattern, DetectorModel, Outcome, as_model, pattern_operator_diagonal,
    all_patterns,
)
from qndsim.errors import ConditioningError
from qndsim.fock import DensityOperator, ModeIndex, Party, Polarization

Occupation = tuple[int, ...]
JointKey = tuple[Occupation, ClickPattern]

DEFAULT_CHUNK = 1 << 16
_WORDS_PER_SHOT = 4
_MAX_PHOTONS = 2


def _uniforms(seed: int, start: int, n: int) -> np.ndarray:
    raw = np.random.Philox(key=seed, counter=start).random_raw(n * _WORDS_PER_SHOT)
    return ((raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53).reshape(n, _WORDS_PER_SHOT)


@dataclass(frozen=True)
class EstimateReport:
    arms: Arms
    detector: DetectorModel
    modes: tuple[ModeIndex, ...]
    shots: int
    seed: int
    joint_counts: Mapping[JointKey, int]

    @property
    def pattern_counts(self) -> dict[ClickPattern, int]:
        out = {p: 0 for p in all_patterns(self.arms.detectors)}
        for (_, pattern), c in self.joint_counts.items():
            out[pattern] += c
        return out

    @property
    def occupation_counts(self) -> dict[Occupation, int]:
        out: dict[Occupation, int] = {}
        for (occ, _), c in self.joint_counts.items():
            out[occ] = out.get(occ, 0) + c
        return out

    def estimates(self) -> dict[ClickPattern, float]:
        return {p: c / self.shots for p, c in self.pattern_counts.items()}

    def standard_errors(self) -> dict[ClickPattern, float]:
        return {p: math.sqrt(f * (1 - f) / self.shots) for p, f in self.estimates().items()}

    def joint_frequencies(self) -> dict[JointKey, float]:
        return {key: c / self.shots for key, c in self.joint_counts.items()}


def _check_state(rho: DensityOperator) -> np.ndarray:
    diag = np.diag(rho.matrix)
    if np.max(np.abs(diag.imag)) > tol.ALGEBRAIC or np.min(diag.real) < -tol.ALGEBRAIC:
        raise ValueError("state diagonal is not a probability vector")
    if abs(diag.real.sum() - 1) > tol.ALGEBRAIC:
        raise ValueError(f"state is not normalized (trace {diag.real.sum():.12g})")
    return np.clip(diag.real, 0.0, None)


def _sample_chunk(start, n, seed, cdf, photon_det, efficiencies):
    u = _uniforms(seed, start, n)
    cfg = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(cdf) - 1)
    mask = np.zeros(n, dtype=np.int64)
    for j in range(_MAX_PHOTONS):
        det = photon_det[cfg, j]
        present = det >= 0
        hit = present & (u[:, 1 + j] < efficiencies[np.where(present, det, 0)])
        mask |= np.where(hit, 1 << np.where(present, det, 0), 0)
    return cfg, mask


def sample_patterns(rho: DensityOperator, zeta: float | DetectorModel, shots: int, seed: int,
                    arms: Arms = Arms.METER, chunk_size: int = DEFAULT_CHUNK,
                    workers: int = 1) -> EstimateReport:
    """Simulate ``shots`` detection events and tally (configuration, pattern) counts."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    model = as_model(zeta)
    probs = _check_state(rho)
    basis = rho.basis
    detectors = arms.detectors
    if not set(detectors) <= set(basis.modes):
        raise ValueError("state does not contain the detector modes")
    if max(sum(s) for s, p in zip(basis.states, probs) if p > 0) > _MAX_PHOTONS:
        raise ValueError("sampler supports at most two photons per shot")

    photon_det = np.full((len(basis), _MAX_PHOTONS), -1, dtype=np.int64)
    for i, occ in enumerate(basis.states):
        photons = [d for d, mode in enumerate(detectors)
                   for _ in range(occ[basis.modes.index(mode)])]
        photon_det[i, :len(photons)] = photons
    efficiencies = np.array([model.efficiency(m) for m in detectors])
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]

    starts = range(0, shots, chunk_size)
    job = lambda s: _sample_chunk(s, min(chunk_size, shots - s), seed, cdf,  # noqa: E731
                                  photon_det, efficiencies)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(job, starts))
    else:
        chunks = [job(s) for s in starts]

    n_masks = 1 << len(detectors)
    tally = np.zeros(len(basis) * n_masks, dtype=np.int64)
    for cfg, mask in chunks:
        tally += np.bincount(cfg * n_masks + mask, minlength=tally.size)

    joint: dict[JointKey, int] = {}
    for code in np.flatnonzero(tally):
        cfg, mask = divmod(int(code), n_masks)
        pattern = ClickPattern(tuple((m, Outcome((mask >> d) & 1)) for d, m in enumerate(detectors)))
        joint[(basis.states[cfg], pattern)] = int(tally[code])
    return EstimateReport(arms, model, basis.modes, shots, seed, joint)


def exact_joint_distribution(rho: DensityOperator, zeta: float | DetectorModel,
                             arms: Arms = Arms.METER) -> dict[JointKey, float]:
    """Exact P(configuration, pattern); the limit of ``joint_frequencies``."""
    probs = np.diag(rho.matrix).real
    out: dict[JointKey, float] = {}
    for pattern in all_patterns(arms.detectors):
        weights = pattern_operator_diagonal(pattern, rho.modes, zeta) * probs
        for i in np.flatnonzero(weights):
            out[(rho.basis.states[i], pattern)] = float(weights[i])
    return out


def _restrict(pattern: ClickPattern, modes) -> ClickPattern:
    return ClickPattern(tuple((m, o) for m, o in pattern.outcomes if m in modes))


def estimate_fidelities(report: EstimateReport | Mapping[JointKey, float], k: Polarization,
                        zeta: float | DetectorModel | None = None,
                        modes: tuple[ModeIndex, ...] | None = None,
                        input_dist=None) -> FidelityReport:
    """Fidelities from empirical (or injected exact) joint frequencies.

    The QND estimate is (shots where the meter reported ``k`` and the signal
    really held |k>) / (shots where the meter reported ``k``).
    """
    if isinstance(report, EstimateReport):
        freqs = report.joint_frequencies()
        model = report.detector
        modes = report.modes
    else:
        if zeta is None or modes is None:
            raise ValueError("zeta and modes are required for injected frequencies")
        freqs, model = dict(report), as_model(zeta)
    modes = tuple(modes)

    cond = conditioning_pattern(k)
    sk = modes.index(ModeIndex.of(Party.SIGNAL, k))
    sperp = modes.index(ModeIndex.of(Party.SIGNAL, k.orthogonal))
    numerator = denominator = 0.0
    pattern_freqs: dict[ClickPattern, float] = {}
    for (occ, pattern), f in freqs.items():
        pattern_freqs[pattern] = pattern_freqs.get(pattern, 0.0) + f
        if _restrict(pattern, cond.detectors) == cond:
            denominator += f
            if occ[sk] == 1 and occ[sperp] == 0:
                numerator += f
    if denominator <= 0:
        raise ConditioningError(f"meter outcome {k.value} was never observed")

    f_m = None
    detectors = {m for p in pattern_freqs for m in p.detectors}
    if any(m.party is Party.SIGNAL for m in detectors):
        try:
            table = table_from_patterns(pattern_freqs, OperatingMode.COINCIDENCE)
            f_m = measurement_fidelity(k if input_dist is None else input_dist, table)
        except ConditioningError:
            f_m = None
    perp = model.efficiency(ModeIndex.of(Party.METER, k.orthogonal))
    return FidelityReport(zeta=model.zeta, k=k, f_qnd_trace=numerator / denominator,
                          f_qnd_closed=closed_form_qnd(perp), f_m=f_m)
