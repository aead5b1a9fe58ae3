"""JSON scenario files for the command line.

See the README for the field-by-field schema.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from qndsim.analysis import BadKind, OperatingMode, Reconstruction
from qndsim.detection import DetectorModel
from qndsim.fock import DensityOperator, ModeIndex, Polarization
from qndsim.optics import (
    Circuit, CircuitScenario, ModeUnitary, beam_splitter, phase_shift,
    unitarity_defect, wave_plate,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    k: Polarization
    detector: DetectorModel
    mode: OperatingMode
    scenario: Reconstruction | CircuitScenario
    name: str = "scenario"
    description: str = ""

    def predetection_state(self) -> DensityOperator:
        return self.scenario.predetection_state()

    def with_zeta(self, zeta: float) -> "ScenarioConfig":
        return ScenarioConfig(self.k, DetectorModel(zeta), self.mode, self.scenario,
                              self.name, self.description)


DEFAULT = ScenarioConfig(
    k=Polarization.H,
    detector=DetectorModel(0.65),
    mode=OperatingMode.QND,
    scenario=Reconstruction(),
    name="default",
    description="equal-weight reconstruction with an orthogonal photon missed by the meter",
)


class _Parser:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, message: str, key: str | None = None):
        line = None
        if key is not None:
            m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
            if m:
                line = self.text.count("\n", 0, m.start()) + 1
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {message}")

    def require(self, obj: dict, key: str, kind, parent: str = ""):
        if key not in obj:
            self.fail(f"missing field {parent + key!r}", parent.rstrip(".").split(".")[-1] or None)
        value = obj[key]
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            self.fail(f"field {parent + key!r} has the wrong type", key)
        return value

    def number(self, obj: dict, key: str, parent: str = "") -> float:
        return float(self.require(obj, key, (int, float), parent))

    def polarization(self, value: Any, key: str) -> Polarization:
        if value not in ("H", "V"):
            self.fail(f"{key} must be \"H\" or \"V\", got {value!r}", key)
        return Polarization(value)

    def mode_index(self, label: Any, key: str) -> ModeIndex:
        try:
            return ModeIndex.parse(str(label))
        except ValueError as exc:
            self.fail(str(exc), key)

    def detector(self, value: Any) -> DetectorModel:
        try:
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return DetectorModel(value)
            if isinstance(value, dict):
                overrides = {self.mode_index(m, "zeta"): float(z)
                             for m, z in value.items() if m != "default"}
                return DetectorModel(float(value.get("default", 1.0)), overrides)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            self.fail(str(exc), "zeta")
        self.fail("zeta must be a number or a per-detector object", "zeta")

    def reconstruction(self, k: Polarization, obj: Any) -> Reconstruction:
        if not isinstance(obj, dict):
            self.fail("reconstruction must be an object", "reconstruction")
        good = self.number(obj, "good_weight", "reconstruction.")
        bad = self.number(obj, "bad_weight", "reconstruction.")
        if good < 0 or bad < 0 or abs(good + bad - 1) > 1e-12:
            self.fail("good_weight and bad_weight must be non-negative and sum to 1", "good_weight")
        kind = obj.get("bad_kind", BadKind.ORTHOGONAL_MISSED.value)
        try:
            bad_kind = BadKind(kind)
        except ValueError:
            self.fail(f"unknown bad_kind {kind!r}; expected one of "
                      f"{[b.value for b in BadKind]}", "bad_kind")
        return Reconstruction(k, good, bad, bad_kind)

    def element(self, i: int, el: Any) -> ModeUnitary:
        where = f"circuit.elements[{i}]"
        if not isinstance(el, dict):
            self.fail(f"{where} must be an object", "elements")
        kind = self.require(el, "type", str, where + ".")
        params = el.get("params", {})
        targets = [self.mode_index(t, "targets") for t in el.get("targets", [])]
        try:
            if kind == "beam_splitter":
                if targets and sorted(targets) != list(ModeIndex):
                    self.fail(f"{where}: beam_splitter acts on all four modes", "targets")
                return beam_splitter(self.number(params, "theta_h", where + ".params."),
                                     self.number(params, "theta_v", where + ".params."))
            if kind == "wave_plate":
                parties = {m.party for m in targets}
                if len(targets) != 2 or len(parties) != 1:
                    self.fail(f"{where}: wave_plate targets the H and V modes of one party",
                              "targets")
                return wave_plate(parties.pop(), self.number(params, "angle", where + ".params."))
            if kind == "phase":
                if len(targets) != 1:
                    self.fail(f"{where}: phase targets exactly one mode", "targets")
                return phase_shift(targets[0], self.number(params, "phi", where + ".params."))
            if kind == "unitary":
                real = np.array(params["real"], dtype=float)
                imag = np.array(params.get("imag", np.zeros_like(real)), dtype=float)
                u = ModeUnitary(real + 1j * imag, tuple(targets), "unitary")
                if unitarity_defect(u.matrix) > 1e-10:
                    self.fail(f"{where}: matrix is not unitary", "params")
                return u
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            self.fail(f"{where}: {exc}", "params")
        self.fail(f"{where}: unknown element type {kind!r}", "type")

    def circuit(self, k: Polarization, obj: Any) -> CircuitScenario:
        if not isinstance(obj, dict):
            self.fail("circuit must be an object", "circuit")
        raw_input = self.require(obj, "input", dict, "circuit.")
        occupations = {self.mode_index(m, "input"): int(n) for m, n in raw_input.items()}
        if any(n < 0 for n in occupations.values()) or sum(occupations.values()) > 2:
            self.fail("circuit input must hold between 0 and 2 photons", "input")
        elements = self.require(obj, "elements", list, "circuit.")
        circuit = Circuit(tuple(self.element(i, el) for i, el in enumerate(elements)))
        return CircuitScenario(k, occupations, circuit)

    def parse(self) -> ScenarioConfig:
        try:
            data = json.loads(self.text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{self.source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            self.fail("top level must be an object")
        k = self.polarization(data.get("k", "H"), "k")
        detector = self.detector(data.get("zeta", 0.65))
        try:
            mode = OperatingMode(data.get("mode", "qnd"))
        except ValueError:
            self.fail("mode must be \"coincidence\" or \"qnd\"", "mode")
        has_rec, has_circ = "reconstruction" in data, "circuit" in data
        if has_rec == has_circ:
            self.fail("exactly one of 'reconstruction' and 'circuit' is required")
        scenario = (self.reconstruction(k, data["reconstruction"]) if has_rec
                    else self.circuit(k, data["circuit"]))
        return ScenarioConfig(k, detector, mode, scenario,
                              str(data.get("name", Path(self.source).stem)),
                              str(data.get("description", "")))


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    return _Parser(text, source).parse()


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))
