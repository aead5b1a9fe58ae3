"""Command-line entry point: ``qndsim {povm,fidelity,sweep,sample}``.

Exit codes: 0 success, 1 computational failure (e.g. conditioning on an
outcome that never occurs), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from qndsim import tolerances as tol
from qndsim.analysis import (
    MEASURED_OUTCOMES, FidelityReport, OperatingMode, conditioning_pattern,
    fidelity_report, qnd_numerator, zeta_grid,
)
from qndsim.config import DEFAULT, ConfigError, ScenarioConfig, load_config
from qndsim.detection import (
    Outcome, completeness_defect, conditional_signal_state, pattern_probability, povm_element,
)
from qndsim.errors import ConditioningError
from qndsim.montecarlo import estimate_fidelities, sample_patterns

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

CSV_COLUMNS = (
    ["zeta", "f_qnd_closed", "f_qnd_trace", "f_m"]
    + [f"coinc_{s.value}_{m.value}" for s in MEASURED_OUTCOMES for m in MEASURED_OUTCOMES]
    + [f"qnd_{m.value}" for m in MEASURED_OUTCOMES]
)


class UsageError(Exception):
    pass


def fmt(x: float | None) -> str:
    if x is None:
        return ""
    return format(float(x) + 0.0, f".{tol.CSV_DIGITS}g")


def csv_row(report: FidelityReport) -> list[str]:
    row = [report.zeta, report.f_qnd_closed, report.f_qnd_trace, report.f_m]
    row += [report.coincidence[s, m] for s in MEASURED_OUTCOMES for m in MEASURED_OUTCOMES]
    marginal = report.qnd.meter_marginal()
    row += [marginal[m] for m in MEASURED_OUTCOMES]
    return [fmt(x) for x in row]


def write_csv(reports: Sequence[FidelityReport], out: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(csv_row(r))
    try:
        with open(out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from None


def _zeta(text: str) -> float:
    try:
        z = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= z <= 1.0:
        raise argparse.ArgumentTypeError(f"efficiency must lie in [0, 1], got {z}")
    return z


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _seed(text: str) -> int:
    n = int(text)
    if not 0 <= n < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return n


def _scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else DEFAULT
    if getattr(args, "zeta", None) is not None:
        cfg = cfg.with_zeta(args.zeta)
    if getattr(args, "mode", None):
        cfg = ScenarioConfig(cfg.k, cfg.detector, OperatingMode(args.mode), cfg.scenario,
                             cfg.name, cfg.description)
    return cfg


def _matrix_lines(m: np.ndarray) -> list[str]:
    return ["  [" + "  ".join(f"{x:8.6f}" for x in row) + " ]" for row in m.real]


def cmd_povm(args, out) -> int:
    e0 = povm_element(Outcome.NO_CLICK, args.zeta).matrix
    e1 = povm_element(Outcome.CLICK, args.zeta).matrix
    defect = completeness_defect(args.zeta)
    print(f"detector efficiency zeta = {args.zeta:g}", file=out)
    print("E^(0) (no click) on {|0>, |1>, |2>}:", file=out)
    print("\n".join(_matrix_lines(e0)), file=out)
    print("E^(1) (click):", file=out)
    print("\n".join(_matrix_lines(e1)), file=out)
    print(f"completeness defect ||E0 + E1 - 1||_inf = {defect:.3e}", file=out)
    return EXIT_OK if defect <= tol.ROUND_TRIP else EXIT_FAILURE


def cmd_fidelity(args, out) -> int:
    cfg = _scenario(args)
    rho = cfg.predetection_state()
    report = fidelity_report(rho, cfg.k, cfg.detector)
    cond = conditioning_pattern(cfg.k)
    p_cond, signal = conditional_signal_state(rho, cond, cfg.detector)

    print(f"scenario: {cfg.name}" + (f" ({cfg.description})" if cfg.description else ""), file=out)
    print(f"input polarization k = {cfg.k.value}, zeta = {cfg.detector.zeta:g}", file=out)
    print("F_M (coincidence)            = "
          + (f"{report.f_m:.9f}" if report.f_m is not None else "undefined (no coincidences)"),
          file=out)
    print(f"F_QND (trace formula)        = {report.f_qnd_trace:.9f}", file=out)
    print(f"F_QND (closed form 1/(2-z))  = {report.f_qnd_closed:.9f}", file=out)
    print(f"joint trace (unnormalized)   = {qnd_numerator(rho, cfg.k, cfg.detector):.9f}", file=out)
    print(f"P(meter reports {cfg.k.value})          = {p_cond:.9f}", file=out)
    print(f"signal state | meter {cfg.k.value}: diag = "
          + ", ".join(f"{signal.basis.label(i)}:{p:.6f}"
                    for i, p in enumerate(signal.diagonal()) if p > tol.ALGEBRAIC),
          file=out)
    print("\ncoincidence table (both arms detected):", file=out)
    print(report.coincidence.format(), file=out)
    print("\nQND table (meter only):", file=out)
    print(report.qnd.format(), file=out)
    if args.out:
        write_csv([report], Path(args.out))
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    if args.zeta_min > args.zeta_max:
        raise UsageError(f"--zeta-min {args.zeta_min} exceeds --zeta-max {args.zeta_max}")
    cfg = _scenario(args)
    rho = cfg.predetection_state()
    reports = [fidelity_report(rho, cfg.k, float(z))
               for z in zeta_grid(args.zeta_min, args.zeta_max, args.steps)]
    write_csv(reports, Path(args.out))
    print(f"wrote {len(reports)} rows to {args.out}", file=out)
    return EXIT_OK


def cmd_sample(args, out) -> int:
    cfg = _scenario(args)
    rho = cfg.predetection_state()
    arms = cfg.mode.arms
    report = sample_patterns(rho, cfg.detector, args.shots, args.seed, arms)
    exact = fidelity_report(rho, cfg.k, cfg.detector)
    est = estimate_fidelities(report, cfg.k)

    print(f"scenario: {cfg.name}, mode = {cfg.mode.value}, zeta = {cfg.detector.zeta:g}, "
          f"shots = {args.shots}, seed = {args.seed}", file=out)
    print(f"{'pattern':<24}{'count':>9}{'estimate':>12}{'stderr':>11}{'exact':>12}", file=out)
    se = report.standard_errors()
    for pattern, count in sorted(report.pattern_counts.items()):
        f = count / args.shots
        p = pattern_probability(rho, pattern, cfg.detector)
        print(f"{pattern.label():<24}{count:>9d}{f:>12.6f}{se[pattern]:>11.6f}{p:>12.6f}", file=out)
    n_cond = sum(c for p, c in report.pattern_counts.items()
                 if all(p[m] is o for m, o in conditioning_pattern(cfg.k).outcomes))
    f_se = math.sqrt(est.f_qnd_trace * (1 - est.f_qnd_trace) / n_cond)
    print(f"F_QND estimate = {est.f_qnd_trace:.6f} +/- {f_se:.6f}   "
          f"exact = {exact.f_qnd_trace:.6f}", file=out)
    if est.f_m is not None:
        print(f"F_M estimate   = {est.f_m:.6f}   exact = {fmt(exact.f_m) or 'undefined'}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qndsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("povm", help="print detector POVM elements and their completeness defect")
    p.add_argument("--zeta", type=_zeta, required=True)
    p.set_defaults(func=cmd_povm)

    p = sub.add_parser("fidelity", help="exact F_M, F_QND and probability tables")
    p.add_argument("--config")
    p.add_argument("--zeta", type=_zeta, help="override the config's detector efficiency")
    p.add_argument("--mode", choices=[m.value for m in OperatingMode])
    p.add_argument("--out", help="also write a one-row CSV")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("sweep", help="CSV of fidelities over a uniform efficiency grid")
    p.add_argument("--zeta-min", type=_zeta, required=True)
    p.add_argument("--zeta-max", type=_zeta, required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", help="Monte Carlo click-pattern sampling")
    p.add_argument("--config")
    p.add_argument("--zeta", type=_zeta)
    p.add_argument("--mode", choices=[m.value for m in OperatingMode])
    p.add_argument("--shots", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=42)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (ConfigError, UsageError) as exc:
        print(f"qndsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConditioningError as exc:
        print(f"qndsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
