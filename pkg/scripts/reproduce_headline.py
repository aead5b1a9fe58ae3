"""Coincidence fidelity vs. non-post-selected QND fidelity at zeta = 0.65."""

import argparse

from qndsim.analysis import (
    BadKind, OperatingMode, Reconstruction, build_probability_table, closed_form_qnd,
    measurement_fidelity, qnd_fidelity,
)
from qndsim.fock import Polarization

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--zeta", type=float, default=0.65)
args = parser.parse_args()

k = Polarization.H
ideal = Reconstruction(k, 1.0, 0.0).predetection_state()
f_m = measurement_fidelity(k, build_probability_table(ideal, args.zeta, OperatingMode.COINCIDENCE))
print(f"zeta = {args.zeta}")
print(f"  F_M on the ideal state (coincidence counting): {f_m:.6f}")
for kind in BadKind:
    rho = Reconstruction(k, 0.5, 0.5, kind).predetection_state()
    print(f"  F_QND, equal-weight {kind.value:<18}: {qnd_fidelity(rho, k, args.zeta):.6f}")
print(f"  1 / (2 - zeta)                               : {closed_form_qnd(args.zeta):.6f}")
