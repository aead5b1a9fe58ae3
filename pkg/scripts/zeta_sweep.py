"""F_QND against detector efficiency for every shipped reconstruction, as CSV on stdout."""

import argparse
import csv
import sys

from qndsim.analysis import BadKind, Reconstruction, sweep
from qndsim.fock import Polarization

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--steps", type=int, default=20)
parser.add_argument("--good-weight", type=float, default=0.5)
args = parser.parse_args()

writer = csv.writer(sys.stdout, lineterminator="\n")
writer.writerow(["bad_kind", "zeta", "f_qnd_trace", "f_qnd_closed", "f_m"])
for kind in BadKind:
    scenario = Reconstruction(Polarization.H, args.good_weight, 1 - args.good_weight, kind)
    for r in sweep(1 / args.steps, 1.0, args.steps, scenario):
        writer.writerow([kind.value, f"{r.zeta:.12g}", f"{r.f_qnd_trace:.12g}",
                         f"{r.f_qnd_closed:.12g}", "" if r.f_m is None else f"{r.f_m:.12g}"])
