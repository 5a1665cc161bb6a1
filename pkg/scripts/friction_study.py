"""Friction work of an infinitely conducting cycle versus adiabat speed.

Compares the closed form at high temperature with the full integral and with
its average over the last period of each adiabat.  Writes CSV to stdout.
"""
import argparse
import csv
import sys

from harmonic_otto.analysis import averaged_friction_work
from harmonic_otto.cycle import EngineSpec
from harmonic_otto.propagators import friction_work_closed_form


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.5, 0.2, 0.1, 0.05, 0.02])
    ap.add_argument("--omega-c", type=float, default=0.01)
    ap.add_argument("--compression", type=float, default=2.0)
    ap.add_argument("--T-h", type=float, default=5.0)
    ap.add_argument("--T-c", type=float, default=1.0)
    a = ap.parse_args(argv)
    e = EngineSpec.make(a.compression * a.omega_c, a.omega_c, a.T_h, a.T_c, 1.0)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha_over_omega_c", "closed_form", "end_period_average", "integral", "ratio"])
    for r in a.ratios:
        cf = friction_work_closed_form(e, r * a.omega_c, high_temperature=True)
        sim = averaged_friction_work(e, r, high_temperature=True)
        w.writerow([r, f"{cf:.8g}", f"{sim['end_period_average']:.8g}", f"{sim['integral']:.8g}",
                    f"{sim['end_period_average'] / cf:.5f}"])


if __name__ == "__main__":
    main()
