"""Optimized power against the quasistatic bound as the cycle time grows.

For each coupling and each multiple k of the adiabat time floor, maximize the
power over allocations of k * floor and report P / P_q.
"""
import argparse
import csv
import sys

from harmonic_otto.analysis import adiabat_time_floor, figure_config, optimal_allocation, quasistatic_power_bound


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="fig4")
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.6, 0.03])
    ap.add_argument("--multiples", type=float, nargs="+", default=[5, 6, 7, 8, 9, 10, 20])
    ap.add_argument("--starts", type=int, default=6)
    a = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["gamma", "k", "tau", "P", "P_q", "ratio", "tau_h", "tau_hc", "tau_c", "tau_ch"])
    for g in a.gammas:
        e, _ = figure_config(a.preset, g)
        floor = adiabat_time_floor(e)
        for k in a.multiples:
            tau = k * floor
            alloc, P = optimal_allocation(e, tau, starts=a.starts)
            Pq = quasistatic_power_bound(e, g, tau)
            w.writerow([g, k, f"{tau:.6g}", f"{P:.8g}", f"{Pq:.8g}", f"{P / Pq:.5f}",
                        *(f"{x:.6g}" for x in alloc.as_tuple())])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
