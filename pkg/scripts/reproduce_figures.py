"""Regenerate the figure data as CSV/JSON through the command-line entry point.

    python3 scripts/reproduce_figures.py --out results --n 5000
"""
import argparse
import pathlib

from harmonic_otto.cli import main as cli

HERE = pathlib.Path(__file__).resolve().parent.parent / "configs"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--n", type=int, default=None, help="override sweep size")
    a = ap.parse_args(argv)
    out = pathlib.Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    extra = [f"n={a.n}"] if a.n else []
    jobs = [
        ("simulate", "fig1.cfg", "fig1_trajectory.csv", []),
        ("limit-cycle", "fig1.cfg", "fig1_limit_cycle.json", []),
        ("oracle-check", "fig1.cfg", "fig1_oracle.json", []),
        ("simulate", "fig3.cfg", "fig3_trajectory.csv", []),
        ("analyze", "fig4_sweep.cfg", "fig4_analysis.json", []),
        ("sweep", "fig4_sweep.cfg", "fig4_sweep.csv", extra),
        ("sweep", "fig4_weak.cfg", "fig4_weak_sweep.csv", extra),
        ("sweep", "fig6_sweep.cfg", "fig6_sweep.csv", extra),
    ]
    for cmd, cfg, name, over in jobs:
        rc = cli([cmd, *over, "-c", str(HERE / cfg), "-o", str(out / name)])
        print(f"{cmd:13s} {cfg:16s} -> {out / name}  (exit {rc})")
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
