"""Command line: simulate, limit-cycle, sweep, analyze, oracle-check.

Exit codes: 0 ok, 2 configuration error, 3 solver error, 4 oracle mismatch.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from . import analysis as an
from .config import ConfigError, as_dict, explain, load_config
from .cycle import (
    ConvergenceError,
    NoLimitCycleError,
    cycle_metrics,
    iterate_to_limit,
    limit_cycle,
    trajectory_sample,
)
from .fock import OracleConvergenceError, TruncationError, oracle_limit_cycle
from .propagators import IntegrationError
from .state import thermal_state, von_neumann_entropy

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ORACLE = 0, 2, 3, 4

SIMULATE_COLUMNS = ["t", "branch", "omega", "H", "L", "D", "S_vn", "S_e", "T_int",
                    "heat_current", "power"]
SWEEP_COLUMNS = ["seed_index", "tau_h", "tau_hc", "tau_c", "tau_ch", "tau_total",
                 "W", "Qh", "Qc", "eta", "P", "dSu", "tag"]


def fmt(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _clean(obj):
    """JSON-safe copy: numpy scalars to float, non-finite floats to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


@contextmanager
def _sink(path: str):
    if path in ("-", ""):
        yield sys.stdout
    else:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            yield fh


def _write_csv(path, header, rows):
    with _sink(path) as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")


def _write_json(path, obj):
    with _sink(path) as fh:
        fh.write(json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n")


# ------------------------------------------------------------- commands

def cmd_simulate(cfg) -> int:
    engine, alloc = cfg.engine(), cfg.allocation()
    tr = trajectory_sample(engine, alloc, cfg.adiabat_mode, cfg.dt)
    s = cfg.omega_c if cfg.units == "omega_c" else 1.0
    rows = []
    for i in range(len(tr)):
        H, L, D = tr.states[i]
        rows.append([tr.t[i] * s, tr.branch[i], tr.omega[i] / s, H / s, L / s, D,
                     tr.S_vn[i], tr.S_e[i], tr.T_int[i] / s,
                     tr.heat_current[i] / s ** 2, tr.power[i] / s ** 2])
    _write_csv(cfg.output, SIMULATE_COLUMNS, rows)
    return EXIT_OK


def cmd_limit_cycle(cfg) -> int:
    engine, alloc = cfg.engine(), cfg.allocation()
    lc = limit_cycle(engine, alloc, cfg.adiabat_mode)
    m = cycle_metrics(lc, engine, alloc)
    it = iterate_to_limit(engine, alloc, thermal_state(engine.omega_c, engine.cold.temperature),
                          adiabat_mode=cfg.adiabat_mode)
    report = {
        "config": as_dict(cfg),
        "corners": {k: {"H": v.energy, "L": v.lagrangian, "D": v.correlation, "omega": v.omega}
                    for k, v in lc.corners.items()},
        "cycle_map": {"matrix": lc.cycle_map.matrix.tolist(), "offset": lc.cycle_map.offset.tolist()},
        "spectral_radius": lc.spectral_radius,
        "metrics": m.as_dict(),
        "convergence": {
            "fixed_point_residual": lc.residual,
            "cycles_from_cold_equilibrium": it.n_cycles,
            "contraction_estimate": it.contraction_estimate(),
        },
    }
    _write_json(cfg.output, report)
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    engine = cfg.engine()
    recs = an.random_sweep(engine, cfg.sweep_ranges(), cfg.n, cfg.seed, cfg.sweep_mode,
                           workers=cfg.workers or None,
                           thresholds=(cfg.sudden_threshold, cfg.quasistatic_threshold))
    rows = [[r.seed_index, r.tau_h, r.tau_hc, r.tau_c, r.tau_ch, r.tau_total,
             r.W, r.Q_h, r.Q_c, r.eta, r.P, r.dS_u, r.tag] for r in recs]
    _write_csv(cfg.output, SWEEP_COLUMNS, rows)
    return EXIT_OK


def analyze_report(cfg) -> dict:
    engine = cfg.engine()
    gh, gc = cfg.gamma_h, cfg.gamma_c
    xh, xc = gh * cfg.tau_h, gc * cfg.tau_c
    r = engine.temperature_ratio
    eta_s, eta_q, eta_c = an.efficiency_hierarchy(r)
    tau_iso = cfg.tau_h + cfg.tau_c
    floor = an.adiabat_time_floor(engine)
    taus = floor * np.geomspace(1.0, 100.0, 25)
    out = {
        "G_W": an.g_work(engine), "G_W_highT": an.g_work(engine, True),
        "F": an.f_transport(xc, xh),
        "W_q": an.quasistatic_work(engine, xc, xh),
        "G_S": an.g_entropy(engine), "G_S_highT": an.g_entropy(engine, True),
        "dS_u_quasistatic": an.entropy_production_quasistatic(engine, xc, xh),
        "optimal_partition": dict(zip(("tau_h", "tau_c"), an.optimal_time_partition(gh, gc, tau_iso))),
        "adiabat_time_floor": floor,
        "optimal_isochore_x": an.optimal_isochore_allocation(gh, floor) if gh == gc else None,
        "P_q": {"tau": taus, "P": an.quasistatic_power_bound(engine, gh, taus)},
        "sudden": {
            **an.sudden_work_diagnostics(engine),
            "efficiency": an.sudden_cycle(engine).efficiency,
            "optimal_work_highT": an.sudden_optimal_work(cfg.T_h, cfg.T_c),
            "optimal_work_highT_printed": an.sudden_optimal_work(cfg.T_h, cfg.T_c, printed=True),
        },
        "friction_upper_bound": an.friction_upper_bound(engine),
        "friction_upper_bound_highT": an.friction_upper_bound(engine, True),
        "efficiency": {"eta_s": eta_s, "eta_q": eta_q, "eta_c": eta_c,
                       "eta_otto": 1 - 1 / engine.compression},
        "optimal_compression": {"quasistatic": an.optimal_compression(cfg.T_h, cfg.T_c),
                                "sudden": an.optimal_compression(cfg.T_h, cfg.T_c, regime="sudden")},
    }
    return out


def cmd_analyze(cfg) -> int:
    _write_json(cfg.output, analyze_report(cfg))
    return EXIT_OK


def cmd_oracle_check(cfg) -> int:
    engine, alloc = cfg.engine(), cfg.allocation()
    lc = limit_cycle(engine, alloc, "numeric")
    oc = oracle_limit_cycle(engine, alloc, cfg.fock())
    rows, ok = {}, True
    for k, s in lc.corners.items():
        o = oc.corners[k]
        err = float(np.max(np.abs(s.scaled() - o.scaled())) / np.linalg.norm(s.scaled()))
        s_err = abs(von_neumann_entropy(s) - oc.entropies[k])
        passed = err <= cfg.oracle_rtol
        ok &= passed
        rows[k] = {"rel_error": err, "entropy_error": s_err, "pass": passed}
    report = {"n_max": oc.n_max, "cycles": oc.n_cycles, "tolerance": cfg.oracle_rtol,
              "corners": rows, "pass": ok}
    _write_json(cfg.output, report)
    return EXIT_OK if ok else EXIT_ORACLE


COMMANDS = {
    "simulate": cmd_simulate,
    "limit-cycle": cmd_limit_cycle,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harmonic-otto",
                                description="Quantum harmonic Otto engine simulator")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("overrides", nargs="*", metavar="key=value")
    p.add_argument("-c", "--config", help="flat key = value config file")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.add_argument("--explain", action="store_true", help="print the resolved configuration and exit")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.output:
        overrides.append(f"output={args.output}")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.explain:
        sys.stdout.write(explain(cfg))
        return EXIT_OK
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OracleConvergenceError, TruncationError) as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (NoLimitCycleError, IntegrationError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
