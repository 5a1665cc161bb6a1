"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdicts are repeated in
the terminal summary.
"""
import hashlib
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from harmonic_otto import analysis as an
from harmonic_otto.cycle import (
    EngineSpec,
    TimeAllocation,
    cycle_metrics,
    limit_cycle,
    trajectory_sample,
)
from harmonic_otto.fock import (
    canonical_density,
    evolve_adiabat,
    evolve_isochore,
    expectations,
    oracle_limit_cycle,
    reconstruct_density,
    trace_distance,
)
from harmonic_otto.propagators import (
    AdiabatSchedule,
    adiabat_map_numeric,
    friction_work_closed_form,
)
from harmonic_otto.state import (
    BathSpec,
    GaussianParams,
    StateVector,
    casimir,
    chi_from_product_params,
    expectations_from_params,
    params_from_expectations,
)

FIG1 = EngineSpec.make(2.0, 1.0, 5.0, 1.0, 0.03)
FIG1_TAU = TimeAllocation(6.0, 1.0, 12.0, 1.0)
C_GRID = np.round(np.arange(1.2, 3.5 + 1e-9, 0.02), 10)


def verdict(n, checks):
    """checks: list of (label, ok, detail).  Prints one line and asserts."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{lab}={'ok' if good else 'FAIL'} ({d})" for lab, good, d in checks)
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def fig1_run():
    t0 = time.perf_counter()
    lc = limit_cycle(FIG1, FIG1_TAU, "numeric")
    oc = oracle_limit_cycle(FIG1, FIG1_TAU)
    elapsed = time.perf_counter() - t0
    return lc, oc, elapsed


def test_criterion_01_oracle_equivalence(fig1_run):
    lc, oc, elapsed = fig1_run
    errs = {k: float(np.max(np.abs(s.scaled() - oc.corners[k].scaled())) / np.linalg.norm(s.scaled()))
            for k, s in lc.corners.items()}
    worst = max(errs.values())
    verdict(1, [
        ("corners", worst <= 1e-5, f"max rel err {worst:.2e} at n={oc.n_max}, {oc.n_cycles} cycles"),
        ("runtime", elapsed < 300, f"{elapsed:.1f}s"),
    ])


def test_criterion_02_otto_efficiency():
    e = EngineSpec.make(2.0, 1.0, 5.0, 1.0, 1.0)
    full = TimeAllocation(60.0, 1.0, 60.0, 1.0)
    eta_q = cycle_metrics(limit_cycle(e, full, "quasistatic"), e, full).efficiency
    # |alpha|/omega <= 1e-3 on both adiabats (largest at omega_c)
    tau_adi = np.log(2.0) / 1e-3
    slow = TimeAllocation(60.0, tau_adi, 60.0, tau_adi)
    eta_n = cycle_metrics(limit_cycle(e, slow, "numeric"), e, slow, with_corners=False).efficiency
    verdict(2, [
        ("quasistatic", abs(eta_q - 0.5) <= 1e-6, f"eta={eta_q:.12f}"),
        ("numeric", abs(eta_n - 0.5) <= 1e-3, f"eta={eta_n:.6f}"),
    ])


def _fig4(C, gamma=0.6):
    wc = 0.025
    return EngineSpec.make(C * wc, wc, 1.0, 0.25, gamma)


def test_criterion_03_endoreversible_optimum():
    g, tau_iso = 0.6, 20.0
    th, tc = an.optimal_time_partition(g, g, tau_iso)
    work = np.array([-an.quasistatic_work(_fig4(C), g * tc, g * th) for C in C_GRID])
    C_star = float(C_GRID[np.argmax(work)])
    e = _fig4(C_star)
    alloc = TimeAllocation(th, 1.0, tc, 1.0)
    eta = cycle_metrics(limit_cycle(e, alloc, "quasistatic"), e, alloc).efficiency
    target = 1 - np.sqrt(0.25)
    verdict(3, [
        ("argmax", abs(C_star - 2.0) <= 0.02, f"C*={C_star:.2f}"),
        ("efficiency", abs(eta - target) <= 0.02, f"eta={eta:.6f} vs {target}"),
    ])


def test_criterion_04_sudden_optimum():
    r = 4.0
    alloc = TimeAllocation(100.0, 0.0, 100.0, 0.0)   # Gamma tau = 60: endpoints equilibrated
    res = []
    for C in C_GRID:
        e = _fig4(C)
        res.append(cycle_metrics(limit_cycle(e, alloc, "sudden"), e, alloc, with_corners=False))
    i = int(np.argmax([-m.W for m in res]))
    C_star, eta = float(C_GRID[i]), res[i].efficiency
    s = np.sqrt(1 / r)
    eta_ref = (1 - s) / (2 + s)
    W0 = an.sudden_work(EngineSpec.make(np.sqrt(r), 1.0, r, 1.0, 1.0), high_temperature=True)
    verdict(4, [
        ("argmax", abs(C_star - r ** 0.25) <= 0.02, f"C*={C_star:.2f} vs {r ** 0.25:.4f}"),
        ("efficiency", abs(eta - eta_ref) <= 1e-3, f"eta={eta:.6f} vs {eta_ref:.6f}"),
        ("W_s(sqrt r)", abs(W0) <= 1e-10, f"{W0:.1e}"),
    ])


def test_criterion_05_time_allocation():
    checks = []
    worst = 0.0
    for g, tau in ((0.03, 30.0), (0.6, 4.0), (1.0, 0.5), (2.0, 17.0)):
        th, tc = an.maximize_transport(g, g, tau)
        worst = max(worst, abs(th - tc))
    checks.append(("tau_h=tau_c", worst <= 1e-8, f"max |tau_h-tau_c|={worst:.1e}"))
    g, tau_adi = 1.0, 0.03
    x = an.optimal_isochore_allocation(g, tau_adi)
    res = abs(2 * x + g * tau_adi - 2 * np.sinh(x))
    checks.append(("ftf residual", res < 1e-12, f"x={x:.12f}, residual {res:.1e}"))
    xs = np.linspace(1e-3, 3.0, 300001)
    ppt = np.tanh(xs / 2) / (2 * xs / g + tau_adi)
    x_grid = xs[np.argmax(ppt)]
    dx = xs[1] - xs[0]
    checks.append(("F/tau scan", abs(x_grid - x) <= dx, f"grid argmax {x_grid:.5f}, step {dx:.0e}"))
    verdict(5, checks)


def test_criterion_06_power_bound():
    checks = []
    for g in (0.6, 0.03):
        e, _ = an.figure_config("fig4", g)
        recs = an.random_sweep(e, None, 2000, seed=6)
        q = [r for r in recs if r.tag == "quasistatic"]
        worst = max(r.P / an.quasistatic_power_bound(e, g, r.tau_total) for r in q)
        checks.append((f"sampled G={g}", bool(q) and worst <= 1.01, f"{len(q)} records, max P/P_q={worst:.6f}"))
    for g in (0.6, 0.03):
        e, _ = an.figure_config("fig4", g)
        floor = an.adiabat_time_floor(e)
        ratios = []
        for k in (5, 10, 20):
            _, P = an.optimal_allocation(e, k * floor, starts=6)
            ratios.append(P / an.quasistatic_power_bound(e, g, k * floor))
        ok = all(abs(x - 1) <= 0.02 for x in ratios)
        checks.append((f"optimal G={g}", ok, "P/P_q at 5,10,20 x floor = " + ", ".join(f"{x:.4f}" for x in ratios)))
    verdict(6, checks)


def test_criterion_07_second_law():
    # allocations whose cycle map has rho >= 1 have no limit cycle and are
    # drawn past until 10^4 genuine limit cycles are collected
    target = 10000
    configs = [(name, g) for name in ("fig4", "fig5", "fig6") for g in (0.6, 0.03)]
    per = -(-target // len(configs))
    n_total, worst, not_engine, unstable, failed = 0, np.inf, 0, 0, 0
    for name, g in configs:
        e, _ = an.figure_config(name, g)
        got, n, seed = 0, per, 7
        while got < per:
            for r in an.random_sweep(e, None, n, seed=seed):
                if r.tag == "unstable":
                    unstable += 1
                    continue
                if r.tag == "failed":
                    failed += 1
                    continue
                got += 1
                worst = min(worst, r.dS_u)
                not_engine += not (r.Q_h > 0 and r.W < 0)
            n, seed = max(per - got, 1) * 2, seed + 1000
        n_total += got
    verdict(7, [
        ("dS_u", worst >= -1e-12 and failed == 0, f"min dS_u={worst:.3e} over {n_total} limit cycles, {failed} solver failures"),
        ("coverage", n_total >= target and not_engine > 0,
         f"{not_engine} not-an-engine cycles; {unstable} draws without a limit cycle skipped"),
    ])


def test_criterion_08_entropy_ordering(fig1_run):
    lc, _, _ = fig1_run
    tr = trajectory_sample(FIG1, FIG1_TAU, "numeric", dt=0.01, lc=lc)
    gap = float(np.min(tr.S_e - tr.S_vn))
    drift = max(float(np.ptp(tr.S_vn[tr.branch == b])) for b in ("hc", "ch"))
    e3, a3 = an.figure_config("fig3")
    tr3 = trajectory_sample(e3, a3, "numeric", dt=0.02)
    g3 = tr3.S_e - tr3.S_vn
    iso = []
    for b in ("hot", "cold"):
        s = g3[tr3.branch == b]
        iso.append((s[0], s[-1]))
    verdict(8, [
        ("S_E>=S_VN", gap >= -1e-9, f"min gap {gap:.3e} over {len(tr)} samples"),
        ("S_VN adiabats", drift <= 1e-8, f"max drift {drift:.1e}"),
        ("fig3 gap", all(end < start for start, end in iso),
         ", ".join(f"{b}: {s:.4f}->{t:.4f}" for b, (s, t) in zip(("hot", "cold"), iso))),
    ])


def test_criterion_09_adiabat_invariant():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        w0 = float(np.exp(rng.uniform(np.log(0.1), np.log(3.0))))
        ratio = float(np.exp(rng.uniform(np.log(0.25), np.log(4.0))))
        a_over_w = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e2))))
        w1 = w0 * ratio
        sched = AdiabatSchedule(w0, w1, abs(np.log(ratio)) / (a_over_w * w0))
        nu, r, th = 0.5 + rng.uniform(0, 10), rng.uniform(0, 2), rng.uniform(0, 2 * np.pi)
        X = nu * w0
        v = np.array([X * np.cosh(r), X * np.sinh(r) * np.cos(th), 2 / w0 * X * np.sinh(r) * np.sin(th)])
        out = adiabat_map_numeric(sched)(v)
        x_in = casimir(StateVector.from_array(v, w0)) / w0
        x_out = casimir(StateVector.from_array(out, w1)) / w1
        worst = max(worst, abs(x_out - x_in) / x_in)
    verdict(9, [("X/omega", worst <= 1e-8, f"max rel drift {worst:.2e} over 100 schedules")])


def test_criterion_10_friction(fig1_run):
    lc, _, _ = fig1_run
    m = cycle_metrics(lc, FIG1, FIG1_TAU, with_corners=False)
    rng = np.random.default_rng(10)
    fr_min = m.friction
    for _ in range(50):
        e = EngineSpec.make(float(rng.uniform(1.2, 3.0)), 1.0, float(rng.uniform(1.5, 10)), 1.0,
                            float(rng.uniform(0.01, 1.0)))
        alloc = TimeAllocation(*rng.uniform(0.1, 20.0, 4))
        fr_min = min(fr_min, cycle_metrics(limit_cycle(e, alloc, "exact"), e, alloc, with_corners=False).friction)
    e = EngineSpec.make(0.02, 0.01, 5.0, 1.0, 1.0)
    wf = friction_work_closed_form(e, 0.5 * 0.01, high_temperature=True)
    sim = an.averaged_friction_work(e, 0.5, high_temperature=True)["end_period_average"]
    ub = an.friction_upper_bound(EngineSpec.make(2.0, 1.0, 5.0, 1.0, 1.0), high_temperature=True)
    checks = [
        ("W_f>=0", fr_min >= 0, f"min {fr_min:.3e} over fig1 + 50 random cycles"),
        ("closed form", abs(wf - 0.164063) <= 1e-6, f"{wf:.7f}"),
        ("vs simulation", abs(sim / wf - 1) <= 0.10, f"phase-averaged simulated {sim:.5f}, ratio {sim / wf:.4f}"),
        ("upper bound", abs(ub - 1.125) <= 1e-9, f"{ub:.12f}"),
    ]
    worst = 0.0
    for C in (1.5, 2.0, 3.0):
        for hi in (False, True):
            eC = EngineSpec.make(C, 1.0, 5.0, 1.0, 1.0)
            diff = an.sudden_work(eC, hi) - an.quasistatic_work(eC, np.inf, np.inf, hi)
            worst = max(worst, abs(an.friction_upper_bound(eC, hi) - diff))
    checks.append(("bound = W_s - W_q", worst <= 1e-9, f"max diff {worst:.1e}"))
    verdict(10, checks)


def test_criterion_11_hierarchy():
    r = np.linspace(1.0, 100.0, 1000)
    s, q, c = an.efficiency_hierarchy(r)
    ok = bool(np.all(s <= q) and np.all(q <= c))
    verdict(11, [("eta_s<=eta_q<=eta_c", ok, f"{len(r)} grid points on [1, 100]")])


def _random_params(rng):
    w = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    bw = float(np.exp(rng.uniform(np.log(0.02), np.log(6.0))))
    mag = rng.uniform(0, 0.9) * 0.5 * np.expm1(bw)
    return GaussianParams(bw / w, mag * np.exp(1j * rng.uniform(0, 2 * np.pi))), w


def test_criterion_12_reconstruction():
    rng = np.random.default_rng(12)
    rt, appb = 0.0, 0.0
    for _ in range(1000):
        p, w = _random_params(rng)
        s = expectations_from_params(p, w)
        back = expectations_from_params(params_from_expectations(s), w)
        rt = max(rt, np.max(np.abs(back.scaled() - s.scaled())) / s.energy)
        e, q, g = np.exp(p.beta * w), np.exp(-p.beta * w), complex(p.gamma)
        prod = np.array([e - 4 * q * abs(g) ** 2, -2 * q * np.conj(g), 2 * q * g, q])
        c = chi_from_product_params(p, w)
        sq = np.sqrt(complex((w * c.chi2) ** 2 - 4 * abs(c.chi1) ** 2))
        shs = np.sinh(sq) / sq if sq != 0 else 1.0
        expsum = np.array([np.cosh(sq) - c.chi2 * w * shs, -2 * np.conj(c.chi1) * shs,
                           2 * c.chi1 * shs, np.cosh(sq) + c.chi2 * w * shs])
        appb = max(appb, np.max(np.abs(prod - expsum)) / max(1.0, np.max(np.abs(prod))))
    n = 80
    td = 0.0
    for b in ((0.9, 0.2, 0.15), (0.5, -0.1, 0.05), (1.5, 0.4, -0.3)):
        rho = canonical_density(*b, 1.0, n)
        for out, w in ((evolve_isochore(rho, BathSpec(1.3, 0.1), 1.0, 2.5), 1.0),
                       (evolve_adiabat(rho, AdiabatSchedule(1.0, 1.4, 0.8)), 1.4)):
            rebuilt = reconstruct_density(expectations(out, w), n)
            td = max(td, trace_distance(out, rebuilt))
    verdict(12, [
        ("round trip", rt <= 1e-10, f"max rel {rt:.1e} over 1000 draws"),
        ("exponential identities", appb <= 1e-9, f"max rel {appb:.1e} over 1000 draws"),
        ("canonical invariance", td < 1e-6, f"max trace distance {td:.1e}"),
    ])


def _sweep_hash(workers):
    e, _ = an.figure_config("fig4")
    recs = an.random_sweep(e, None, 500, seed=1, workers=workers)
    return hashlib.sha256(repr([an.record_dict(r) for r in recs]).encode()).hexdigest()


def test_criterion_13_determinism():
    h = [_sweep_hash(1), _sweep_hash(1), _sweep_hash(2)]
    verdict(13, [("sha256", len(set(h)) == 1, h[0][:16])])
