"""Closed-form limits, time-allocation optima and random performance sweeps."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from .cycle import (
    EngineSpec,
    NoLimitCycleError,
    TimeAllocation,
    cycle_metrics,
    limit_cycle,
)
from .propagators import AdiabatSchedule, adiabat_map_sudden, adiabat_trajectory
from .state import BathSpec, equilibrium_energy

__all__ = [
    "g_work",
    "g_entropy",
    "f_transport",
    "quasistatic_work",
    "entropy_production_quasistatic",
    "optimal_time_partition",
    "maximize_transport",
    "optimal_isochore_allocation",
    "isochore_allocation_asymptotic",
    "optimal_tau_residual",
    "adiabat_time_floor",
    "quasistatic_power_bound",
    "sudden_cycle",
    "sudden_work",
    "sudden_work_diagnostics",
    "sudden_optimal_work",
    "sudden_efficiency",
    "efficiency_hierarchy",
    "friction_upper_bound",
    "averaged_friction_work",
    "optimal_compression",
    "SweepRanges",
    "SweepRecord",
    "classify",
    "random_sweep",
    "figure_config",
    "FIGURES",
    "optimal_allocation",
]


def _coth_half(omega: float, T: float) -> float:
    """coth(omega / 2T) = 2 E_eq / omega."""
    return 2.0 * equilibrium_energy(omega, T) / omega


# ------------------------------------------------------------ quasistatic

def g_work(engine: EngineSpec, high_temperature: bool = False) -> float:
    wh, wc = engine.omega_h, engine.omega_c
    Th, Tc = engine.hot.temperature, engine.cold.temperature
    if high_temperature:
        C = wh / wc
        return Tc * (1 - C) + Th * (1 - 1 / C)
    return 0.5 * (wh - wc) * (_coth_half(wh, Th) - _coth_half(wc, Tc))


def g_entropy(engine: EngineSpec, high_temperature: bool = False) -> float:
    wh, wc = engine.omega_h, engine.omega_c
    Th, Tc = engine.hot.temperature, engine.cold.temperature
    if high_temperature:
        C = wh / wc
        return C * Tc / Th + Th / (C * Tc) - 2
    return 0.5 * (wh / Th - wc / Tc) * (_coth_half(wc, Tc) - _coth_half(wh, Th))


def f_transport(x_c, x_h):
    """F = (e^xc - 1)(e^xh - 1)/(e^(xc+xh) - 1), written in decaying exponentials.

    Accepts complex arguments (used for complex-step derivatives).
    """
    x_c, x_h = np.asarray(x_c), np.asarray(x_h)
    if np.any(np.real(x_c) < 0) or np.any(np.real(x_h) < 0):
        raise ValueError("scaled times must be >= 0")
    num = np.expm1(-x_c) * np.expm1(-x_h)
    den = -np.expm1(-(x_c + x_h))
    with np.errstate(invalid="ignore", divide="ignore"):
        F = np.where(den == 0, 0.0, num / np.where(den == 0, 1.0, den))
    return F[()] if F.ndim == 0 else F


def quasistatic_work(engine: EngineSpec, x_c, x_h, high_temperature: bool = False):
    return -g_work(engine, high_temperature) * f_transport(x_c, x_h)


def entropy_production_quasistatic(engine: EngineSpec, x_c, x_h, high_temperature: bool = False):
    return g_entropy(engine, high_temperature) * f_transport(x_c, x_h)


def _log_cosh_m1(x):
    """log(cosh x - 1) = log 2 + 2 log sinh(x/2), overflow-free; -inf at 0."""
    y = 0.5 * x
    if y == 0:
        return -np.inf
    return np.log(2.0) + 2.0 * (y + np.log(-np.expm1(-2 * y)) - np.log(2.0))


def _bisect(f, lo, hi, tol=1e-15, max_iter=400):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_time_partition(gamma_h: float, gamma_c: float, tau_iso: float) -> tuple[float, float]:
    """Split tau_iso = tau_h + tau_c so that Gamma_h(cosh x_c - 1) = Gamma_c(cosh x_h - 1)."""
    if not tau_iso > 0:
        raise ValueError("tau_iso must be positive")
    if not (gamma_h > 0 and gamma_c > 0):
        raise ValueError("conductances must be positive")

    def g(th):
        return (np.log(gamma_h) + _log_cosh_m1(gamma_c * (tau_iso - th))
                - np.log(gamma_c) - _log_cosh_m1(gamma_h * th))

    th = _bisect(g, 0.0, tau_iso)
    return th, tau_iso - th


def maximize_transport(gamma_h: float, gamma_c: float, tau_iso: float) -> tuple[float, float]:
    """Direct numerical maximization of F over the isochore split.

    dF/dtau_h is taken by complex step (exact to rounding) and its sign
    change bracketed by bisection; F is unimodal in the split.
    """
    if not tau_iso > 0:
        raise ValueError("tau_iso must be positive")
    h = 1e-30 * max(tau_iso, 1.0)

    def dF(th):
        z = th + 1j * h
        return float(np.imag(f_transport(gamma_c * (tau_iso - z), gamma_h * z)) / h)

    th = _bisect(dF, 0.0, tau_iso)
    return th, tau_iso - th


def optimal_isochore_allocation(gamma: float, tau_adi: float) -> float:
    """Positive root x of 2x + Gamma tau_adi = 2 sinh x (x = Gamma tau_h = Gamma tau_c)."""
    if gamma < 0 or tau_adi < 0:
        raise ValueError("gamma and tau_adi must be >= 0")
    c = gamma * tau_adi
    if c == 0:
        return 0.0

    def f(x):
        # 2 sinh x - 2x via series for small x to keep the residual accurate
        if x < 1e-2:
            x2 = x * x
            return 2 * x * x2 * (1 / 6 + x2 / 120 + x2 * x2 / 5040 + x2 ** 3 / 362880) - c
        return 2 * np.sinh(x) - 2 * x - c

    hi = max(2.0 * isochore_allocation_asymptotic(c), 1.0)
    while f(hi) < 0:
        hi *= 2
    return float(brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))


def isochore_allocation_asymptotic(c: float, printed: bool = False) -> float:
    """Small-c root of 2 sinh x - 2x = c.

    The leading balance x^3/3 = c gives (3c)^(1/3); ``printed=True`` returns
    the alternative (c/3)^(1/3), which is off by a factor 9^(1/3).
    """
    return float((c / 3) ** (1 / 3) if printed else (3 * c) ** (1 / 3))


def optimal_tau_residual(gamma_h, gamma_c, tau_h, tau_c, tau):
    """Residual of the optimal-cycle-time condition; zero at the power optimum."""
    xh, xc = gamma_h * tau_h, gamma_c * tau_c
    lhs = gamma_c * tau * (np.cosh(xh) - 1)
    rhs = np.sinh(xh + xc) - np.sinh(xc) - np.sinh(xh)
    return lhs - rhs


def adiabat_time_floor(engine: EngineSpec) -> float:
    return 1.0 / engine.omega_c + 1.0 / engine.omega_h


def quasistatic_power_bound(engine: EngineSpec, gamma: float, tau):
    """Quasistatic power with equal isochores and adiabats at the time floor."""
    tau = np.asarray(tau, dtype=float)
    floor = adiabat_time_floor(engine)
    if np.any(tau < floor):
        raise ValueError(f"cycle time below the adiabat floor {floor:.6g}")
    wh, wc = engine.omega_h, engine.omega_c
    dcoth = _coth_half(wh, engine.hot.temperature) - _coth_half(wc, engine.cold.temperature)
    P = (wh - wc) * dcoth * np.tanh(0.25 * gamma * (tau - floor)) / (2 * tau)
    return P[()] if P.ndim == 0 else P


# ---------------------------------------------------------------- sudden

def _eq_energies(engine: EngineSpec, high_temperature: bool):
    if high_temperature:
        return engine.hot.temperature, engine.cold.temperature
    return (equilibrium_energy(engine.omega_h, engine.hot.temperature),
            equilibrium_energy(engine.omega_c, engine.cold.temperature))


@dataclass(frozen=True)
class SuddenCycle:
    W: float
    Q_h: float
    Q_c: float

    @property
    def efficiency(self) -> float:
        return -self.W / self.Q_h if self.Q_h > 0 else float("nan")


def sudden_cycle(engine: EngineSpec, high_temperature: bool = False) -> SuddenCycle:
    """Sudden adiabats between fully equilibrated isochore endpoints."""
    Eh, Ec = _eq_energies(engine, high_temperature)
    wh, wc = engine.omega_h, engine.omega_c
    B = np.array([Eh, 0.0, 0.0])
    D = np.array([Ec, 0.0, 0.0])
    C_ = adiabat_map_sudden(wh, wc)(B)
    A = adiabat_map_sudden(wc, wh)(D)
    return SuddenCycle(W=(C_[0] - B[0]) + (A[0] - D[0]), Q_h=B[0] - A[0], Q_c=D[0] - C_[0])


def sudden_work(engine: EngineSpec, high_temperature: bool = False) -> float:
    return sudden_cycle(engine, high_temperature).W


def sudden_work_diagnostics(engine: EngineSpec) -> dict:
    """Constructive sudden work next to the printed closed forms."""
    wh, wc = engine.omega_h, engine.omega_c
    Th, Tc = engine.hot.temperature, engine.cold.temperature
    C = wh / wc
    pref = (wc - wh) * (wc + wh) / (4 * wc * wh)
    full = pref * (wc / np.tanh(wh / Th) - wh / np.tanh(wc / Tc))
    half = pref * (wc * _coth_half(wh, Th) - wh * _coth_half(wc, Tc))
    Eh, Ec = _eq_energies(engine, False)
    return {
        "constructive": sudden_work(engine),
        "closed_form": 0.5 * (C * C - 1) * (Ec - Eh / C ** 2),
        "printed_full_argument": float(full),
        "printed_half_argument": float(half),
        "high_temperature": 0.5 * Th * (C * C - 1) * (Tc / Th - 1 / C ** 2),
    }


def sudden_optimal_work(T_h: float, T_c: float, printed: bool = False) -> float:
    """High-temperature sudden work at C = (T_h/T_c)^(1/4).

    ``printed=True`` returns the variant without the factor 1/2.
    """
    s = np.sqrt(T_c / T_h)
    return float(-(1.0 if printed else 0.5) * T_h * (1 - s) ** 2)


def sudden_efficiency(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 1):
        raise ValueError("temperature ratio must be >= 1")
    s = np.sqrt(1 / r)
    out = (1 - s) / (2 + s)
    return out[()] if out.ndim == 0 else out


def efficiency_hierarchy(r):
    """(eta_s, eta_q, eta_c) for temperature ratio r = T_h/T_c."""
    r = np.asarray(r, dtype=float)
    return sudden_efficiency(r), 1 - np.sqrt(1 / r), 1 - 1 / r


def friction_upper_bound(engine: EngineSpec, high_temperature: bool = False) -> float:
    C = engine.compression
    if high_temperature:
        Th, Tc = engine.hot.temperature, engine.cold.temperature
        return 0.5 * Th * (C - 1) ** 2 * (C ** -2 + Tc / Th)
    wh, wc = engine.omega_h, engine.omega_c
    Nh = equilibrium_energy(wh, engine.hot.temperature) / wh - 0.5
    Nc = equilibrium_energy(wc, engine.cold.temperature) / wc - 0.5
    return wh * (C - 1) ** 2 * (1 + C + 2 * C * Nc + 2 * Nh) / (4 * C * C)


def averaged_friction_work(engine: EngineSpec, alpha_ratio: float, high_temperature: bool = False,
                           samples: int = 4001) -> dict:
    """Friction work of an infinitely conducting cycle with |alpha| = alpha_ratio * omega_c.

    Both adiabats start from equilibrium (L = D = 0).  Returns the full
    integral -int alpha L dt and its average over the last 2 omega period of
    each branch.
    """
    Eh, Ec = _eq_energies(engine, high_temperature)
    wh, wc = engine.omega_h, engine.omega_c
    alpha = alpha_ratio * wc
    tau = np.log(wh / wc) / alpha
    out = {"integral": 0.0, "end_period_average": 0.0, "tau": tau}
    for w0, w1, E in ((wh, wc, Eh), (wc, wh, Ec)):
        sched = AdiabatSchedule(w0, w1, tau)
        v0 = np.array([E, 0.0, 0.0])
        a = sched.alpha
        # W_f(t) = -alpha (D(t) - D(0)) / 4 exactly
        out["integral"] += -0.25 * a * adiabat_trajectory(v0, sched, [tau])[0, 2]
        window = min(np.pi / w1, tau)
        t = np.linspace(tau - window, tau, samples)
        D = adiabat_trajectory(v0, sched, t)[:, 2]
        out["end_period_average"] += float(np.mean(-0.25 * a * D))
    return out


def optimal_compression(T_h: float, T_c: float, omega_c: float = None, regime: str = "quasistatic",
                        method: str = "analytic-highT", grid=None) -> float:
    r = T_h / T_c
    if not r > 1:
        raise ValueError("need T_h > T_c")
    if regime not in ("quasistatic", "sudden"):
        raise ValueError(f"unknown regime {regime!r}")
    if method == "analytic-highT":
        return float(np.sqrt(r) if regime == "quasistatic" else r ** 0.25)
    if method != "scan":
        raise ValueError(f"unknown method {method!r}")
    if omega_c is None:
        raise ValueError("scan needs omega_c")
    grid = np.arange(1.2, 3.5 + 1e-9, 0.02) if grid is None else np.asarray(grid)
    vals = [-_regime_work(EngineSpec.make(C * omega_c, omega_c, T_h, T_c, 1.0), regime) for C in grid]
    return float(grid[int(np.argmax(vals))])


def _regime_work(engine: EngineSpec, regime: str) -> float:
    if regime == "quasistatic":
        return -g_work(engine)
    return sudden_work(engine)


# ----------------------------------------------------------------- sweeps

# |alpha|/omega_end thresholds for the regime tags
SUDDEN_THRESHOLD = 5.0
QUASISTATIC_THRESHOLD = 0.05


@dataclass(frozen=True)
class SweepRanges:
    """Log-uniform sampling bounds (absolute time) for isochores and adiabats."""

    iso: tuple[float, float]
    adi: tuple[float, float]

    @classmethod
    def default(cls, omega_c: float) -> "SweepRanges":
        return cls((1e-2 / omega_c, 1e3 / omega_c), (1e-2 / omega_c, 1e3 / omega_c))

    def __post_init__(self):
        for lo, hi in (self.iso, self.adi):
            if not (0 < lo <= hi):
                raise ValueError(f"invalid range ({lo}, {hi})")


@dataclass(frozen=True)
class SweepRecord:
    seed_index: int
    tau_h: float
    tau_hc: float
    tau_c: float
    tau_ch: float
    tau_total: float
    W: float
    Q_h: float
    Q_c: float
    eta: float
    P: float
    dS_u: float
    W_f: float
    alpha_hc: float   # |alpha|/omega_end on the power adiabat
    alpha_ch: float
    tag: str
    error: str = ""

    @property
    def allocation(self) -> TimeAllocation:
        return TimeAllocation(self.tau_h, self.tau_hc, self.tau_c, self.tau_ch)


def classify(engine: EngineSpec, alloc: TimeAllocation,
             sudden: float = SUDDEN_THRESHOLD, quasistatic: float = QUASISTATIC_THRESHOLD):
    """(tag, |alpha_hc|/omega_c, |alpha_ch|/omega_h)."""
    lc_ = np.log(engine.compression)
    a_hc = np.inf if alloc.tau_hc == 0 else lc_ / alloc.tau_hc / engine.omega_c
    a_ch = np.inf if alloc.tau_ch == 0 else lc_ / alloc.tau_ch / engine.omega_h
    s_hc, s_ch = a_hc > sudden, a_ch > sudden
    if s_hc and s_ch:
        tag = "sudden-both"
    elif s_hc:
        tag = "sudden-hc"
    elif s_ch:
        tag = "sudden-ch"
    elif a_hc < quasistatic and a_ch < quasistatic:
        tag = "quasistatic"
    else:
        tag = "intermediate"
    return tag, float(a_hc), float(a_ch)


def _solve_record(args) -> SweepRecord:
    i, engine, tau, mode, thresholds = args
    alloc = TimeAllocation(*tau)
    tag, a_hc, a_ch = classify(engine, alloc, *thresholds)
    nan = float("nan")
    try:
        lc = limit_cycle(engine, alloc, mode)
        m = cycle_metrics(lc, engine, alloc, with_corners=False)
    except (NoLimitCycleError, np.linalg.LinAlgError, RuntimeError) as exc:
        # rho >= 1: adiabatic squeezing outruns the isochore damping (parametric heating)
        bad = "unstable" if isinstance(exc, NoLimitCycleError) else "failed"
        return SweepRecord(i, *tau, alloc.total, nan, nan, nan, nan, nan, nan, nan,
                           a_hc, a_ch, bad, f"{type(exc).__name__}: {exc}")
    return SweepRecord(i, *tau, alloc.total, m.W, m.Q_h, m.Q_c, m.efficiency, m.power,
                       m.entropy_production, m.friction, a_hc, a_ch, tag)


def draw_allocations(ranges: SweepRanges, n: int, seed: int) -> np.ndarray:
    """(n, 4) durations; record i uses its own child of SeedSequence(seed)."""
    out = np.empty((n, 4))
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        u = np.random.default_rng(child).random(4)
        for j, (lo, hi) in enumerate((ranges.iso, ranges.adi, ranges.iso, ranges.adi)):
            out[i, j] = np.exp(np.log(lo) + u[j] * (np.log(hi) - np.log(lo)))
    return out


def default_workers() -> int:
    env = os.environ.get("HARMONIC_OTTO_THREADS")
    return max(int(env), 1) if env else 1


def random_sweep(engine: EngineSpec, ranges: SweepRanges | None, n: int, seed: int,
                 adiabat_mode: str = "exact", workers: int | None = None,
                 thresholds: tuple[float, float] = (SUDDEN_THRESHOLD, QUASISTATIC_THRESHOLD)) -> list[SweepRecord]:
    """Random time allocations, one limit cycle each; output order = draw order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ranges = SweepRanges.default(engine.omega_c) if ranges is None else ranges
    taus = draw_allocations(ranges, n, seed)
    jobs = [(i, engine, tuple(map(float, t)), adiabat_mode, thresholds) for i, t in enumerate(taus)]
    workers = default_workers() if workers is None else workers
    if workers <= 1:
        return [_solve_record(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_record, jobs, chunksize=max(1, n // (8 * workers))))


def record_dict(rec: SweepRecord) -> dict:
    return asdict(rec)


# -------------------------------------------------------- figure presets

def _fig5_compression() -> float:
    # omega_c = 1, T_c = 1/2, T_h = omega_h/0.4, C = (T_h/T_c)^0.3  =>  C^0.7 = 5^0.3
    return 5.0 ** (3.0 / 7.0)


FIGURES = {
    "fig1": dict(omega_h=2.0, omega_c=1.0, T_h=5.0, T_c=1.0, gamma=0.03,
                 tau=(6.0, 1.0, 12.0, 1.0)),
    "fig3": dict(omega_h=2.0, omega_c=1.0, T_h=5.0, T_c=1.0, gamma=0.05,
                 tau=(10.0, 3.0, 10.0, 3.0)),
    "fig4": dict(omega_h=0.05, omega_c=0.025, T_h=1.0, T_c=0.25, gamma=0.6),
    "fig5": dict(omega_h=_fig5_compression(), omega_c=1.0, T_h=2.5 * _fig5_compression(),
                 T_c=0.5, gamma=0.6),
    "fig6": dict(omega_h=0.2, omega_c=0.1, T_h=10.0, T_c=0.625, gamma=0.6),
}


def figure_config(name: str, gamma: float | None = None) -> tuple[EngineSpec, TimeAllocation | None]:
    if name not in FIGURES:
        raise KeyError(f"unknown figure preset {name!r}; choose from {sorted(FIGURES)}")
    f = FIGURES[name]
    g = f["gamma"] if gamma is None else gamma
    engine = EngineSpec(f["omega_h"], f["omega_c"], BathSpec(f["T_h"], g), BathSpec(f["T_c"], g))
    alloc = TimeAllocation(*f["tau"]) if "tau" in f else None
    return engine, alloc


# ------------------------------------------------- optimal allocations

def _alloc_from_logits(z: np.ndarray, tau: float) -> TimeAllocation:
    w = np.exp(z - z.max())
    return TimeAllocation(*(tau * w / w.sum()))


def optimal_allocation(engine: EngineSpec, tau: float, adiabat_mode: str = "exact",
                       starts: int = 8, seed: int = 0):
    """Maximize power over allocations with fixed total time.

    Nelder-Mead on softmax weights from the quasistatic guess plus random
    restarts.  Returns (allocation, power).
    """
    rng = np.random.default_rng(seed)

    def neg_power(z):
        alloc = _alloc_from_logits(z, tau)
        try:
            lc = limit_cycle(engine, alloc, adiabat_mode)
        except (NoLimitCycleError, np.linalg.LinAlgError):
            return 1e300
        return -cycle_metrics(lc, engine, alloc, with_corners=False).power

    floor = min(adiabat_time_floor(engine), 0.5 * tau)
    iso = 0.5 * (tau - floor)
    guesses = [np.log([iso, floor / 2, iso, floor / 2])]
    guesses += [rng.normal(size=4) for _ in range(starts - 1)]
    best = None
    for z0 in guesses:
        res = minimize(neg_power, z0, method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    return _alloc_from_logits(best.x, tau), float(-best.fun)
