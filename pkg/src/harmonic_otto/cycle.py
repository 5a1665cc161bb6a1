"""Four-branch Otto cycle: composition, limit cycle, metrics, trajectories.

Branch order is hot isochore, hot-to-cold adiabat, cold isochore,
cold-to-hot adiabat.  Corners: A (start of hot isochore), B (end of hot
isochore), C (end of power adiabat), D (end of cold isochore).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .propagators import (
    AdiabatSchedule,
    AffineBranchMap,
    adiabat_map_exact,
    adiabat_map_numeric,
    adiabat_map_quasistatic,
    adiabat_map_sudden,
    adiabat_trajectory,
    isochore_map,
    isochore_trajectory,
)
from .state import (
    BathSpec,
    StateVector,
    energy_entropy,
    equilibrium_energy,
    internal_temperature,
    von_neumann_entropy,
)

__all__ = [
    "ADIABAT_MODES",
    "CORNERS",
    "EngineSpec",
    "TimeAllocation",
    "NoLimitCycleError",
    "DegenerateCycleError",
    "ConvergenceError",
    "branch_maps",
    "cycle_map",
    "LimitCycle",
    "limit_cycle",
    "IterationResult",
    "iterate_to_limit",
    "CornerThermo",
    "CycleMetrics",
    "cycle_metrics",
    "Trajectory",
    "trajectory_sample",
    "scaled_norm",
]

ADIABAT_MODES = ("numeric", "exact", "sudden", "quasistatic")
CORNERS = ("A", "B", "C", "D")
BRANCHES = ("hot", "hc", "cold", "ch")


class NoLimitCycleError(RuntimeError):
    """The homogeneous part of the cycle map is not contracting (rho >= 1)."""


class DegenerateCycleError(ValueError):
    """All branch durations vanish."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration did not reach the tolerance."""


@dataclass(frozen=True)
class EngineSpec:
    omega_h: float
    omega_c: float
    hot: BathSpec
    cold: BathSpec

    def __post_init__(self):
        if not (self.omega_h > self.omega_c > 0):
            raise ValueError(f"need omega_h > omega_c > 0, got {self.omega_h}, {self.omega_c}")

    @property
    def compression(self) -> float:
        return self.omega_h / self.omega_c

    @property
    def temperature_ratio(self) -> float:
        return self.hot.temperature / self.cold.temperature

    @classmethod
    def make(cls, omega_h, omega_c, T_h, T_c, gamma_h, gamma_c=None) -> "EngineSpec":
        gamma_c = gamma_h if gamma_c is None else gamma_c
        return cls(omega_h, omega_c, BathSpec(T_h, gamma_h), BathSpec(T_c, gamma_c))


@dataclass(frozen=True)
class TimeAllocation:
    tau_h: float
    tau_hc: float
    tau_c: float
    tau_ch: float

    def __post_init__(self):
        for name in ("tau_h", "tau_hc", "tau_c", "tau_ch"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @property
    def total(self) -> float:
        return self.tau_h + self.tau_hc + self.tau_c + self.tau_ch

    @property
    def adiabatic(self) -> float:
        return self.tau_hc + self.tau_ch

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.tau_h, self.tau_hc, self.tau_c, self.tau_ch)


def _adiabat(mode: str, w0: float, w1: float, tau: float) -> AffineBranchMap:
    if mode == "sudden":
        m = adiabat_map_sudden(w0, w1)
        return AffineBranchMap(m.matrix, m.offset, w0, w1, tau, m.friction)
    sched = AdiabatSchedule(w0, w1, tau)
    if mode == "numeric":
        return adiabat_map_numeric(sched)
    if mode == "exact":
        return adiabat_map_exact(sched)
    if mode == "quasistatic":
        return adiabat_map_quasistatic(sched)
    raise ValueError(f"unknown adiabat mode {mode!r}; choose from {ADIABAT_MODES}")


def branch_maps(engine: EngineSpec, alloc: TimeAllocation, adiabat_mode: str = "numeric") -> list[AffineBranchMap]:
    """[U_h, U_hc, U_c, U_ch] in the order they act."""
    wh, wc = engine.omega_h, engine.omega_c
    return [
        isochore_map(engine.hot, wh, alloc.tau_h),
        _adiabat(adiabat_mode, wh, wc, alloc.tau_hc),
        isochore_map(engine.cold, wc, alloc.tau_c),
        _adiabat(adiabat_mode, wc, wh, alloc.tau_ch),
    ]


def _compose(maps: list[AffineBranchMap]) -> AffineBranchMap:
    out = maps[0]
    for m in maps[1:]:
        out = out.then(m)
    return out


def cycle_map(engine: EngineSpec, alloc: TimeAllocation, adiabat_mode: str = "numeric",
              start: str = "A", maps: list[AffineBranchMap] | None = None) -> AffineBranchMap:
    """U_ch U_c U_hc U_h (reference corner A), or a cyclic shift of it."""
    if alloc.total == 0:
        raise DegenerateCycleError("all branch durations are zero")
    if start not in CORNERS:
        raise ValueError(f"start must be one of {CORNERS}")
    maps = branch_maps(engine, alloc, adiabat_mode) if maps is None else maps
    k = CORNERS.index(start)
    return _compose(maps[k:] + maps[:k])


def scaled_norm(v: np.ndarray, omega: float) -> float:
    """Euclidean norm of (H, L, omega D/2)."""
    return float(np.sqrt(v[0] ** 2 + v[1] ** 2 + (0.5 * omega * v[2]) ** 2))


@dataclass(frozen=True)
class LimitCycle:
    A: StateVector
    B: StateVector
    C: StateVector
    D: StateVector
    cycle_map: AffineBranchMap
    spectral_radius: float
    branches: tuple[AffineBranchMap, ...]
    adiabat_mode: str
    residual: float

    @property
    def corners(self) -> dict[str, StateVector]:
        return {"A": self.A, "B": self.B, "C": self.C, "D": self.D}

    @property
    def friction_hc(self) -> float:
        return self.branches[1].friction_work(self.B.as_array())

    @property
    def friction_ch(self) -> float:
        return self.branches[3].friction_work(self.D.as_array())


def _solve_fixed_point(m: AffineBranchMap) -> np.ndarray:
    I_M = np.eye(3) - m.matrix
    v = np.linalg.solve(I_M, m.offset)
    # one step of iterative refinement
    r = m(v) - v
    return v + np.linalg.solve(I_M, r)


def limit_cycle(engine: EngineSpec, alloc: TimeAllocation, adiabat_mode: str = "numeric") -> LimitCycle:
    maps = branch_maps(engine, alloc, adiabat_mode)
    cyc = cycle_map(engine, alloc, adiabat_mode, maps=maps)
    rho = cyc.spectral_radius
    if not rho < 1.0 - 1e-13:
        raise NoLimitCycleError(f"spectral radius {rho:.6g} >= 1: no unique limit cycle")
    a = _solve_fixed_point(cyc)
    b = maps[0](a)
    c = maps[1](b)
    d = maps[2](c)
    wh, wc = engine.omega_h, engine.omega_c
    res = scaled_norm(cyc(a) - a, wh) / scaled_norm(a, wh)
    return LimitCycle(
        A=StateVector.from_array(a, wh),
        B=StateVector.from_array(b, wh),
        C=StateVector.from_array(c, wc),
        D=StateVector.from_array(d, wc),
        cycle_map=cyc,
        spectral_radius=rho,
        branches=tuple(maps),
        adiabat_mode=adiabat_mode,
        residual=res,
    )


@dataclass(frozen=True)
class IterationResult:
    states: np.ndarray      # (k+1, 3) successive A corners
    distances: np.ndarray   # scaled distance of each iterate to the fixed point
    fixed_point: np.ndarray
    converged: bool

    @property
    def n_cycles(self) -> int:
        return len(self.states) - 1

    def contraction_estimate(self, skip: int = 3) -> float:
        """Geometric rate from the tail of the distance sequence."""
        d = self.distances[skip:]
        d = d[d > 1e-13 * max(d[0], 1e-300)] if len(d) else d
        if len(d) < 3:
            return float("nan")
        k = np.arange(len(d))
        return float(np.exp(np.polyfit(k, np.log(d), 1)[0]))


def iterate_to_limit(engine: EngineSpec, alloc: TimeAllocation, v0: StateVector,
                     n_max: int = 1000, tol: float = 1e-10,
                     adiabat_mode: str = "numeric") -> IterationResult:
    """Apply the cycle map repeatedly from v0 until within tol of the fixed point."""
    lc = limit_cycle(engine, alloc, adiabat_mode)
    cyc, star = lc.cycle_map, lc.A.as_array()
    w = engine.omega_h
    v = v0.as_array()
    states, dists = [v], [scaled_norm(v - star, w)]
    while dists[-1] >= tol:
        if len(states) > n_max:
            raise ConvergenceError(f"no convergence to {tol} within {n_max} cycles")
        v = cyc(v)
        states.append(v)
        dists.append(scaled_norm(v - star, w))
    return IterationResult(np.array(states), np.array(dists), star, True)


@dataclass(frozen=True)
class CornerThermo:
    S_vn: float
    S_e: float
    T_int: float

    @classmethod
    def of(cls, s: StateVector) -> "CornerThermo":
        return cls(von_neumann_entropy(s), energy_entropy(s), internal_temperature(s))


@dataclass(frozen=True)
class CycleMetrics:
    W: float
    Q_h: float
    Q_c: float
    efficiency: float
    power: float
    entropy_production: float
    friction_hc: float
    friction_ch: float
    is_engine: bool
    corners: dict[str, CornerThermo] = field(default_factory=dict)

    @property
    def friction(self) -> float:
        return self.friction_hc + self.friction_ch

    def as_dict(self) -> dict:
        return {
            "W": self.W, "Q_h": self.Q_h, "Q_c": self.Q_c, "eta": self.efficiency,
            "P": self.power, "dS_u": self.entropy_production,
            "W_f_hc": self.friction_hc, "W_f_ch": self.friction_ch, "W_f": self.friction,
            "is_engine": self.is_engine,
            "corners": {k: vars(v) for k, v in self.corners.items()},
        }


def cycle_metrics(lc: LimitCycle, engine: EngineSpec, alloc: TimeAllocation,
                  with_corners: bool = True) -> CycleMetrics:
    HA, HB, HC, HD = lc.A.energy, lc.B.energy, lc.C.energy, lc.D.energy
    Q_h = HB - HA
    Q_c = HD - HC
    W = (HC - HB) + (HA - HD)
    is_engine = Q_h > 0 and W < 0
    eta = -W / Q_h if Q_h > 0 else float("nan")
    power = -W / alloc.total
    dS = -Q_h / engine.hot.temperature - Q_c / engine.cold.temperature
    corners = {k: CornerThermo.of(s) for k, s in lc.corners.items()} if with_corners else {}
    return CycleMetrics(W, Q_h, Q_c, eta, power, dS, lc.friction_hc, lc.friction_ch,
                        is_engine, corners)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    branch: np.ndarray
    omega: np.ndarray
    states: np.ndarray   # (n, 3): H, L, D
    S_vn: np.ndarray
    S_e: np.ndarray
    T_int: np.ndarray
    heat_current: np.ndarray
    power: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def _grid(tau: float, dt: float) -> np.ndarray:
    if tau == 0:
        return np.array([0.0])
    n = max(int(np.ceil(tau / dt)), 1)
    return np.linspace(0.0, tau, n + 1)


def trajectory_sample(engine: EngineSpec, alloc: TimeAllocation, adiabat_mode: str = "numeric",
                      dt: float = 0.05, lc: LimitCycle | None = None) -> Trajectory:
    """Dense samples over one limit-cycle period, starting and ending at corner A.

    Branch junctions are sampled twice (end of one branch, start of the next).
    Sudden adiabats jump at the start of their time slot and then hold.
    """
    lc = limit_cycle(engine, alloc, adiabat_mode) if lc is None else lc
    wh, wc = engine.omega_h, engine.omega_c
    starts = [lc.A, lc.B, lc.C, lc.D]
    taus = alloc.as_tuple()
    omegas = [(wh, wh), (wh, wc), (wc, wc), (wc, wh)]
    baths = [engine.hot, None, engine.cold, None]
    t0 = 0.0
    rows = {k: [] for k in ("t", "branch", "omega", "states", "heat", "power")}
    for i, name in enumerate(BRANCHES):
        v0 = starts[i].as_array()
        tau = taus[i]
        w_in, w_out = omegas[i]
        tt = _grid(tau, dt)
        if baths[i] is not None:
            X = isochore_trajectory(v0, baths[i], w_in, tt)
            om = np.full(len(tt), w_in)
            bath = baths[i]
            heat = -bath.conductance * (X[:, 0] - equilibrium_energy(w_in, bath.temperature))
            pw = np.zeros(len(tt))
        elif adiabat_mode == "sudden" or tau == 0:
            after = lc.branches[i](v0)
            tt = np.array([0.0, tau])
            X = np.vstack([v0, after])
            om = np.array([w_in, w_out])
            heat = np.zeros(2)
            pw = np.full(2, np.nan)
        else:
            sched = AdiabatSchedule(w_in, w_out, tau)
            X = adiabat_trajectory(v0, sched, tt, mode=adiabat_mode)
            om = sched.omega_at(tt)
            heat = np.zeros(len(tt))
            pw = sched.alpha * (X[:, 0] - X[:, 1])
        rows["t"].append(t0 + tt)
        rows["branch"].append(np.full(len(tt), name))
        rows["omega"].append(om)
        rows["states"].append(X)
        rows["heat"].append(heat)
        rows["power"].append(pw)
        t0 += tau
    states = np.vstack(rows["states"])
    omega = np.concatenate(rows["omega"])
    svs = [StateVector.from_array(v, w) for v, w in zip(states, omega)]
    return Trajectory(
        t=np.concatenate(rows["t"]),
        branch=np.concatenate(rows["branch"]),
        omega=omega,
        states=states,
        S_vn=np.array([von_neumann_entropy(s) for s in svs]),
        S_e=np.array([energy_entropy(s) for s in svs]),
        T_int=np.array([internal_temperature(s) for s in svs]),
        heat_current=np.concatenate(rows["heat"]),
        power=np.concatenate(rows["power"]),
    )
