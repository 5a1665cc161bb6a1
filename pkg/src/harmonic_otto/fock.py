"""Brute-force oracle: dense density matrices in a truncated Fock basis.

Each density matrix is stored in the number basis of the instantaneous
frequency.  Isochores are solved exactly band by band; adiabats integrate
the Schroedinger propagator in the basis of the starting frequency and then
rotate into the basis of the final frequency with a squeeze operator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .propagators import AdiabatSchedule, IntegrationError
from .state import (
    BathSpec,
    GaussianParams,
    ProductFormDomainError,
    StateVector,
    canonical_exponents,
    params_from_expectations,
)

__all__ = [
    "FockConfig",
    "TruncationError",
    "OracleConvergenceError",
    "FockOperators",
    "build_operators",
    "thermal_density",
    "product_form_density",
    "canonical_density",
    "reconstruct_density",
    "expectations",
    "entropy",
    "trace_distance",
    "change_basis",
    "evolve_isochore",
    "evolve_adiabat",
    "IsochorePropagator",
    "AdiabatPropagator",
    "OracleCycle",
    "oracle_limit_cycle",
    "initial_dimension",
]


class TruncationError(RuntimeError):
    """Population reached the top of the truncated basis."""


class OracleConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FockConfig:
    n_max: int | None = None   # None: adaptive
    leak_tol: float = 1e-10
    rtol: float = 1e-11
    atol: float = 1e-13
    n_cap: int = 512
    cycle_tol: float = 1e-8
    max_cycles: int = 2000

    def __post_init__(self):
        if self.n_max is not None and self.n_max < 2:
            raise ValueError("n_max must be >= 2")


@dataclass(frozen=True)
class FockOperators:
    a: np.ndarray
    ad: np.ndarray
    N: np.ndarray
    H: np.ndarray
    L: np.ndarray
    D: np.ndarray
    omega: float


def _lowering(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


def build_operators(n: int, omega: float) -> FockOperators:
    if n < 2:
        raise ValueError("n_max must be >= 2")
    a = _lowering(n).astype(complex)
    ad = a.conj().T
    N = np.diag(np.arange(n, dtype=float)).astype(complex)
    a2, ad2 = a @ a, ad @ ad
    H = omega * (N + 0.5 * np.eye(n))
    L = -0.5 * omega * (a2 + ad2)
    D = -1j * (a2 - ad2)
    return FockOperators(a, ad, N, H, L, D, omega)


def _check_leak(rho: np.ndarray, cfg: FockConfig, where: str):
    top = float(np.real(rho[-1, -1] + rho[-2, -2]))
    if top > cfg.leak_tol:
        raise TruncationError(f"{where}: top-level population {top:.3g} > {cfg.leak_tol:.1g} at n={len(rho)}")


def thermal_density(n: int, omega: float, T: float) -> np.ndarray:
    k = np.arange(n)
    w = np.exp(-omega * k / T)
    return np.diag(w / w.sum()).astype(complex)


def product_form_density(p: GaussianParams, omega: float, n: int) -> np.ndarray:
    """exp(gamma a^2) exp(-beta H) exp(gamma* a^+2) / Z in the truncated basis."""
    a2 = np.linalg.matrix_power(_lowering(n), 2).astype(complex)
    E = expm(p.gamma * a2)
    boltz = np.exp(-p.beta * omega * np.arange(n))
    rho = (E * boltz) @ E.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def canonical_density(b_h: float, b_l: float, b_d: float, omega: float, n: int, pad: int = 2) -> np.ndarray:
    """exp(-(b_h H + b_l L + b_d D)) / Z, built in a padded basis and truncated."""
    ops = build_operators(pad * n, omega)
    G = b_h * ops.H + b_l * ops.L + b_d * ops.D
    G = 0.5 * (G + G.conj().T)
    ev, V = np.linalg.eigh(G)
    w = np.exp(-(ev - ev.min()))
    rho = (V * w) @ V.conj().T
    rho = rho[:n, :n]
    return rho / np.trace(rho).real


def reconstruct_density(s: StateVector, n: int) -> np.ndarray:
    """Density matrix of the Gaussian state with observables s.

    Uses the (beta, gamma) product form when it exists and the canonical
    exponent otherwise.
    """
    try:
        return product_form_density(params_from_expectations(s), s.omega, n)
    except ProductFormDomainError:
        return canonical_density(*canonical_exponents(s), s.omega, n)


def expectations(rho: np.ndarray, omega: float) -> StateVector:
    ops = build_operators(len(rho), omega)
    tr = np.trace(rho).real
    f = lambda op: float(np.real(np.sum(rho * op.T)) / tr)  # noqa: E731
    return StateVector(f(ops.H), f(ops.L), f(ops.D), omega)


def entropy(rho: np.ndarray) -> float:
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def trace_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(r1 - r2))))


# ------------------------------------------------------------------ isochore

class IsochorePropagator:
    """Exact Lindblad propagator at fixed omega, acting band by band.

    The element x_m = rho[m, m+k] couples only to x_{m-1}, x_{m+1}, so every
    off-diagonal band evolves under its own tridiagonal generator.
    """

    def __init__(self, bath: BathSpec, omega: float, tau: float, n: int):
        self.n, self.omega, self.tau = n, omega, tau
        kd, ku = bath.rates(omega)
        self.bands = []
        for k in range(n):
            m = np.arange(n - k, dtype=float)
            diag = -0.5 * kd * (2 * m + k) - 0.5 * ku * (2 * m + k + 2)
            up = kd * np.sqrt((m[:-1] + 1) * (m[:-1] + k + 1))
            lo = ku * np.sqrt(m[1:] * (m[1:] + k))
            G = np.diag(diag) + np.diag(up, 1) + np.diag(lo, -1)
            self.bands.append(expm(G * tau) * np.exp(1j * omega * k * tau))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros_like(rho)
        idx = np.arange(n)
        for k, E in enumerate(self.bands):
            x = E @ rho[idx[: n - k], idx[: n - k] + k]
            out[idx[: n - k], idx[: n - k] + k] = x
            if k:
                out[idx[: n - k] + k, idx[: n - k]] = x.conj()
        return out


def evolve_isochore(rho0: np.ndarray, bath: BathSpec, omega: float, tau: float,
                    cfg: FockConfig = FockConfig()) -> np.ndarray:
    rho = IsochorePropagator(bath, omega, tau, len(rho0))(rho0)
    _check_leak(rho, cfg, "isochore")
    return rho


# ------------------------------------------------------------------- adiabat

def _squeeze_change(n: int, omega_from: float, omega_to: float, pad: int = 2) -> np.ndarray:
    """V with rho_to = V rho_from V^+, both in truncated number bases."""
    m = pad * n
    a = _lowering(m)
    zeta = 0.5 * np.log(omega_to / omega_from)
    S = expm(zeta * 0.5 * (a @ a - a.T @ a.T))
    return S.conj().T[:n, :n].astype(complex)


def change_basis(rho: np.ndarray, omega_from: float, omega_to: float) -> np.ndarray:
    V = _squeeze_change(len(rho), omega_from, omega_to)
    return V @ rho @ V.conj().T


class AdiabatPropagator:
    """Unitary for H(t) = P^2/2 + omega(t)^2 Q^2/2, mapped start basis -> end basis.

    In the start basis H = c1(t)(2N+1) + c2(t)(a^2 + a^+2).  The diagonal part
    is removed analytically (interaction picture), which leaves a generator
    whose oscillation frequency does not grow with the truncation.
    """

    def __init__(self, sched: AdiabatSchedule, n: int, cfg: FockConfig = FockConfig()):
        self.n = n
        ws, alpha = sched.omega_start, sched.alpha
        a2 = np.linalg.matrix_power(_lowering(n), 2).astype(complex)
        a2d = a2.conj().T
        odd = 2 * np.arange(n) + 1.0

        def theta(t):
            # int_0^t c1 dt with c1 = ws/4 + omega^2/(4 ws)
            if alpha == 0:
                return 0.5 * ws * t
            return 0.25 * ws * t + 0.25 * ws * np.expm1(2 * alpha * t) / (2 * alpha)

        if sched.duration == 0:
            U = np.eye(n, dtype=complex)
        else:
            def rhs(t, y):
                w2 = float(sched.omega_at(t)) ** 2
                c2 = 0.25 * (w2 - ws * ws) / ws
                ph = np.exp(-4j * theta(t))
                Y = y.reshape(n, n)
                return (-1j * c2 * (ph * (a2 @ Y) + np.conj(ph) * (a2d @ Y))).ravel()

            sol = solve_ivp(rhs, (0.0, sched.duration), np.eye(n, dtype=complex).ravel(),
                            method="DOP853", rtol=cfg.rtol, atol=cfg.atol)
            if not sol.success:
                raise IntegrationError(sol.message)
            phase = np.exp(-1j * theta(sched.duration) * odd)
            U = phase[:, None] * sol.y[:, -1].reshape(n, n)
        self.unitary = _squeeze_change(n, ws, sched.omega_end) @ U

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.unitary @ rho @ self.unitary.conj().T


def evolve_adiabat(rho0: np.ndarray, sched: AdiabatSchedule, cfg: FockConfig = FockConfig()) -> np.ndarray:
    _check_leak(rho0, cfg, "adiabat input")
    rho = AdiabatPropagator(sched, len(rho0), cfg)(rho0)
    _check_leak(rho, cfg, "adiabat")
    return rho


# --------------------------------------------------------------- limit cycle

@dataclass(frozen=True)
class OracleCycle:
    corners: dict[str, StateVector]
    entropies: dict[str, float]
    n_max: int
    n_cycles: int


def initial_dimension(engine) -> int:
    """ceil(N_max C^2 + 20) with N_max the hot-bath occupation at omega_c."""
    n_hot = 1.0 / np.expm1(engine.omega_c / engine.hot.temperature)
    return int(np.ceil(n_hot * engine.compression ** 2 + 20))


def _run_cycle(engine, alloc, n: int, cfg: FockConfig) -> OracleCycle:
    wh, wc = engine.omega_h, engine.omega_c
    U_h = IsochorePropagator(engine.hot, wh, alloc.tau_h, n)
    U_hc = AdiabatPropagator(AdiabatSchedule(wh, wc, alloc.tau_hc), n, cfg)
    U_c = IsochorePropagator(engine.cold, wc, alloc.tau_c, n)
    U_ch = AdiabatPropagator(AdiabatSchedule(wc, wh, alloc.tau_ch), n, cfg)
    steps = [(U_h, wh, "B"), (U_hc, wc, "C"), (U_c, wc, "D"), (U_ch, wh, "A")]
    rho = thermal_density(n, wh, engine.cold.temperature)
    prev = None
    for cycle in range(1, cfg.max_cycles + 1):
        snaps = {"A": rho}
        for U, w, name in steps:
            rho = U(rho)
            _check_leak(rho, cfg, f"corner {name}")
            snaps[name] = rho
        omegas = {"A": wh, "B": wh, "C": wc, "D": wc}
        vec = np.concatenate([expectations(snaps[k], omegas[k]).scaled() for k in "ABCD"])
        if prev is not None and np.max(np.abs(vec - prev)) < cfg.cycle_tol * np.max(np.abs(vec)):
            corners = {k: expectations(snaps[k], omegas[k]) for k in "ABCD"}
            ents = {k: entropy(snaps[k]) for k in "ABCD"}
            return OracleCycle(corners, ents, n, cycle)
        prev = vec
    raise OracleConvergenceError(f"corners not converged after {cfg.max_cycles} cycles")


def oracle_limit_cycle(engine, alloc, cfg: FockConfig = FockConfig()) -> OracleCycle:
    """Cycle a dense density matrix until the corner expectations settle.

    With adaptive truncation the dimension doubles on every leak, up to n_cap.
    """
    n = cfg.n_max or initial_dimension(engine)
    while True:
        try:
            return _run_cycle(engine, alloc, n, cfg)
        except TruncationError:
            if cfg.n_max is not None or n >= cfg.n_cap:
                raise
            n = min(2 * n, cfg.n_cap)
