"""Branch propagators acting on the observable vector (H, L, D).

Every branch acts affinely: v_out = M v_in + b.  Isochores are solved in
closed form.  Adiabats (unitary, omega changing) are homogeneous (b = 0) and
come in four flavours:

* ``adiabat_map_numeric``     adaptive Runge-Kutta on the 3x3 column system
* ``adiabat_map_exact``       constant-alpha closed form via Bessel functions
* ``adiabat_map_sudden``      alpha/omega -> infinity
* ``adiabat_map_quasistatic`` alpha/omega -> 0 (number operator conserved)
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import j0, j1, y0, y1

from .state import BathSpec, StateVector, equilibrium_energy

__all__ = [
    "AffineBranchMap",
    "AdiabatSchedule",
    "IntegrationError",
    "isochore_map",
    "isochore_trajectory",
    "heat_current",
    "adiabat_map_numeric",
    "adiabat_map_exact",
    "adiabat_map_sudden",
    "adiabat_map_quasistatic",
    "adiabat_trajectory",
    "adiabat_quasistatic_correction",
    "instantaneous_power",
    "friction_work_closed_form",
]


class IntegrationError(RuntimeError):
    """The adaptive integrator failed (step-size underflow or similar)."""


@dataclass(frozen=True)
class AffineBranchMap:
    """v_out = matrix @ v_in + offset, with v = (H, L, D).

    ``friction`` is a row vector f such that the work spent against friction
    on this branch is f @ v_in (zero on isochores).
    """

    matrix: np.ndarray
    offset: np.ndarray
    omega_in: float
    omega_out: float
    duration: float
    friction: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v + self.offset

    def apply(self, s: StateVector) -> StateVector:
        return StateVector.from_array(self(s.as_array()), self.omega_out)

    def then(self, other: "AffineBranchMap") -> "AffineBranchMap":
        """Composition ``other o self`` (self acts first)."""
        return AffineBranchMap(
            matrix=other.matrix @ self.matrix,
            offset=other.matrix @ self.offset + other.offset,
            omega_in=self.omega_in,
            omega_out=other.omega_out,
            duration=self.duration + other.duration,
            friction=self.friction + other.friction @ self.matrix,
        )

    def friction_work(self, v: np.ndarray) -> float:
        return float(self.friction @ v)

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))

    @classmethod
    def identity(cls, omega: float) -> "AffineBranchMap":
        return cls(np.eye(3), np.zeros(3), omega, omega, 0.0)


@dataclass(frozen=True)
class AdiabatSchedule:
    """Constant-alpha frequency ramp omega(t) = omega_start (omega_end/omega_start)^(t/duration)."""

    omega_start: float
    omega_end: float
    duration: float
    kind: str = "constant-alpha"

    def __post_init__(self):
        if not (self.omega_start > 0 and self.omega_end > 0):
            raise ValueError("schedule frequencies must be positive")
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if self.kind != "constant-alpha":
            raise ValueError(f"unsupported schedule kind {self.kind!r}")

    @property
    def log_ratio(self) -> float:
        return float(np.log(self.omega_end / self.omega_start))

    @property
    def alpha(self) -> float:
        """Nonadiabatic parameter omega_dot / omega."""
        if self.duration == 0:
            return float(np.copysign(np.inf, self.log_ratio)) if self.log_ratio else 0.0
        return self.log_ratio / self.duration

    def omega_at(self, t):
        if self.duration == 0:
            return self.omega_end if np.ndim(t) == 0 else np.full(np.shape(t), self.omega_end)
        return self.omega_start * np.exp(self.alpha * np.asarray(t, dtype=float))

    def phase(self, t=None) -> float:
        """Accumulated phase int_0^t 2 omega dt (full branch by default)."""
        t = self.duration if t is None else t
        if self.log_ratio == 0:
            return 2.0 * self.omega_start * t
        return 2.0 * (self.omega_at(t) - self.omega_start) / self.alpha


# ---------------------------------------------------------------- isochores

def _rotation_block(omega: float, t):
    c, s = np.cos(2 * omega * t), np.sin(2 * omega * t)
    return c, s


def isochore_map(bath: BathSpec, omega: float, tau: float) -> AffineBranchMap:
    """Exact relaxation at fixed omega towards (H_eq, 0, 0)."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    decay = np.exp(-bath.conductance * tau)
    h_eq = equilibrium_energy(omega, bath.temperature)
    c, s = _rotation_block(omega, tau)
    M = decay * np.array([
        [1.0, 0.0, 0.0],
        [0.0, c, -0.5 * omega * s],
        [0.0, 2.0 / omega * s, c],
    ])
    b = np.array([(1.0 - decay) * h_eq, 0.0, 0.0])
    return AffineBranchMap(M, b, omega, omega, float(tau))


def isochore_trajectory(v0: np.ndarray, bath: BathSpec, omega: float, t: np.ndarray) -> np.ndarray:
    """States (len(t), 3) along an isochore starting from v0."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-bath.conductance * t)
    h_eq = equilibrium_energy(omega, bath.temperature)
    c, s = _rotation_block(omega, t)
    H = decay * (v0[0] - h_eq) + h_eq
    L = decay * (c * v0[1] - 0.5 * omega * s * v0[2])
    D = decay * (2.0 / omega * s * v0[1] + c * v0[2])
    return np.column_stack([H, L, D])


def heat_current(s: StateVector, bath: BathSpec) -> float:
    """Heat flow into the medium, -Gamma (H - H_eq)."""
    return float(-bath.conductance * (s.energy - equilibrium_energy(s.omega, bath.temperature)))


# ----------------------------------------------------------------- adiabats

def _generator(alpha: float, omega_sq: float) -> np.ndarray:
    return np.array([
        [alpha, -alpha, 0.0],
        [-alpha, alpha, -omega_sq],
        [0.0, 4.0, 0.0],
    ])


def _sudden_matrix(ratio: float) -> np.ndarray:
    r2 = ratio * ratio
    return np.array([
        [0.5 * (1 + r2), 0.5 * (1 - r2), 0.0],
        [0.5 * (1 - r2), 0.5 * (1 + r2), 0.0],
        [0.0, 0.0, 1.0],
    ])


def adiabat_map_sudden(omega_i: float, omega_f: float) -> AffineBranchMap:
    """Instantaneous frequency jump: <Q^2>, <P^2>, D frozen."""
    if not (omega_i > 0 and omega_f > 0):
        raise ValueError("frequencies must be positive")
    r = omega_f / omega_i
    lr = np.log(r)
    h = 0.5 * (r * r - 1.0)
    # friction = -int alpha L dt along the sudden path, in s = ln(omega/omega_i)
    fric = -0.5 * np.array([lr - h, lr + h, 0.0])
    return AffineBranchMap(_sudden_matrix(r), np.zeros(3), omega_i, omega_f, 0.0, fric)


def _identity_adiabat(sched: AdiabatSchedule) -> AffineBranchMap | None:
    # below ~1e-12 rad of phase the sudden map is exact to double precision
    if max(sched.omega_start, sched.omega_end) * sched.duration < 1e-12:
        m = adiabat_map_sudden(sched.omega_start, sched.omega_end)
        return AffineBranchMap(m.matrix, m.offset, m.omega_in, m.omega_out, sched.duration, m.friction)
    return None


def _free_evolution(omega: float, tau: float) -> AffineBranchMap:
    c, s = _rotation_block(omega, tau)
    M = np.array([[1.0, 0, 0], [0, c, -0.5 * omega * s], [0, 2.0 / omega * s, c]])
    return AffineBranchMap(M, np.zeros(3), omega, omega, float(tau))


def adiabat_map_numeric(sched: AdiabatSchedule, tol: float = 1e-10, atol: float = 1e-12) -> AffineBranchMap:
    """Integrate the three identity columns through the adiabat with DOP853.

    The friction row -int alpha L dt is integrated on the same adaptive grid.
    """
    quick = _identity_adiabat(sched)
    if quick is not None:
        return quick
    w0, alpha = sched.omega_start, sched.alpha

    def rhs(t, y):
        Y = y[:9].reshape(3, 3)
        w = w0 * np.exp(alpha * t)
        dY = _generator(alpha, w * w) @ Y
        return np.concatenate([dY.ravel(), -alpha * Y[1]])

    y0_ = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    sol = solve_ivp(rhs, (0.0, sched.duration), y0_, method="DOP853", rtol=tol, atol=atol)
    if not sol.success:
        raise IntegrationError(sol.message)
    y = sol.y[:, -1]
    return AffineBranchMap(y[:9].reshape(3, 3), np.zeros(3), sched.omega_start,
                           sched.omega_end, sched.duration, y[9:].copy())


def _bessel_frame(omega, alpha):
    """Fundamental matrix [[q1, q2], [dq1/dt, dq2/dt]] of q'' + omega(t)^2 q = 0."""
    x = omega / abs(alpha)
    return np.array([
        [j0(x), y0(x)],
        [-alpha * x * j1(x), -alpha * x * y1(x)],
    ])


def _moment_transfer(T: np.ndarray) -> np.ndarray:
    """Map on (<Q^2>, <P^2>, <D>) induced by (Q, P) -> T (Q, P)."""
    u, v, du, dv = T[0, 0], T[0, 1], T[1, 0], T[1, 1]
    return np.array([
        [u * u, v * v, u * v],
        [du * du, dv * dv, du * dv],
        [2 * u * du, 2 * v * dv, u * dv + du * v],
    ])


def _to_moments(omega: float) -> np.ndarray:
    w2 = omega * omega
    return np.array([[1 / w2, -1 / w2, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def _from_moments(omega: float) -> np.ndarray:
    w2 = omega * omega
    return np.array([[0.5 * w2, 0.5, 0.0], [-0.5 * w2, 0.5, 0.0], [0.0, 0.0, 1.0]])


def _exact_matrix(w0: float, w1: float, alpha: float) -> np.ndarray:
    F0 = _bessel_frame(w0, alpha)
    F1 = _bessel_frame(w1, alpha)
    # det F = 2 alpha / pi for every t (Wronskian of J0, Y0)
    F0_inv = np.array([[F0[1, 1], -F0[0, 1]], [-F0[1, 0], F0[0, 0]]]) * (np.pi / (2 * alpha))
    T = F1 @ F0_inv
    return _from_moments(w1) @ _moment_transfer(T) @ _to_moments(w0)


def adiabat_map_exact(sched: AdiabatSchedule) -> AffineBranchMap:
    """Closed form for constant alpha.

    With x = omega(t)/|alpha| the classical equation q'' + omega^2 q = 0
    becomes Bessel's equation of order zero, so Q(t), P(t) are linear in
    (Q0, P0) with coefficients built from J0, Y0, J1, Y1.  Second moments
    follow, and the friction work is -alpha (D_end - D_start)/4 because
    dD/dt = 4L on the adiabat.
    """
    quick = _identity_adiabat(sched)
    if quick is not None:
        return quick
    w0, w1, alpha = sched.omega_start, sched.omega_end, sched.alpha
    if alpha == 0.0:
        return _free_evolution(w0, sched.duration)
    M = _exact_matrix(w0, w1, alpha)
    fric = -0.25 * alpha * (M[2] - np.array([0.0, 0.0, 1.0]))
    return AffineBranchMap(M, np.zeros(3), w0, w1, sched.duration, fric)


def adiabat_map_quasistatic(sched: AdiabatSchedule) -> AffineBranchMap:
    """alpha/omega -> 0: N = H/omega - 1/2 conserved, no friction.

    The (L, omega D/2) pair keeps its length relative to omega and rotates by
    the accumulated phase int 2 omega dt, which keeps X/omega invariant.
    """
    r = sched.omega_end / sched.omega_start
    phi = sched.phase()
    c, s = np.cos(phi), np.sin(phi)
    w0, w1 = sched.omega_start, sched.omega_end
    # rotation of (L, w D/2) by phi, scaled by r, mapped back to D at w1
    M = np.array([
        [r, 0.0, 0.0],
        [0.0, r * c, -r * s * 0.5 * w0],
        [0.0, 2.0 / w1 * r * s, r * c * w0 / w1],
    ])
    return AffineBranchMap(M, np.zeros(3), w0, w1, sched.duration)


def adiabat_trajectory(v0: np.ndarray, sched: AdiabatSchedule, t: np.ndarray,
                       mode: str = "exact", tol: float = 1e-10) -> np.ndarray:
    """States (len(t), 3) along an adiabat for any propagation mode."""
    t = np.asarray(t, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    w0, alpha = sched.omega_start, sched.alpha
    if mode == "numeric":
        if sched.duration == 0:
            return np.tile(v0, (len(t), 1))

        def rhs(tt, y):
            w = w0 * np.exp(alpha * tt)
            return _generator(alpha, w * w) @ y

        sol = solve_ivp(rhs, (0.0, sched.duration), v0, method="DOP853",
                        rtol=tol, atol=1e-12, t_eval=t)
        if not sol.success:
            raise IntegrationError(sol.message)
        return sol.y.T
    out = np.empty((len(t), 3))
    for i, ti in enumerate(t):
        if ti == 0:
            out[i] = v0
            continue
        w = float(sched.omega_at(ti))
        sub = AdiabatSchedule(w0, w, ti)
        if mode == "exact":
            M = adiabat_map_exact(sub).matrix
        elif mode == "sudden":
            M = _sudden_matrix(w / w0)
        elif mode == "quasistatic":
            M = adiabat_map_quasistatic(sub).matrix
        else:
            raise ValueError(f"unknown adiabat mode {mode!r}")
        out[i] = M @ v0
    return out


def adiabat_quasistatic_correction(s0: StateVector, sched: AdiabatSchedule) -> StateVector:
    """Phase-averaged energy to second order in alpha/omega at the end of the ramp.

    L and D average out and are returned as zero.
    """
    w0, w = sched.omega_start, sched.omega_end
    alpha = sched.alpha
    if abs(alpha) / w0 > 0.2:
        warnings.warn(f"alpha/omega0 = {alpha / w0:.3g} outside the quasistatic regime",
                      RuntimeWarning, stacklevel=2)
    eps2 = (alpha / (2 * w0)) ** 2
    H = (s0.energy * (w / w0) * (1 + eps2) - s0.lagrangian * (w / w0) * eps2
         + s0.correlation * alpha * w / (4 * w0))
    return StateVector(float(H), 0.0, 0.0, w)


def instantaneous_power(s: StateVector, alpha: float) -> tuple[float, float, float]:
    """(total, external, friction) power on an adiabat."""
    ext = alpha * s.energy
    fric = -alpha * s.lagrangian
    return ext + fric, ext, fric


def friction_work_closed_form(engine, alpha: float, high_temperature: bool = False) -> float:
    """Friction work summed over both adiabats of a fully equilibrating cycle (D(0) = 0)."""
    wh, wc = engine.omega_h, engine.omega_c
    Th, Tc = engine.hot.temperature, engine.cold.temperature
    if high_temperature:
        C = wh / wc
        return 0.25 * Th * (alpha / wc) ** 2 * (C ** -3 + C * Tc / Th)
    coth_h = 2 * equilibrium_energy(wh, Th) / wh
    coth_c = 2 * equilibrium_energy(wc, Tc) / wc
    return 0.125 * ((alpha / wh) ** 2 * wc * coth_h + (alpha / wc) ** 2 * wh * coth_c)
