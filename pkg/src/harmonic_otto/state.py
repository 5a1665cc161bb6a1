"""Thermodynamic observables of a Gaussian harmonic working medium.

Units: hbar = k_B = m = 1.  A state of the working medium is fully described
by the expectations of the Hamiltonian ``H``, the Lagrangian ``L`` and the
position-momentum correlation ``D = QP + PQ`` at the instantaneous frequency
``omega``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StateVector",
    "GaussianParams",
    "ExpSumParams",
    "BathSpec",
    "UnphysicalStateError",
    "PureStateError",
    "ProductFormDomainError",
    "equilibrium_energy",
    "thermal_state",
    "casimir",
    "params_from_expectations",
    "expectations_from_params",
    "chi_from_product_params",
    "canonical_exponents",
    "von_neumann_entropy",
    "symplectic_entropy",
    "energy_entropy",
    "internal_temperature",
]

# relative margin above the Heisenberg bound below which a state counts as pure
PURE_TOL = 1e-12


class UnphysicalStateError(ValueError):
    """The observables violate the Heisenberg bound X >= omega/2."""


class PureStateError(ValueError):
    """The state is pure; the product-form inverse temperature diverges."""


class ProductFormDomainError(ValueError):
    """The state has no product-form representation with real beta > 0."""


@dataclass(frozen=True)
class StateVector:
    energy: float
    lagrangian: float
    correlation: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.energy, self.lagrangian, self.correlation])

    def scaled(self) -> np.ndarray:
        """(H, L, omega*D/2): all three entries in energy units."""
        return np.array([self.energy, self.lagrangian, 0.5 * self.omega * self.correlation])

    @classmethod
    def from_array(cls, v, omega: float) -> "StateVector":
        return cls(float(v[0]), float(v[1]), float(v[2]), float(omega))

    @property
    def number(self) -> float:
        """Occupation <N> = H/omega - 1/2."""
        return self.energy / self.omega - 0.5


@dataclass(frozen=True)
class GaussianParams:
    """Parameters of rho = exp(gamma a^2) exp(-beta H) exp(gamma* a^+2) / Z."""

    beta: float
    gamma: complex

    def boltzmann(self, omega: float) -> float:
        return float(np.exp(self.beta * omega))

    def normalizable(self, omega: float) -> bool:
        q = np.exp(-self.beta * omega)
        # 4|gamma|^2 < (e^{beta w} - 1)^2, written in q = e^{-beta w} to survive beta -> inf
        return 4.0 * abs(self.gamma) ** 2 * q * q < (1.0 - q) ** 2


@dataclass(frozen=True)
class ExpSumParams:
    """Parameters of rho = exp(chi1 a^2 + chi2 H + chi1* a^+2) / Z."""

    chi1: complex
    chi2: float


@dataclass(frozen=True)
class BathSpec:
    temperature: float
    conductance: float

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"bath temperature must be > 0, got {self.temperature}")
        if self.conductance < 0:
            raise ValueError(f"heat conductance must be >= 0, got {self.conductance}")

    def rates(self, omega: float) -> tuple[float, float]:
        """Detailed-balance rates (k_down, k_up) with k_down - k_up = conductance."""
        boltz = np.exp(-omega / self.temperature)
        k_down = self.conductance / -np.expm1(-omega / self.temperature)
        return float(k_down), float(k_down * boltz)


def _check_omega(omega):
    if not omega > 0:
        raise ValueError(f"frequency must be positive, got {omega}")


def equilibrium_energy(omega: float, T: float) -> float:
    """(omega/2) coth(omega / 2T); the ground-state energy at T = 0."""
    _check_omega(omega)
    if T < 0:
        raise ValueError(f"temperature must be >= 0, got {T}")
    if T == 0:
        return 0.5 * omega
    with np.errstate(over="ignore"):   # omega >> T: occupation underflows to 0
        return 0.5 * omega + omega / np.expm1(omega / T)


def thermal_state(omega: float, T: float) -> StateVector:
    return StateVector(equilibrium_energy(omega, T), 0.0, 0.0, omega)


def _casimir_sq(s: StateVector) -> float:
    H, L, D, w = s.energy, s.lagrangian, s.correlation, s.omega
    return (H - L) * (H + L) - 0.25 * (w * D) ** 2


def casimir(s: StateVector) -> float:
    """X = sqrt(H^2 - L^2 - omega^2 D^2 / 4), invariant (as X/omega) under unitary branches."""
    _check_omega(s.omega)
    x2 = _casimir_sq(s)
    if not s.energy > 0 or x2 < 0:
        raise UnphysicalStateError(f"X^2 = {x2:.6g} for {s}")
    x = np.sqrt(x2)
    # allow rounding at the pure-state boundary
    if x < 0.5 * s.omega * (1.0 - 1e-12):
        raise UnphysicalStateError(f"X = {x:.12g} below omega/2 = {0.5 * s.omega:.12g}")
    return float(max(x, 0.5 * s.omega))


def params_from_expectations(s: StateVector) -> GaussianParams:
    """Invert the product form: (H, L, D) -> (beta, gamma).

    Raises PureStateError at the pure boundary and ProductFormDomainError for
    states squeezed too strongly to be written with real positive beta.
    """
    X = casimir(s)
    H, L, D, w = s.energy, s.lagrangian, s.correlation, s.omega
    if X - 0.5 * w < PURE_TOL * w:
        raise PureStateError(f"X - omega/2 = {X - 0.5 * w:.3g}: pure state")
    # 4X^2 + w^2 - 4Hw rewritten to avoid cancellation near the ground state
    two_x_minus_w = (4 * X * X - w * w) / (2 * X + w)
    h_minus_x = (L * L + 0.25 * (w * D) ** 2) / (H + X)
    den = two_x_minus_w ** 2 - 4 * w * h_minus_x
    if not den > 0:
        raise ProductFormDomainError(
            f"product form needs 4X^2 + w^2 > 4Hw; got {den:.3g} for {s}")
    num = (2 * X + w) * two_x_minus_w
    boltz = num / den
    gamma = -w * complex(2 * L, w * D) / den
    p = GaussianParams(beta=float(np.log(boltz) / w), gamma=gamma)
    if not p.normalizable(w):
        raise ProductFormDomainError(f"reconstructed parameters not normalizable for {s}")
    return p


def _a2_and_energy(p: GaussianParams, omega: float) -> tuple[complex, float]:
    q = np.exp(-p.beta * omega)
    g = abs(p.gamma) ** 2
    den = (1.0 - q) ** 2 - 4.0 * g * q * q
    H = 0.5 * omega * (1.0 - q * q - 4.0 * g * q * q) / den
    a2 = 2.0 * np.conj(p.gamma) * q * q / den
    return complex(a2), float(H)


def expectations_from_params(p: GaussianParams, omega: float) -> StateVector:
    """<H>, <L> = -omega Re<a^2>, <D> = 2 Im<a^2> of the product-form state."""
    _check_omega(omega)
    if not p.beta > 0:
        raise ValueError(f"beta must be positive, got {p.beta}")
    if not p.normalizable(omega):
        raise ValueError(f"{p} is not normalizable at omega={omega}")
    a2, H = _a2_and_energy(p, omega)
    return StateVector(H, -omega * a2.real, 2.0 * a2.imag, omega)


def chi_from_product_params(p: GaussianParams, omega: float) -> ExpSumParams:
    """Exponent-sum coefficients (chi1, chi2) equivalent to the product form.

    With Delta = (e^{2 beta w} - 1 - 4|gamma|^2)^2 - 16|gamma|^2 the relation
    reads chi1 = 2 gamma arcsinh(e^{-beta w} sqrt(Delta)/2) / sqrt(Delta).
    Principal branches; arcsinh(c z)/z is even in z so the sqrt branch
    drops out, and no division by gamma is needed.
    """
    _check_omega(omega)
    if not p.normalizable(omega):
        raise ValueError(f"{p} is not normalizable at omega={omega}")
    bw = p.beta * omega
    gamma = complex(p.gamma)
    g = abs(gamma) ** 2
    e2m1 = np.expm1(2 * bw)
    delta = (e2m1 - 4.0 * g) ** 2 - 16.0 * g
    root = np.sqrt(complex(delta))
    y = 0.5 * np.exp(-bw) * root
    # arcsinh(y)/y -> 1 as y -> 0
    ratio = np.arcsinh(y) / y if abs(y) > 1e-8 else 1.0 - y * y / 6.0
    half = 0.5 * np.exp(-bw) * ratio          # arcsinh(y)/sqrt(Delta)
    chi1 = 2.0 * gamma * half
    chi2 = half * (4.0 * g - e2m1) / omega
    return ExpSumParams(complex(chi1), float(np.real(chi2)))


def canonical_exponents(s: StateVector) -> tuple[float, float, float]:
    """(b_H, b_L, b_D) with rho = exp(-(b_H H + b_L L + b_D D)) / Z.

    Valid for every mixed state, inside or outside the product-form domain.
    The exponent is parallel to (H, -L, -omega^2 D/4) in the su(1,1) sense,
    scaled by kappa = ln((2 nu + 1)/(2 nu - 1)) / nu with nu = X/omega.
    """
    w = s.omega
    nu = casimir(s) / w
    if nu - 0.5 <= PURE_TOL * nu:
        raise PureStateError(f"pure state has no finite exponent: {s}")
    kappa = float(np.log1p(1.0 / (nu - 0.5)) / nu)
    return kappa * s.energy / w ** 2, -kappa * s.lagrangian / w ** 2, -0.25 * kappa * s.correlation


def symplectic_entropy(s: StateVector) -> float:
    """S = (nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2), nu = X/omega."""
    nu = casimir(s) / s.omega
    lo = max(nu - 0.5, 0.0)
    return float((nu + 0.5) * np.log(nu + 0.5) - (lo * np.log(lo) if lo > 0 else 0.0))


def von_neumann_entropy(s: StateVector) -> float:
    """Von Neumann entropy from the exponent-sum form of the state.

    States at the pure boundary, or outside the product-form domain, are
    evaluated through the symplectic eigenvalue instead.
    """
    try:
        p = params_from_expectations(s)
    except (PureStateError, ProductFormDomainError):
        return symplectic_entropy(s)
    w = s.omega
    chi = chi_from_product_params(p, w)
    bw = p.beta * w
    q = np.exp(-bw)
    g = abs(p.gamma) ** 2
    # ln csch(bw/2) - ln 2, without overflow
    log_csch_half = -0.5 * bw - np.log1p(-q)
    log_norm = -0.5 * np.log1p(-4.0 * g * q * q / (1.0 - q) ** 2)
    S = (-chi.chi2 * s.energy + chi.chi1.imag * s.correlation
         + chi.chi1.real * 2.0 / w * s.lagrangian + log_csch_half + log_norm)
    return float(S)


def _occupation(energy: float, omega: float) -> float:
    _check_omega(omega)
    n = energy / omega - 0.5
    if n < -1e-12:
        raise ValueError(f"energy {energy} below the ground-state energy {omega / 2}")
    return max(n, 0.0)


def energy_entropy(s: StateVector) -> float:
    """Entropy of a thermal oscillator with the same <H>; depends on H and omega only."""
    n = _occupation(s.energy, s.omega)
    if n == 0.0:
        return 0.0
    return float((n + 1.0) * np.log1p(n) - n * np.log(n))


def internal_temperature(s: StateVector) -> float:
    """T_int with (omega/2) coth(omega / 2 T_int) = <H>."""
    n = _occupation(s.energy, s.omega)
    if n == 0.0:
        return 0.0
    return float(s.omega / np.log1p(1.0 / n))
