"""Flat key=value run configuration with presets and strict validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .analysis import FIGURES, SweepRanges
from .cycle import ADIABAT_MODES, EngineSpec, TimeAllocation
from .fock import FockConfig
from .state import BathSpec

__all__ = ["ConfigError", "RunConfig", "parse_config_text", "load_config", "explain"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    preset: str = ""
    omega_h: float = 2.0
    omega_c: float = 1.0
    T_h: float = 5.0
    T_c: float = 1.0
    gamma_h: float = 0.03
    gamma_c: float = 0.03
    tau_h: float = 6.0
    tau_hc: float = 1.0
    tau_c: float = 12.0
    tau_ch: float = 1.0
    adiabat_mode: str = "numeric"
    dt: float = 0.05
    # sweep
    n: int = 1000
    seed: int = 1
    sweep_mode: str = "exact"
    iso_min: float = 0.0     # 0: default 1e-2/omega_c
    iso_max: float = 0.0     # 0: default 1e3/omega_c
    adi_min: float = 0.0
    adi_max: float = 0.0
    workers: int = 0         # 0: HARMONIC_OTTO_THREADS or 1
    sudden_threshold: float = 5.0
    quasistatic_threshold: float = 0.05
    # oracle
    fock_n_max: int = 0      # 0: adaptive
    fock_leak_tol: float = 1e-10
    oracle_rtol: float = 1e-5
    # output
    output: str = "-"
    units: str = "absolute"
    rtol: float = 1e-10

    def __post_init__(self):
        if self.adiabat_mode not in ADIABAT_MODES:
            raise ConfigError(f"adiabat_mode must be one of {ADIABAT_MODES}")
        if self.sweep_mode not in ADIABAT_MODES:
            raise ConfigError(f"sweep_mode must be one of {ADIABAT_MODES}")
        if self.units not in ("absolute", "omega_c"):
            raise ConfigError("units must be 'absolute' or 'omega_c'")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        try:
            self.engine()
            self.allocation()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def engine(self) -> EngineSpec:
        return EngineSpec(self.omega_h, self.omega_c,
                          BathSpec(self.T_h, self.gamma_h), BathSpec(self.T_c, self.gamma_c))

    def allocation(self) -> TimeAllocation:
        return TimeAllocation(self.tau_h, self.tau_hc, self.tau_c, self.tau_ch)

    def sweep_ranges(self) -> SweepRanges:
        d = SweepRanges.default(self.omega_c)
        iso = (self.iso_min or d.iso[0], self.iso_max or d.iso[1])
        adi = (self.adi_min or d.adi[0], self.adi_max or d.adi[1])
        try:
            return SweepRanges(iso, adi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def fock(self) -> FockConfig:
        return FockConfig(n_max=self.fock_n_max or None, leak_tol=self.fock_leak_tol)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TYPES = {"float": float, "int": int, "str": str}


def _preset_values(name: str) -> dict:
    if name not in FIGURES:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(FIGURES)}")
    f = FIGURES[name]
    out = dict(omega_h=f["omega_h"], omega_c=f["omega_c"], T_h=f["T_h"], T_c=f["T_c"],
               gamma_h=f["gamma"], gamma_c=f["gamma"])
    if "tau" in f:
        out.update(zip(("tau_h", "tau_hc", "tau_c", "tau_ch"), f["tau"]))
    return out


def _convert(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown key {key!r}")
    typ = _TYPES[_FIELDS[key].type]
    try:
        return typ(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_pairs(lines) -> dict:
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected key = value, got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = _convert(k, v)
    return out


def parse_config_text(text: str) -> dict:
    return parse_pairs(text.splitlines())


def load_config(path: str | None = None, overrides: list[str] = ()) -> RunConfig:
    """File values, then command-line overrides; a preset is applied first."""
    values = {}
    if path:
        try:
            values.update(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values.update(parse_pairs(overrides))
    preset = values.get("preset", "")
    merged = _preset_values(preset) if preset else {}
    # explicit keys win over the preset
    merged.update(values)
    return RunConfig(**merged)


def explain(cfg: RunConfig) -> str:
    default = RunConfig()
    rows = []
    for f in fields(RunConfig):
        cur, dflt = getattr(cfg, f.name), getattr(default, f.name)
        mark = "" if cur == dflt else "   (default " + repr(dflt) + ")"
        rows.append(f"{f.name} = {cur}{mark}")
    return "\n".join(rows) + "\n"


def as_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)
