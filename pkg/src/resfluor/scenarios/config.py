"""Scenario configuration: flat ``key = value`` text with unit suffixes.

Frequencies take ``MHz`` (default) or ``GHz``; times take ``us`` (default) or
``ns``.  Lists are comma separated with one optional trailing unit, e.g.
``relax_omegas = 14.5, 37.0 MHz``.  Blank lines and ``#`` comments are
ignored; unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError
from ..hilbert import HilbertSpec, SystemSpec

SCENARIOS = (
    "spectrum",
    "sweep",
    "g1",
    "dynamics",
    "relax",
    "pumped-spectrum",
    "linewidth-sweep",
    "fit",
    "compare",
)

_FREQ_UNITS = {"mhz": 1.0, "ghz": 1000.0}
_TIME_UNITS = {"us": 1.0, "ns": 1e-3}
_SPEC_KEYS = (
    "omega_a", "omega_c", "omega_d", "omega_pc", "gamma_1", "gamma_phi", "gamma_e",
    "kappa", "g_c", "Omega", "Omega_c", "pump_amp", "n_th",
)  # fmt: skip


@dataclass(frozen=True)
class ScenarioConfig:
    """Every knob of a scenario run, defaulting to the reference device.

    Frequencies are 2*pi*MHz, times are us.  ``N_c`` is the starting
    truncation; with ``converge`` set the run raises it as needed.
    """

    scenario: str = "spectrum"
    # physical parameters
    omega_a: float = 6814.0
    omega_c: float = 6777.0
    omega_d: float = 6814.0
    omega_pc: float = 6777.0
    gamma_1: float = 3.6
    gamma_phi: float = 1.0
    gamma_e: float = 3.5
    kappa: float = 1.5
    g_c: float = 7.5
    Omega: float = 37.0
    Omega_c: float = 0.0
    pump_amp: float = 0.0
    n_th: float = 0.0
    N_c: int = 12
    # frequency band and grids
    f_band: float = 60.0
    df: float = 0.05
    tau_span: float = 0.0
    t_span: float = 1.0
    t_step: float = 0.0005
    sweep_start: float = 20.0
    sweep_stop: float = 55.0
    sweep_step: float = 1.0
    # scenario options
    port_drive: bool = False
    drive_mode: str = "auto"
    converge: bool = True
    rel_tol: float = 1e-3
    n_max: int = 40
    dephasing: str = "rates"
    window: str = "none"
    method: str = "auto"
    relax_omegas: tuple[float, ...] = (14.5, 37.0)
    relax_window: float = 1.0
    g1_omegas: tuple[float, ...] = (14.5, 37.0, 52.6)
    target_n: float = 1.4
    n_t0: int = 16
    regime: str = "vacuum"
    fit_kind: str = "all"
    fit_data: str = ""
    noise: float = 0.001
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.drive_mode not in ("auto", "port", "displaced"):
            raise ConfigError("drive_mode must be auto, port or displaced")
        if self.method not in ("auto", "transform", "eig"):
            raise ConfigError("method must be auto, transform or eig")
        if self.dephasing not in ("rates", "literal"):
            raise ConfigError("dephasing must be rates or literal")
        if self.window not in ("none", "hann"):
            raise ConfigError("window must be none or hann")
        if self.regime not in ("vacuum", "pumped"):
            raise ConfigError("regime must be vacuum or pumped")
        if self.fit_kind not in ("all", "transmon", "reflection"):
            raise ConfigError("fit_kind must be all, transmon or reflection")
        if self.df <= 0 or self.f_band <= 0 or self.t_step <= 0 or self.t_span <= 0:
            raise ConfigError("grid spacings and spans must be positive")
        if self.sweep_step <= 0 or self.sweep_stop < self.sweep_start:
            raise ConfigError("sweep range must be increasing with a positive step")
        if self.rel_tol <= 0:
            raise ConfigError("rel_tol must be positive")
        if self.n_t0 < 16:
            raise ConfigError("n_t0 must be at least 16")
        self.system()  # validates the physical block

    def system(self) -> SystemSpec:
        """The :class:`SystemSpec` encoded by this configuration."""
        kw = {k: getattr(self, k) for k in _SPEC_KEYS}
        return SystemSpec(hilbert=HilbertSpec(cavity_levels=self.N_c), **kw)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def sweep_values(self) -> list[float]:
        n = int(math.floor((self.sweep_stop - self.sweep_start) / self.sweep_step + 1e-9))
        return [round(self.sweep_start + i * self.sweep_step, 12) for i in range(n + 1)]

    def items(self):
        for f in dataclasses.fields(self):
            yield f.name, getattr(self, f.name)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_FREQ_KEYS = set(_SPEC_KEYS) | {"f_band", "df", "sweep_start", "sweep_stop", "sweep_step", "relax_omegas", "g1_omegas"}
_TIME_KEYS = {"tau_span", "t_span", "t_step", "relax_window"}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")


def _number(key: str, text: str, unit_default: str | None = None) -> float:
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number")
    value = float(m.group(1))
    unit = (m.group(2) or unit_default or "").lower()
    if key in _FREQ_KEYS:
        if unit and unit not in _FREQ_UNITS:
            raise ConfigError(f"{key}: frequency unit must be MHz or GHz, got {m.group(2)!r}")
        return value * _FREQ_UNITS.get(unit, 1.0)
    if key in _TIME_KEYS:
        if unit and unit not in _TIME_UNITS:
            raise ConfigError(f"{key}: time unit must be us or ns, got {m.group(2)!r}")
        return value * _TIME_UNITS.get(unit, 1.0)
    if unit:
        raise ConfigError(f"{key} is dimensionless; unexpected unit {m.group(2)!r}")
    return value


def parse_value(key: str, text: str):
    """Convert the text of one entry to the type of field ``key``."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    default = _FIELDS[key].default
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    if isinstance(default, tuple):
        parts = [p for p in text.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"{key}: empty list")
        m = _NUMBER.match(parts[-1])
        unit = m.group(2) if m else None
        return tuple(_number(key, p, unit) for p in parts)
    if isinstance(default, int):
        value = _number(key, text)
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {text!r}")
        return int(value)
    if isinstance(default, float):
        return _number(key, text)
    return text


def parse_assignments(lines, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into a dict of typed values."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return out


def load_config(
    path: str | Path | None = None, overrides=(), scenario: str | None = None, out: str | None = None
) -> ScenarioConfig:
    """Defaults, then the file at ``path``, then ``key=value`` overrides."""
    values = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from None
        values.update(parse_assignments(text.splitlines(), str(p)))
    values.update(parse_assignments(overrides, "--set"))
    if scenario is not None:
        values["scenario"] = scenario
    if out is not None:
        values["out"] = out
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
