"""Truncated atom-cavity Hilbert space, parameter sets and frame changes.

Unit convention
---------------
Every frequency, rate and coupling is stored as the number ``X`` in an angular
quantity ``2*pi*X MHz``.  Time is measured in microseconds, so a generator
built from these numbers must be multiplied by ``TWO_PI`` to obtain rad/us.

Basis order is atom slowest (``|g>``, ``|e>``) and cavity Fock index fastest,
so the state ``|e, n>`` sits at index ``N_c + n``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ResonantDriveError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HilbertSpec:
    """Factorization of the truncated space.

    Parameters
    ----------
    cavity_levels : int
        Fock truncation ``N_c``; photon numbers ``0 .. N_c - 1`` are kept.
    atom_levels : int
        Always 2.
    """

    cavity_levels: int = 12
    atom_levels: int = 2

    def __post_init__(self):
        if self.atom_levels != 2:
            raise ConfigError("the atom is a two-level system")
        if int(self.cavity_levels) != self.cavity_levels or self.cavity_levels < 2:
            raise ConfigError(f"cavity_levels must be an integer >= 2, got {self.cavity_levels}")

    @property
    def dim(self) -> int:
        return self.atom_levels * self.cavity_levels


@dataclass(frozen=True)
class Operators:
    """The standard operator set on one :class:`HilbertSpec`."""

    space: HilbertSpec
    a: np.ndarray
    adag: np.ndarray
    sm: np.ndarray
    sp: np.ndarray
    sz: np.ndarray
    identity: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return self.adag @ self.a


def build_operators(space: HilbertSpec) -> Operators:
    """Return ``a``, ``a^dag``, ``sigma_-``, ``sigma_+``, ``sigma_z`` and ``I``.

    ``sigma_- = |g><e|`` and ``sigma_z = |e><e| - |g><g|``.  Cavity operators
    act as the identity on the atom factor and vice versa.
    """
    if not isinstance(space, HilbertSpec):
        raise ConfigError("build_operators expects a HilbertSpec")
    nc = space.cavity_levels
    a_c = np.diag(np.sqrt(np.arange(1, nc, dtype=float)), 1).astype(complex)
    i_c = np.eye(nc, dtype=complex)
    i_a = np.eye(2, dtype=complex)
    sm_a = np.array([[0, 1], [0, 0]], dtype=complex)
    sz_a = np.diag([-1.0, 1.0]).astype(complex)

    a = tensor(i_a, a_c)
    sm = tensor(sm_a, i_c)
    return Operators(
        space=space,
        a=a,
        adag=a.conj().T.copy(),
        sm=sm,
        sp=sm.conj().T.copy(),
        sz=tensor(sz_a, i_c),
        identity=np.eye(space.dim, dtype=complex),
    )


def tensor(A, B, space: HilbertSpec | None = None) -> np.ndarray:
    """Kronecker product ``A (x) B`` of two square factor operators.

    If ``space`` is given the product dimension must equal ``space.dim``.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    for name, M in (("A", A), ("B", B)):
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ConfigError(f"{name} must be a square matrix, got shape {M.shape}")
    if space is not None and A.shape[0] * B.shape[0] != space.dim:
        raise ConfigError(
            f"factor dimensions {A.shape[0]}x{B.shape[0]} do not match space dimension {space.dim}"
        )
    return np.kron(A, B)


@dataclass(frozen=True)
class SystemSpec:
    """Physical parameters, all in units of 2*pi*MHz (``n_th`` is a number).

    Defaults are the device parameters of the reference experiment.  Detunings
    are always derived from the absolute frequencies.
    """

    omega_a: float = 6814.0
    omega_c: float = 6777.0
    omega_d: float = 6814.0
    omega_pc: float = 6777.0
    gamma_1: float = 3.6
    gamma_phi: float = 1.0
    gamma_e: float = 3.5
    kappa: float = 1.5
    g_c: float = 7.5
    Omega: float = 0.0
    Omega_c: float = 0.0
    pump_amp: float = 0.0
    n_th: float = 0.0
    hilbert: HilbertSpec = field(default_factory=HilbertSpec)

    def __post_init__(self):
        for name in ("gamma_1", "gamma_phi", "gamma_e", "kappa", "n_th"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        for name in ("omega_a", "omega_c", "omega_d", "omega_pc", "g_c", "Omega", "Omega_c", "pump_amp"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.gamma_e > self.gamma_1:
            raise ConfigError("gamma_e cannot exceed gamma_1")
        if not isinstance(self.hilbert, HilbertSpec):
            raise ConfigError("hilbert must be a HilbertSpec")

    @property
    def delta_a(self) -> float:
        return self.omega_a - self.omega_d

    @property
    def delta_c(self) -> float:
        return self.omega_c - self.omega_d

    @property
    def delta_0(self) -> float:
        return self.omega_a - self.omega_c

    @property
    def gamma_2(self) -> float:
        return self.gamma_1 / 2 + self.gamma_phi

    @property
    def pump_detuning(self) -> float:
        """Pump frequency relative to the drive, ``omega_pc - omega_d``."""
        return self.omega_pc - self.omega_d

    def replace(self, **changes) -> "SystemSpec":
        return dataclasses.replace(self, **changes)

    def with_cavity_levels(self, n: int) -> "SystemSpec":
        return dataclasses.replace(self, hilbert=HilbertSpec(cavity_levels=n))


def displaced_drive(spec: SystemSpec, include_cavity_loss: bool = False) -> float:
    """Atom Rabi frequency produced by the cavity-port drive ``Omega_c``.

    By default this is the lossless result ``-g_c * Omega_c / Delta_c``.  With
    ``include_cavity_loss`` the steady coherent amplitude of the damped cavity,
    ``alpha = -(Omega_c/2) / (Delta_c - i kappa/2)``, is used and the magnitude
    becomes ``g_c |Omega_c| / sqrt(Delta_c**2 + kappa**2/4)``; the returned value
    keeps the lossless sign so that the two agree as ``kappa -> 0``.
    """
    dc = spec.delta_c
    lossless = -spec.g_c * spec.Omega_c / dc
    if not include_cavity_loss:
        return lossless
    magnitude = abs(spec.g_c * spec.Omega_c) / math.hypot(dc, spec.kappa / 2)
    return math.copysign(magnitude, lossless)


def displace_frame(
    spec: SystemSpec, floor: float = 0.1, include_cavity_loss: bool = False
) -> SystemSpec:
    """Move the cavity-port drive onto the atom.

    The port drive ``Omega_c`` is removed and ``-g_c*Omega_c/Delta_c`` is added
    to the atom drive.  The exact damped-cavity variant is available through
    ``include_cavity_loss`` (see :func:`displaced_drive`).

    Raises
    ------
    ResonantDriveError
        If ``|Delta_c|`` is below ``floor`` (2*pi*MHz).
    """
    if abs(spec.delta_c) < floor:
        raise ResonantDriveError(
            f"|Delta_c| = {abs(spec.delta_c)} is below the resonant-drive floor {floor}"
        )
    if spec.Omega_c == 0:
        return spec
    extra = displaced_drive(spec, include_cavity_loss)
    return dataclasses.replace(spec, Omega=spec.Omega + extra, Omega_c=0.0)


def port_drive_for(spec: SystemSpec, Omega: float) -> float:
    """Port amplitude ``Omega_c`` that the lossless displacement maps to ``Omega``."""
    if spec.g_c == 0:
        raise ConfigError("a port drive cannot reach the atom when g_c = 0")
    return -Omega * spec.delta_c / spec.g_c
