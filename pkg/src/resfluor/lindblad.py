"""Lindblad generator, time evolution and steady states.

Density matrices are vectorized row-major (``rho.ravel()``), for which
``vec(A X B) = kron(A, B.T) vec(X)``.  The dissipator is

    D(A) rho = 2 A rho A^dag - A^dag A rho - rho A^dag A

and the generator reads

    L rho = -i[H, rho] + (gamma_1/2) D(sigma_-) rho + c_phi D(sigma_z) rho
            + (kappa (n_th+1)/2) D(a) rho + (kappa n_th/2) D(a^dag) rho.

The dephasing prefactor ``c_phi`` is ``gamma_phi/4`` by default, which makes
atomic coherences decay at ``gamma_2 = gamma_1/2 + gamma_phi``.  The
``dephasing="literal"`` option uses ``c_phi = gamma_phi`` (decay ``4 gamma_phi``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import splu

from .errors import (
    ConfigError,
    DegenerateSteadyStateError,
    IntegrationError,
    NumericalError,
    TruncationError,
)
from .hilbert import TWO_PI, HilbertSpec, Operators, SystemSpec, build_operators

DEPHASING_CONVENTIONS = {"rates": 0.25, "literal": 1.0}


class PeriodicTerm(NamedTuple):
    """Hamiltonian term ``operator * exp(rate * t)``; ``rate`` in rad/us."""

    operator: np.ndarray
    rate: complex


@dataclass(frozen=True)
class ModulationTerm:
    """Superoperator term ``amplitude * exp(rate * t) * superop``."""

    superop: sp.csr_matrix
    rate: complex
    amplitude: complex = 1.0

    def coefficient(self, t: float) -> complex:
        return self.amplitude * np.exp(self.rate * t)


@dataclass(frozen=True)
class Liouvillian:
    """Static generator plus optional time-dependent terms (rad/us)."""

    matrix: sp.csr_matrix
    dim: int
    modulation: tuple[ModulationTerm, ...] = ()

    @property
    def is_static(self) -> bool:
        return len(self.modulation) == 0

    @property
    def period(self) -> float | None:
        """Common period of purely oscillatory modulation terms, in us."""
        freqs = {abs(m.rate.imag) for m in self.modulation if m.rate != 0}
        if not freqs:
            return None
        if any(m.rate.real != 0 for m in self.modulation):
            return None
        base = min(freqs)
        for f in freqs:
            ratio = f / base
            if abs(ratio - round(ratio)) > 1e-9:
                return None
        return TWO_PI / base

    def at(self, t: float) -> sp.csr_matrix:
        M = self.matrix
        for m in self.modulation:
            M = M + m.coefficient(t) * m.superop
        return M.tocsr()

    def dense(self, t: float | None = None) -> np.ndarray:
        M = self.matrix if t is None else self.at(t)
        return M.toarray()

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        out = self.matrix @ y
        for m in self.modulation:
            out = out + m.coefficient(t) * (m.superop @ y)
        return out

    def with_modulation(self, terms: Sequence[ModulationTerm]) -> "Liouvillian":
        return Liouvillian(self.matrix, self.dim, tuple(self.modulation) + tuple(terms))


def vec(rho: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(rho).reshape(-1)


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim)


def commutator_superop(H: np.ndarray) -> sp.csr_matrix:
    """Superoperator of ``rho -> -i [H, rho]``."""
    d = H.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    Hs = sp.csr_matrix(H)
    return (-1j * (sp.kron(Hs, eye) - sp.kron(eye, Hs.T))).tocsr()


def dissipator_superop(A: np.ndarray) -> sp.csr_matrix:
    """Superoperator of ``D(A) rho = 2 A rho A^dag - A^dag A rho - rho A^dag A``."""
    d = A.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    As = sp.csr_matrix(A)
    AdA = As.conj().T @ As
    return (2 * sp.kron(As, As.conj()) - sp.kron(AdA, eye) - sp.kron(eye, AdA.T)).tocsr()


def trace_functional(dim: int) -> np.ndarray:
    """Row vector ``t`` with ``t @ vec(rho) = tr(rho)``."""
    return vec(np.eye(dim))


def expectation(op: np.ndarray, rho_vec: np.ndarray) -> complex:
    """``tr(op rho)`` for a vectorized ``rho`` (works on stacked columns too)."""
    return vec(op.T) @ rho_vec


def ground_state(space: HilbertSpec) -> np.ndarray:
    """``|g, 0><g, 0|``."""
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def basis_state(space: HilbertSpec, excited: bool, photons: int = 0) -> np.ndarray:
    """Projector onto ``|g/e, n>``."""
    idx = int(excited) * space.cavity_levels + photons
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def validate_density_matrix(rho: np.ndarray, herm_tol=1e-10, trace_tol=1e-10, eig_tol=-1e-8):
    """Raise :class:`ConfigError` unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConfigError("density matrix must be square")
    if not np.all(np.isfinite(rho)):
        raise ConfigError("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ConfigError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise ConfigError("density matrix does not have unit trace")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < eig_tol:
        raise ConfigError("density matrix is not positive semidefinite")


def atom_drive_operator(ops: Operators, Omega: complex) -> np.ndarray:
    """``(Omega sigma_+ + Omega^* sigma_-)/2``; real ``Omega`` gives ``Omega sigma_x/2``."""
    return 0.5 * (Omega * ops.sp + np.conj(Omega) * ops.sm)


def build_hamiltonian(
    spec: SystemSpec,
    ops: Operators | None = None,
    atom_drive: complex | None = None,
) -> tuple[np.ndarray, list[PeriodicTerm]]:
    """Rotating-frame Hamiltonian in rad/us and its periodic pump terms.

    ``H = Delta_c a^dag a + Delta_a/2 sigma_z + g_c (a^dag sigma_- + a sigma_+)
    + Omega_c/2 (a + a^dag) + Omega/2 (sigma_+ + sigma_-)``, everything times
    ``2 pi``.  A complex ``atom_drive`` overrides ``spec.Omega`` and carries the
    drive phase.  A nonzero ``pump_amp`` yields the periodic terms
    ``(pump_amp/2) a e^{+i delta t}`` and ``(pump_amp/2) a^dag e^{-i delta t}``
    with ``delta = omega_pc - omega_d``.
    """
    ops = ops or build_operators(spec.hilbert)
    Omega = spec.Omega if atom_drive is None else atom_drive
    H = (
        spec.delta_c * ops.n
        + 0.5 * spec.delta_a * ops.sz
        + spec.g_c * (ops.adag @ ops.sm + ops.a @ ops.sp)
        + 0.5 * spec.Omega_c * (ops.a + ops.adag)
        + atom_drive_operator(ops, Omega)
    )
    H = TWO_PI * H
    periodic = []
    if spec.pump_amp != 0:
        delta = TWO_PI * spec.pump_detuning
        amp = TWO_PI * spec.pump_amp / 2
        periodic = [PeriodicTerm(amp * ops.a, 1j * delta), PeriodicTerm(amp * ops.adag, -1j * delta)]
    return H, periodic


def dissipator_terms(spec: SystemSpec, ops: Operators, dephasing: str = "rates"):
    """List of ``(operator, coefficient)`` pairs in rad/us multiplying ``D(operator)``."""
    if dephasing not in DEPHASING_CONVENTIONS:
        raise ConfigError(f"unknown dephasing convention {dephasing!r}")
    c_phi = DEPHASING_CONVENTIONS[dephasing] * spec.gamma_phi
    return [
        (ops.sm, TWO_PI * spec.gamma_1 / 2),
        (ops.sz, TWO_PI * c_phi),
        (ops.a, TWO_PI * spec.kappa * (spec.n_th + 1) / 2),
        (ops.adag, TWO_PI * spec.kappa * spec.n_th / 2),
    ]


def build_liouvillian(
    H: np.ndarray,
    spec: SystemSpec,
    periodic: Sequence[PeriodicTerm] = (),
    dephasing: str = "rates",
    ops: Operators | None = None,
) -> Liouvillian:
    """Assemble the generator for Hamiltonian ``H`` (rad/us) and the rates of ``spec``."""
    H = np.asarray(H)
    if np.max(np.abs(H - H.conj().T)) > 1e-9 * max(1.0, np.max(np.abs(H))):
        raise ConfigError("Hamiltonian is not Hermitian")
    ops = ops or build_operators(spec.hilbert)
    L = commutator_superop(H)
    for A, rate in dissipator_terms(spec, ops, dephasing):
        if rate != 0:
            L = L + rate * dissipator_superop(A)
    modulation = tuple(ModulationTerm(commutator_superop(t.operator), t.rate) for t in periodic)
    return Liouvillian(L.tocsr(), H.shape[0], modulation)


def liouvillian_for(spec: SystemSpec, dephasing: str = "rates") -> Liouvillian:
    """Shortcut: Hamiltonian and generator straight from ``spec``."""
    ops = build_operators(spec.hilbert)
    H, periodic = build_hamiltonian(spec, ops)
    return build_liouvillian(H, spec, periodic, dephasing, ops)


def cavity_amplitude(spec: SystemSpec, t, alpha0: complex = 0.0, t0: float = 0.0, port_drive: complex | None = None):
    """Classical cavity amplitude under the port drive ``Omega_c``.

    Solves ``d alpha/dt = -2 pi [(i Delta_c + kappa/2) alpha + i Omega_c/2]`` from
    ``alpha(t0) = alpha0``.  ``port_drive`` overrides ``spec.Omega_c`` and may be
    complex to carry a drive phase.
    """
    Oc = spec.Omega_c if port_drive is None else port_drive
    s = -TWO_PI * (1j * spec.delta_c + spec.kappa / 2)
    t = np.asarray(t, dtype=float)
    if s == 0:
        return alpha0 - 1j * TWO_PI * Oc / 2 * (t - t0)
    alpha_ss = steady_cavity_amplitude(spec, Oc)
    return alpha_ss + (alpha0 - alpha_ss) * np.exp(s * (t - t0))


def steady_cavity_amplitude(spec: SystemSpec, port_drive: complex | None = None) -> complex:
    """``alpha_ss = -(Omega_c/2) / (Delta_c - i kappa/2)``."""
    Oc = spec.Omega_c if port_drive is None else port_drive
    denom = spec.delta_c - 0.5j * spec.kappa
    if denom == 0:
        raise ConfigError("undamped resonant cavity has no steady amplitude")
    return -(Oc / 2) / denom


def port_driven_liouvillian(
    spec: SystemSpec,
    alpha0: complex = 0.0,
    t0: float = 0.0,
    dephasing: str = "rates",
    atom_drive: complex | None = None,
    port_drive: complex | None = None,
) -> Liouvillian:
    """Generator of the port-driven model in the frame displaced by ``alpha(t)``.

    The cavity field is split as ``a = alpha(t) + b`` with ``alpha`` the exact
    classical response from :func:`cavity_amplitude`.  The transformed
    master equation has the same form with ``Omega_c`` removed and an atom
    drive ``g_c (alpha(t) sigma_+ + alpha(t)^* sigma_-)``.  Atomic observables
    are unchanged by the displacement, so this is an exact and much smaller
    representation of the port-driven dynamics.
    """
    ops = build_operators(spec.hilbert)
    base = spec.replace(Omega_c=0.0)
    H, periodic = build_hamiltonian(base, ops, atom_drive=atom_drive)
    alpha_ss = steady_cavity_amplitude(spec, port_drive)
    # the static part of alpha(t) goes into H
    H = H + TWO_PI * spec.g_c * (alpha_ss * ops.sp + np.conj(alpha_ss) * ops.sm)
    L = build_liouvillian(H, base, periodic, dephasing, ops)
    s = -TWO_PI * (1j * spec.delta_c + spec.kappa / 2)
    transient = (alpha0 - alpha_ss) * np.exp(-s * t0)
    if transient == 0:
        return L
    S_plus = commutator_superop(TWO_PI * spec.g_c * ops.sp)
    S_minus = commutator_superop(TWO_PI * spec.g_c * ops.sm)
    return L.with_modulation(
        [ModulationTerm(S_plus, s, transient), ModulationTerm(S_minus, np.conj(s), np.conj(transient))]
    )


@dataclass
class Trajectory:
    """Expectation values on a time grid plus per-point state diagnostics."""

    times: np.ndarray
    expect: dict[str, np.ndarray]
    trace_deviation: np.ndarray
    hermiticity_deviation: np.ndarray
    min_eigenvalue: np.ndarray
    states: np.ndarray | None = field(default=None, repr=False)

    def check_invariants(self, trace_tol=1e-6, herm_tol=1e-6, eig_tol=-1e-6) -> None:
        """Raise :class:`NumericalError` if any state diagnostic is out of bounds."""
        if np.max(self.trace_deviation, initial=0) >= trace_tol:
            raise NumericalError(f"trace deviation {np.max(self.trace_deviation):.3g}")
        if np.max(self.hermiticity_deviation, initial=0) >= herm_tol:
            raise NumericalError(f"Hermiticity deviation {np.max(self.hermiticity_deviation):.3g}")
        if np.min(self.min_eigenvalue, initial=0) < eig_tol:
            raise NumericalError(f"negative eigenvalue {np.min(self.min_eigenvalue):.3g}")

    @property
    def final_state(self) -> np.ndarray:
        if self.states is None:
            raise ValueError("trajectory was computed without storing states")
        return self.states[-1]


def evolve(
    L: Liouvillian,
    rho0: np.ndarray,
    times: Sequence[float],
    observables: Mapping[str, np.ndarray] | None = None,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    store_states: bool = False,
) -> Trajectory:
    """Integrate ``d rho/dt = L(t) rho`` and sample on ``times`` (us).

    Uses an adaptive 8th-order Dormand-Prince scheme.  Modulation terms are
    evaluated at the integrator's own stage times.

    Raises
    ------
    IntegrationError
        When the step size underflows or the derivative stops being finite;
        ``.time`` holds the failing time.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigError("time grid must be a non-empty 1D sequence")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ConfigError("time grid must be strictly increasing")
    rho0 = np.asarray(rho0, dtype=complex)
    validate_density_matrix(rho0)
    d = L.dim
    y0 = vec(rho0)
    if times.size == 1 or times[-1] == times[0]:
        Y = np.repeat(y0[:, None], times.size, axis=1)
    else:

        def rhs(t, y):
            dy = L.rhs(t, y)
            # non-finite derivatives would make the step-size control loop forever
            if not np.all(np.isfinite(dy)):
                raise IntegrationError(f"non-finite derivative at t = {t}", t)
            return dy

        sol = solve_ivp(rhs, (times[0], times[-1]), y0, method="DOP853", t_eval=times, rtol=rtol, atol=atol)
        if sol.status != 0:
            failed = sol.t[-1] if sol.t.size else times[0]
            raise IntegrationError(f"integration failed at t = {failed}: {sol.message}", failed)
        Y = sol.y
    states = Y.T.reshape(-1, d, d)
    expect = {}
    for name, op in (observables or {}).items():
        expect[name] = vec(np.asarray(op).T) @ Y
    tr = np.einsum("tii->t", states)
    herm = np.max(np.abs(states - np.conj(np.transpose(states, (0, 2, 1)))), axis=(1, 2))
    mins = np.linalg.eigvalsh(0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))).min(axis=1)
    return Trajectory(
        times=times,
        expect=expect,
        trace_deviation=np.abs(tr - 1),
        hermiticity_deviation=herm,
        min_eigenvalue=mins,
        states=states if store_states else None,
    )


def _solve_with_trace_row(M: sp.csr_matrix, row: int, dim: int) -> np.ndarray:
    A = M.tolil(copy=True)
    A[row, :] = trace_functional(dim)
    b = np.zeros(M.shape[0], dtype=complex)
    b[row] = 1.0
    try:
        lu = splu(A.tocsc())
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(f"generator has a degenerate null space ({exc})") from exc
    x = lu.solve(b)
    # one step of iterative refinement against the original system
    r = b - A @ x
    x = x + lu.solve(r)
    return x


def steady_state(L: Liouvillian, tol: float = 1e-6) -> np.ndarray:
    """Stationary density matrix of the static part of ``L``.

    Replaces the equation of the first diagonal element by the trace condition
    and solves the sparse system.  The solve is repeated with the last diagonal
    element replaced instead; a unique stationary state gives the same answer
    either way, so disagreement above ``tol`` signals a degenerate null space.
    """
    d = L.dim
    M = L.matrix
    if not np.all(np.isfinite(M.data)):
        raise NumericalError("generator has non-finite entries")
    x0 = _solve_with_trace_row(M, 0, d)
    x1 = _solve_with_trace_row(M, d * d - 1, d)
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(x1))):
        raise DegenerateSteadyStateError("steady-state solve produced non-finite values")
    if np.max(np.abs(x0 - x1)) > tol:
        raise DegenerateSteadyStateError(
            "stationary state depends on the constraint row; the null space is degenerate"
        )
    rho = unvec(x0, d)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def residual(L: Liouvillian, rho: np.ndarray) -> float:
    """``max |L[rho]|`` for the static part."""
    return float(np.max(np.abs(L.matrix @ vec(rho))))


def converge_truncation(
    spec: SystemSpec,
    observable: Callable[[SystemSpec], np.ndarray] | None = None,
    rel_tol: float = 1e-3,
    n_start: int = 2,
    step: int = 2,
    n_max: int = 40,
) -> HilbertSpec:
    """Smallest ``N_c`` whose observable changes by less than ``rel_tol`` at ``N_c + step``.

    The default observable is the incoherent emission spectrum on the default
    band, evaluated with the eigendecomposition path.  The change is measured
    as ``max|f(N+step) - f(N)| / max|f(N+step)|``; an identically vanishing
    observable counts as converged.
    """
    if rel_tol <= 0:
        raise ConfigError("rel_tol must be positive")
    if observable is None:
        from .correlation import default_spectrum_observable

        observable = default_spectrum_observable
    n = max(2, int(n_start))
    previous = np.asarray(observable(spec.with_cavity_levels(n)))
    while n + step <= n_max:
        current = np.asarray(observable(spec.with_cavity_levels(n + step)))
        scale = np.max(np.abs(current))
        change = np.max(np.abs(current - previous))
        if scale <= 1e-300 or change <= rel_tol * scale:
            return HilbertSpec(cavity_levels=n)
        n += step
        previous = current
    raise TruncationError(f"observable not converged to {rel_tol} below N_c = {n_max}")
