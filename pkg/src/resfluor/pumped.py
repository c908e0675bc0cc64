"""Time-periodic driving: periodic steady states, pump calibration and
stationary-in-mean spectra.

A pumped generator ``L(t) = L0 + sum_m c_m e^{i q_m w0 t} S_m`` has period
``T = 2 pi / w0``.  One period is split into ``M`` equal steps whose
propagators come from a fourth-order Magnus expansion.  The spectrum is the
transform of the correlation averaged over start times ``t0`` spread across
one period, with the coherent part ``<A(t0)><B(t0 + tau)>`` removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .correlation import (
    CorrelationTrace,
    SpectrumResult,
    emission_spectrum,
    frequency_grid,
    slowest_rate,
)
from .errors import BracketError, ConfigError, PeriodicStateError, SpanError
from .hilbert import TWO_PI, HilbertSpec, SystemSpec, build_operators
from .lindblad import Liouvillian, liouvillian_for, trace_functional, unvec, vec

_GAUSS = math.sqrt(3) / 6


def _period(L: Liouvillian, period: float | None) -> float:
    T = L.period if period is None else period
    if T is None or not T > 0:
        raise ConfigError("generator carries no periodic modulation and no period was given")
    return float(T)


def magnus_propagators(L: Liouvillian, period: float, n_steps: int) -> list[np.ndarray]:
    """Dense one-step propagators over ``[k h, (k+1) h]``, ``h = period/n_steps``.

    Fourth-order Magnus: ``exp(h/2 (A1 + A2) + sqrt(3) h^2/12 [A2, A1])`` with
    ``A1``, ``A2`` the generator at the two Gauss points of each step.
    """
    h = period / n_steps
    out = []
    for k in range(n_steps):
        t1 = (k + 0.5 - _GAUSS) * h
        t2 = (k + 0.5 + _GAUSS) * h
        A1 = L.at(t1)
        A2 = L.at(t2)
        comm = (A2 @ A1 - A1 @ A2).toarray()
        omega = 0.5 * h * (A1 + A2).toarray() + (math.sqrt(3) * h * h / 12) * comm
        out.append(sla.expm(omega))
    return out


@dataclass
class PeriodicState:
    """States ``rho(k h)`` for ``k = 0 .. M-1`` over one period."""

    period: float
    states: np.ndarray
    propagators: list[np.ndarray] = field(repr=False)
    drift: float = 0.0

    @property
    def step(self) -> float:
        return self.period / len(self.states)

    def expect(self, op: np.ndarray) -> np.ndarray:
        return np.einsum("ij,kji->k", op, self.states)


def periodic_steady_state(
    L: Liouvillian,
    n_steps: int = 32,
    period: float | None = None,
    propagators: list[np.ndarray] | None = None,
    drift_tol: float = 1e-4,
) -> PeriodicState:
    """Fixed point of the one-period map, then one verification cycle.

    The fixed point solves ``(P - I) x = 0`` with one row replaced by the trace
    condition.  Propagating it through a further period must reproduce it;
    an observable drift above ``drift_tol`` raises :class:`PeriodicStateError`.
    """
    T = _period(L, period)
    U = propagators or magnus_propagators(L, T, n_steps)
    d = L.dim
    P = np.eye(d * d, dtype=complex)
    for Uk in U:
        P = Uk @ P
    M = P - np.eye(d * d)
    M[0, :] = trace_functional(d)
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    try:
        x = np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:
        raise PeriodicStateError(f"one-period map has no unique fixed point ({exc})") from exc
    states = []
    y = x
    for Uk in U:
        rho = unvec(y, d)
        states.append(0.5 * (rho + rho.conj().T))
        y = Uk @ y
    ops = build_operators(HilbertSpec(cavity_levels=d // 2))
    drift = 0.0
    for op in (ops.n, ops.sz):
        drift = max(drift, abs(vec(op.T) @ (y - x)))
    if drift > drift_tol:
        raise PeriodicStateError(f"cycle-to-cycle drift {drift:.3g} exceeds {drift_tol}")
    return PeriodicState(T, np.array(states), U, float(drift))


def harmonic_state(L: Liouvillian, harmonics: int, period: float | None = None) -> dict[int, np.ndarray]:
    """Fourier components ``rho_k`` of the periodic steady state.

    Solves ``(L0 - i k w0) rho_k + sum_m c_m S_m rho_{k - q_m} = 0`` for
    ``|k| <= harmonics`` with ``tr rho_0 = 1``, where the modulation rates
    are ``i q_m w0``.
    """
    T = _period(L, period)
    w0 = TWO_PI / T
    K = int(harmonics)
    n = 2 * K + 1
    d2 = L.dim**2
    ks = np.arange(-K, K + 1)
    big = sp.kron(sp.identity(n, format="csr"), L.matrix) - sp.kron(
        sp.diags(1j * w0 * ks), sp.identity(d2, format="csr")
    )
    for m in L.modulation:
        if abs(m.rate.real) > 0:
            raise ConfigError("harmonic balance needs purely oscillatory modulation")
        q = int(round(m.rate.imag / w0))
        if abs(q * w0 - m.rate.imag) > 1e-9 * w0:
            raise ConfigError("modulation rate is not a harmonic of the period")
        shift = sp.eye(n, k=-q, format="csr")  # row k picks block k - q
        big = big + m.amplitude * sp.kron(shift, m.superop)
    big = big.tolil()
    row = K * d2
    big[row, :] = 0
    big[row, row : row + d2] = trace_functional(L.dim)
    rhs = np.zeros(n * d2, dtype=complex)
    rhs[row] = 1.0
    x = splu(big.tocsc()).solve(rhs)
    return {int(k): unvec(x[i * d2 : (i + 1) * d2], L.dim) for i, k in enumerate(ks)}


def period_average(
    L: Liouvillian,
    op: np.ndarray,
    period: float | None = None,
    harmonics: int = 4,
    max_harmonics: int = 64,
    tol: float = 1e-10,
) -> float:
    """Period-averaged ``<op>`` in the periodic steady state.

    The number of retained harmonics is doubled until the average changes
    by less than ``tol`` (relative).
    """
    K = harmonics
    prev = None
    while K <= max_harmonics:
        rho0 = harmonic_state(L, K, period)[0]
        val = float(np.trace(op @ rho0).real)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        K *= 2
    raise PeriodicStateError("harmonic expansion of the periodic state did not converge")


@dataclass
class PumpCalibration:
    """Pump amplitude (2*pi*MHz) reaching a target period-averaged photon number."""

    pump_amp: float
    mean_n: float
    target_n: float
    scanned: list[tuple[float, float]]


def mean_photon_number(spec: SystemSpec, dephasing: str = "rates") -> float:
    """Period-averaged ``<a^dag a>`` (or the static value without a pump)."""
    L = liouvillian_for(spec, dephasing)
    ops = build_operators(spec.hilbert)
    if L.is_static:
        from .lindblad import steady_state

        return float(np.trace(ops.n @ steady_state(L)).real)
    return period_average(L, ops.n)


def calibrate_pump(
    spec: SystemSpec,
    target_n: float,
    start: float = 0.25,
    max_amp: float = 1000.0,
    rel_tol: float = 0.01,
    dephasing: str = "rates",
) -> PumpCalibration:
    """Root-find ``pump_amp`` so the period-averaged ``<a^dag a>`` hits ``target_n``.

    The upper end of the bracket is found by doubling from ``start``; failure
    to straddle the target below ``max_amp`` raises :class:`BracketError`.
    """
    if not target_n > 0:
        raise ConfigError("target_n must be positive")
    if spec.pump_detuning == 0:
        raise ConfigError("pump frequency equals the drive frequency; no modulation period")
    scanned = []

    def f(p):
        n = mean_photon_number(spec.replace(pump_amp=p), dephasing)
        scanned.append((p, n))
        return n - target_n

    lo = 0.0
    f_lo = mean_photon_number(spec.replace(pump_amp=0.0), dephasing) - target_n
    scanned.append((0.0, f_lo + target_n))
    if f_lo >= 0:
        raise BracketError("unpumped photon number already exceeds the target (scanned [0, 0])")
    hi = start
    while True:
        f_hi = f(hi)
        if f_hi > 0:
            break
        lo, f_lo = hi, f_hi
        hi *= 2
        if hi > max_amp:
            raise BracketError(f"target not reached: scanned pump_amp in [0, {lo}]")
    root = brentq(f, lo, hi, xtol=1e-9, rtol=1e-10)
    achieved = mean_photon_number(spec.replace(pump_amp=root), dephasing)
    if abs(achieved - target_n) > rel_tol * target_n:
        raise BracketError(f"root-find ended at <n> = {achieved}, outside {rel_tol:.0%} of {target_n}")
    return PumpCalibration(float(root), float(achieved), float(target_n), sorted(scanned))


def modulated_spectrum(
    L: Liouvillian,
    freqs=None,
    n_t0: int = 16,
    refine: int = 2,
    period: float | None = None,
    A: np.ndarray | None = None,
    B: np.ndarray | None = None,
    tau_span: float | None = None,
    min_rate: float | None = None,
    window: str = "none",
    span_tol: float = 1e-4,
    max_span_factor: int = 8,
) -> SpectrumResult:
    """Stationary-in-mean incoherent spectrum under periodic modulation.

    Parameters
    ----------
    n_t0 : int
        Start times per period (at least 16).
    refine : int
        Propagator steps between start times; the ``tau`` spacing is
        ``period / (n_t0 * refine)``.
    tau_span : float, optional
        Correlation span in us.  Default ``10/(2 pi min_rate)``, extended by
        whole periods until the averaged incoherent correlation has decayed to
        ``span_tol`` of its coincidence value.
    min_rate : float, optional
        Slowest decay rate (2*pi*MHz) for the default span; defaults to the
        cavity-limited value 1.
    """
    if n_t0 < 16:
        raise ConfigError("the modulation period must be resolved by at least 16 start times")
    freqs = frequency_grid() if freqs is None else np.asarray(freqs, dtype=float)
    T = _period(L, period)
    M = n_t0 * refine
    h = T / M
    ops = build_operators(HilbertSpec(cavity_levels=L.dim // 2))
    A = ops.sp if A is None else A
    B = ops.sm if B is None else B
    pss = periodic_steady_state(L, M, T)
    U = pss.propagators
    a_mean = np.einsum("ij,kji->k", A, pss.states)
    b_mean = np.einsum("ij,kji->k", B, pss.states)
    left = vec(B.T)

    span = tau_span if tau_span is not None else 10.0 / (TWO_PI * (min_rate or 1.0))
    n_tau = int(math.ceil(span / h))
    n_cap = n_tau * (1 if tau_span is not None else max_span_factor)

    starts = [j * refine for j in range(n_t0)]
    xs = [vec(pss.states[s] @ A) for s in starts]
    corr = [left @ x for x in xs]
    values = [np.mean(corr)]
    coh = [np.mean([a_mean[s] * b_mean[s] for s in starts])]
    n = 0
    while True:
        for j, s in enumerate(starts):
            xs[j] = U[(s + n) % M] @ xs[j]
        n += 1
        values.append(np.mean([left @ x for x in xs]))
        coh.append(np.mean([a_mean[s] * b_mean[(s + n) % M] for s in starts]))
        if n >= n_tau:
            inc = np.asarray(values[-M:]) - np.asarray(coh[-M:])
            if np.max(np.abs(inc)) <= span_tol * abs(values[0]) or tau_span is not None:
                break
            if n >= n_cap:
                raise SpanError("pumped correlation did not decay within the maximum span")
    values = np.asarray(values)
    coh = np.asarray(coh)
    tau = np.arange(values.size) * h
    trace = CorrelationTrace(tau, values - coh, 0.0)
    result = emission_spectrum(trace, freqs, subtract_coherent=False, window=window, span_tol=np.inf)
    result.meta.update({"period": T, "n_t0": n_t0, "refine": refine, "drift": pss.drift})
    return result


def pumped_spectrum(spec: SystemSpec, freqs=None, dephasing: str = "rates", **kwargs) -> SpectrumResult:
    """Convenience wrapper: generator from ``spec`` then :func:`modulated_spectrum`."""
    L = liouvillian_for(spec, dephasing)
    period = None if spec.pump_amp != 0 else 1.0 / abs(spec.pump_detuning)
    kwargs.setdefault("min_rate", slowest_rate(spec))
    return modulated_spectrum(L, freqs, period=period, **kwargs)
