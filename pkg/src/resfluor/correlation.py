"""Two-time correlations, g1, emission spectra and waveguide observables.

The stationary correlation is ``C(tau) = <A(t) B(t+tau)> = tr[B e^{L tau}(rho_ss A)]``
with ``A = sigma_+`` and ``B = sigma_-`` by default.  Spectra are

    S(f) = (1/pi) Re int_0^inf [C(tau) - <A><B>] e^{+i 2 pi f tau} dtau,

with ``f`` in MHz relative to the drive and ``tau`` in us.  With this sign a
line at positive ``f`` lies above the drive frequency.  ``S`` integrates over
angular frequency (rad/us) to the incoherent coincidence value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.constants import hbar
from scipy.signal import find_peaks as _find_peaks
from scipy.sparse.linalg import expm_multiply

from .errors import AliasingError, ConfigError, FitError, NonStationaryError, SpanError
from .hilbert import TWO_PI, HilbertSpec, Operators, SystemSpec, build_operators
from .lindblad import Liouvillian, Trajectory, liouvillian_for, steady_state, vec

NORMALIZATION = "S(f) = (1/pi) Re int C_inc(tau) exp(2 pi i f tau) dtau; int S d(2 pi f) = C_inc(0)"

DEFAULT_BAND = 60.0
DEFAULT_DF = 0.05


@dataclass
class CorrelationTrace:
    """Correlation ``<A(t) B(t + tau)>`` sampled on ``tau`` (us).

    ``asymptote`` is ``<A><B>``, the ``tau -> inf`` limit (divided by the
    coincidence value when ``normalized``).
    """

    tau: np.ndarray
    values: np.ndarray
    asymptote: complex = 0.0
    normalized: bool = False

    @property
    def coincidence(self) -> complex:
        return self.values[0]


@dataclass(frozen=True)
class Peak:
    """Detected spectral line: position (MHz), height and FWHM (MHz)."""

    position: float
    height: float
    fwhm: float


@dataclass
class SpectrumResult:
    """Spectral density on a frequency grid (MHz relative to the drive)."""

    freqs: np.ndarray
    density: np.ndarray
    peaks: tuple[Peak, ...] = ()
    normalization: str = NORMALIZATION
    meta: dict = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.peaks])

    def integral(self, lo: float = -np.inf, hi: float = np.inf) -> float:
        """Trapezoidal integral of the density over ``lo < f < hi`` (in MHz)."""
        m = (self.freqs > lo) & (self.freqs < hi)
        return float(np.trapezoid(self.density[m], self.freqs[m]))


# ---------------------------------------------------------------- grids


def frequency_grid(band: float = DEFAULT_BAND, df: float = DEFAULT_DF) -> np.ndarray:
    """Symmetric grid ``-band .. band`` with spacing ``df`` (MHz)."""
    n = int(round(band / df))
    return np.arange(-n, n + 1) * df


def slowest_rate(spec: SystemSpec) -> float:
    """``min{gamma_2, kappa, g_1}`` over the positive ones (2*pi*MHz)."""
    rates = [r for r in (spec.gamma_2, spec.kappa, spec.g_c / 2) if r > 0]
    if not rates:
        raise ConfigError("no damping: correlations never decay")
    return min(rates)


def tau_grid(spec: SystemSpec, f_max: float = DEFAULT_BAND, span_factor: float = 10.0) -> np.ndarray:
    """Uniform ``tau`` grid from 0.

    The span is ``span_factor / (2 pi min{gamma_2, kappa, g_1})`` and the
    spacing ``1/(16 f_max)``, twice as fine as the ``1/(8 f_max)`` needed to
    keep the highest lines free of interpolation bias.
    """
    span = span_factor / (TWO_PI * slowest_rate(spec))
    dt = 1.0 / (16.0 * f_max)
    n = int(math.ceil(span / dt))
    return np.arange(n + 1) * dt


# ---------------------------------------------------------------- correlations


def _check_stationary(L: Liouvillian, rho: np.ndarray, tol: float = 1e-8):
    r = float(np.max(np.abs(L.matrix @ vec(rho))))
    if r > tol:
        raise NonStationaryError(f"state is not stationary: residual {r:.3g} > {tol}")


def _default_ops(L: Liouvillian) -> Operators:
    return build_operators(HilbertSpec(cavity_levels=L.dim // 2))


def propagate_uniform(L: Liouvillian, x0: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Columns ``e^{L tau_k} x0`` for a uniform grid starting at 0."""
    tau = np.asarray(tau, dtype=float)
    if tau[0] != 0 or (tau.size > 1 and not np.allclose(np.diff(tau), tau[1] - tau[0], rtol=1e-9, atol=0)):
        raise ConfigError("tau grid must be uniform and start at 0")
    n = tau.size
    if n == 1:
        return x0[:, None].copy()
    dt = tau[1] - tau[0]
    if L.dim <= 50:
        P = sla.expm(L.dense() * dt)
        out = np.empty((x0.size, n), dtype=complex)
        out[:, 0] = x0
        x = x0
        for k in range(1, n):
            x = P @ x
            out[:, k] = x
        return out
    return expm_multiply(L.matrix.tocsc(), x0, start=0.0, stop=tau[-1], num=n, endpoint=True).T


@dataclass
class EigenDecomposition:
    """Right eigenvectors and inverse of a dense static generator."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    lu: tuple

    @classmethod
    def of(cls, L: Liouvillian) -> "EigenDecomposition":
        lam, V = sla.eig(L.dense())
        return cls(lam, V, sla.lu_factor(V))

    def weights(self, left: np.ndarray, x0: np.ndarray) -> np.ndarray:
        """``w_k`` with ``left @ e^{L t} x0 = sum_k w_k e^{lambda_k t}``."""
        return (left @ self.vectors) * sla.lu_solve(self.lu, x0)


def two_time_correlation(
    L: Liouvillian,
    rho_ss: np.ndarray,
    A: np.ndarray,
    B: np.ndarray,
    tau,
    method: str = "propagate",
    eig: EigenDecomposition | None = None,
) -> CorrelationTrace:
    """``tr[B e^{L tau}(rho_ss A)]`` by the quantum regression theorem.

    Parameters
    ----------
    method : {"propagate", "eig"}
        ``propagate`` steps the vectorized initial condition with the exact
        propagator; ``eig`` expands it in Liouvillian eigenmodes (cross-check).
    """
    if not L.is_static:
        raise ConfigError("two_time_correlation needs a static generator")
    _check_stationary(L, rho_ss)
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau[0] != 0 or np.any(np.diff(tau) <= 0):
        raise ConfigError("tau grid must start at 0 and increase")
    x0 = vec(rho_ss @ A)
    left = vec(np.asarray(B).T)
    asym = np.trace(A @ rho_ss) * np.trace(B @ rho_ss)
    if method == "propagate":
        values = left @ propagate_uniform(L, x0, tau)
    elif method == "eig":
        eig = eig or EigenDecomposition.of(L)
        w = eig.weights(left, x0)
        values = np.exp(np.outer(tau, eig.eigenvalues)) @ w
    else:
        raise ConfigError(f"unknown correlation method {method!r}")
    values = np.asarray(values, dtype=complex)
    return CorrelationTrace(tau=tau, values=values, asymptote=complex(asym))


def g1(trace: CorrelationTrace, floor: float = 1e-14) -> CorrelationTrace:
    """Normalize a correlation trace to unity at ``tau = 0``."""
    if trace.normalized:
        return trace
    c0 = trace.values[0]
    if not np.isfinite(c0) or abs(c0) <= floor:
        raise ConfigError("zero coincidence value: g1 is undefined for an undriven system")
    return CorrelationTrace(trace.tau, trace.values / c0, trace.asymptote / c0, normalized=True)


# ---------------------------------------------------------------- transforms


def half_sided_transform(tau: np.ndarray, values: np.ndarray, freqs: np.ndarray, chunk: int = 256):
    """``int_0^{tau_max} y(tau) e^{2 pi i f tau} dtau`` for piecewise-linear ``y``.

    The piecewise-linear interpolant of the samples is integrated exactly
    against the oscillating kernel (linear Filon rule), so the result carries
    no aliasing from the kernel itself.
    """
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(values, dtype=complex)
    h = tau[1] - tau[0]
    omega = TWO_PI * np.asarray(freqs, dtype=float)
    theta = omega * h
    small = np.abs(theta) < 1e-3
    ts = np.where(small, 1.0, theta)
    e = np.exp(1j * ts)
    mid = np.where(small, 1 - theta**2 / 12, 2 * (1 - np.cos(ts)) / ts**2)
    I0 = np.where(small, 0.5 + 1j * theta / 6 - theta**2 / 24, 1j / ts - (e - 1) / ts**2)
    I1 = np.where(small, 0.5 + 1j * theta / 3 - theta**2 / 8, e / (1j * ts) + (e - 1) / ts**2)
    out = np.empty(omega.size, dtype=complex)
    for s in range(0, omega.size, chunk):
        w = omega[s : s + chunk]
        out[s : s + chunk] = np.exp(1j * np.outer(w, tau)) @ y
    out *= h * mid
    # endpoint corrections: first and last samples carry partial weights
    out += h * (I0 - mid) * y[0]
    last = np.exp(1j * omega * tau[-1])
    out += h * (np.exp(-1j * theta) * I1 - mid) * y[-1] * last
    return out


def _window(name: str, n: int) -> np.ndarray:
    if name in (None, "none"):
        return np.ones(n)
    if name == "hann":
        return 0.5 * (1 + np.cos(np.pi * np.arange(n) / max(n - 1, 1)))
    raise ConfigError(f"unknown window {name!r}")


def emission_spectrum(
    trace: CorrelationTrace,
    freqs=None,
    subtract_coherent: bool = True,
    window: str = "none",
    detect: bool = True,
    span_tol: float = 1e-4,
) -> SpectrumResult:
    """Half-sided Fourier transform of a stationary correlation.

    Raises
    ------
    SpanError
        If ``|C(tau_max) - asymptote| >= span_tol |C(0)|``.
    AliasingError
        If the ``tau`` spacing cannot represent the highest requested frequency.
    """
    freqs = frequency_grid() if freqs is None else np.asarray(freqs, dtype=float)
    tau = trace.tau
    if tau.size < 3 or tau[0] != 0 or not np.allclose(np.diff(tau), tau[1] - tau[0], rtol=1e-9, atol=0):
        raise ConfigError("emission_spectrum needs a uniform tau grid from 0")
    c0 = abs(trace.values[0])
    if abs(trace.values[-1] - trace.asymptote) >= span_tol * max(c0, 1e-300) and c0 > 0:
        raise SpanError(
            f"tau span {tau[-1]:.4g} us too short: tail {abs(trace.values[-1] - trace.asymptote):.3g}"
        )
    dt = tau[1] - tau[0]
    f_max = np.max(np.abs(freqs))
    if f_max > 0 and dt > 1.0 / (2.0 * f_max):
        raise AliasingError(f"tau spacing {dt:.4g} us aliases frequencies up to {f_max} MHz")
    y = trace.values - (trace.asymptote if subtract_coherent else 0.0)
    y = y * _window(window, y.size)
    density = half_sided_transform(tau, y, freqs).real / math.pi
    if trace.normalized:
        norm = NORMALIZATION + " (g1 normalized)"
    else:
        norm = NORMALIZATION
    peaks = find_spectrum_peaks(freqs, density) if detect else ()
    return SpectrumResult(freqs, density, peaks, norm, {"window": window, "subtract_coherent": subtract_coherent})


def eigen_spectrum(
    L: Liouvillian,
    rho_ss: np.ndarray,
    freqs=None,
    A: np.ndarray | None = None,
    B: np.ndarray | None = None,
    subtract_coherent: bool = True,
    eig: EigenDecomposition | None = None,
    detect: bool = True,
) -> SpectrumResult:
    """Spectrum as a sum of complex Lorentzians over Liouvillian eigenmodes.

    ``S(f) = -(1/pi) Re sum_k w_k / (lambda_k + 2 pi i f)`` with regression
    weights ``w_k``; independent of any time grid.
    """
    freqs = frequency_grid() if freqs is None else np.asarray(freqs, dtype=float)
    ops = _default_ops(L)
    A = ops.sp if A is None else A
    B = ops.sm if B is None else B
    _check_stationary(L, rho_ss)
    eig = eig or EigenDecomposition.of(L)
    x0 = vec(rho_ss @ A)
    if subtract_coherent:
        x0 = x0 - np.trace(rho_ss @ A) * vec(rho_ss)
    w = eig.weights(vec(B.T), x0)
    lam = eig.eigenvalues
    scale = max(1.0, float(np.max(np.abs(lam))))
    keep = np.abs(lam) > 1e-9 * scale
    if subtract_coherent:
        lam, w = lam[keep], w[keep]
    omega = TWO_PI * freqs
    density = -(1 / (np.add.outer(1j * omega, lam)) @ w).real / math.pi
    peaks = find_spectrum_peaks(freqs, density) if detect else ()
    return SpectrumResult(freqs, density, peaks, NORMALIZATION, {"method": "eig"})


def stationary_correlation(
    spec: SystemSpec,
    tau=None,
    f_max: float = DEFAULT_BAND,
    dephasing: str = "rates",
    max_doublings: int = 4,
    span_tol: float = 1e-4,
) -> tuple[CorrelationTrace, Liouvillian, np.ndarray]:
    """Steady state and ``<sigma_+ sigma_->`` correlation for a static ``spec``.

    Without an explicit ``tau`` grid the default span is doubled until the
    correlation has decayed to ``span_tol`` of its coincidence value.
    """
    L = liouvillian_for(spec, dephasing)
    rho = steady_state(L)
    ops = build_operators(spec.hilbert)
    if tau is not None:
        return two_time_correlation(L, rho, ops.sp, ops.sm, tau), L, rho
    factor = 10.0
    for _ in range(max_doublings + 1):
        grid = tau_grid(spec, f_max, factor)
        trace = two_time_correlation(L, rho, ops.sp, ops.sm, grid)
        c0 = abs(trace.values[0])
        if c0 == 0 or abs(trace.values[-1] - trace.asymptote) < span_tol * c0:
            return trace, L, rho
        factor *= 2
    raise SpanError("correlation did not decay within the maximum tau span")


def incoherent_spectrum(
    spec: SystemSpec,
    freqs=None,
    method: str = "transform",
    dephasing: str = "rates",
    window: str = "none",
) -> SpectrumResult:
    """Incoherent emission spectrum of a static ``spec``.

    ``method`` is ``"transform"`` (regression theorem plus Filon transform) or
    ``"eig"`` (Lorentzian sum over eigenmodes).
    """
    freqs = frequency_grid() if freqs is None else np.asarray(freqs, dtype=float)
    if spec.pump_amp != 0:
        raise ConfigError("pumped specs need pumped.modulated_spectrum")
    if method == "eig":
        L = liouvillian_for(spec, dephasing)
        return eigen_spectrum(L, steady_state(L), freqs)
    if method != "transform":
        raise ConfigError(f"unknown spectrum method {method!r}")
    f_max = max(float(np.max(np.abs(freqs))), 1.0)
    trace, _, _ = stationary_correlation(spec, f_max=f_max, dephasing=dephasing)
    return emission_spectrum(trace, freqs, window=window)


def default_spectrum_observable(spec: SystemSpec) -> np.ndarray:
    """Observable for truncation convergence: incoherent spectrum on the default band."""
    L = liouvillian_for(spec)
    return eigen_spectrum(L, steady_state(L), detect=False).density


def g1_frequency_content(trace: CorrelationTrace, f_max: float = DEFAULT_BAND, df: float = DEFAULT_DF) -> SpectrumResult:
    """Cosine transform of ``Re g1(tau)`` with the coherent constant removed.

    This is the spectrum folded onto ``f >= 0`` (the average of ``S(f)`` and
    ``S(-f)`` up to normalization), so its peaks sit at the absolute offsets of
    the emission lines.  Lines at the drive frequency land on the ``f = 0`` edge
    and are not reported as peaks.
    """
    g = g1(trace)
    f = np.arange(int(round(f_max / df)) + 1) * df
    inc = (g.values - g.asymptote).real.astype(complex)
    density = half_sided_transform(g.tau, inc, f).real / math.pi
    peaks = find_spectrum_peaks(f, density, fit_width=False)
    return SpectrumResult(f, density, peaks, "cosine transform of Re g1", {"method": "g1"})


# ---------------------------------------------------------------- peaks


def _parabolic(x, y, i):
    """Vertex of the parabola through three neighbouring samples."""
    if i == 0 or i == len(y) - 1:
        return x[i], y[i]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return x[i], y[i]
    shift = 0.5 * (y0 - y2) / denom
    h = x[i + 1] - x[i]
    return x[i] + shift * h, y1 - 0.25 * (y0 - y2) * shift


def _peak_window(y, i, half):
    """Indices around peak ``i`` down to half height, stopping at local minima."""
    lo = i
    while lo > 0 and y[lo - 1] <= y[lo] and y[lo] >= half:
        lo -= 1
    hi = i
    while hi < len(y) - 1 and y[hi + 1] <= y[hi] and y[hi] >= half:
        hi += 1
    while hi - lo + 1 < 5:
        if lo > 0:
            lo -= 1
        if hi - lo + 1 < 5 and hi < len(y) - 1:
            hi += 1
        if lo == 0 and hi == len(y) - 1:
            break
    return lo, hi


def find_spectrum_peaks(
    freqs, density, prominence: float = 0.02, min_separation: float = 1.0, fit_width: bool = True
) -> tuple[Peak, ...]:
    """Local maxima with relative prominence and minimum separation.

    Positions and heights come from a parabola through the three samples
    around each maximum.  FWHM comes from a Lorentzian-plus-offset fit over
    the part of the line above half height, bounded by neighbouring minima.
    """
    from .device import fit_lorentzian

    x = np.asarray(freqs, dtype=float)
    y = np.asarray(density, dtype=float)
    top = float(np.max(y)) if y.size else 0.0
    if y.size < 3 or top <= 0:
        return ()
    dx = x[1] - x[0]
    distance = max(1, int(math.floor(min_separation / dx + 1e-9)))
    idx, _ = _find_peaks(y, prominence=prominence * top, distance=distance)
    peaks = []
    for i in idx:
        pos, height = _parabolic(x, y, i)
        fwhm = float("nan")
        if fit_width:
            lo, hi = _peak_window(y, i, 0.5 * y[i])
            try:
                rep = fit_lorentzian(x[lo : hi + 1], y[lo : hi + 1])
                fwhm = abs(rep.params["fwhm"]) if rep.converged else float("nan")
            except FitError:
                pass
        peaks.append(Peak(float(pos), float(height), float(fwhm)))
    return tuple(peaks)


# ---------------------------------------------------------------- waveguide outputs


@dataclass
class PowerTrace:
    """Emitted power in watts, in two readings.

    ``literal`` is ``(hbar w_a gamma_1/4)(1 + <sigma_z>) exp(-gamma_1 (t - t_ref))``;
    ``physical`` is ``hbar w_a gamma_e <sigma_+ sigma_->`` with
    ``<sigma_+ sigma_-> = (1 + <sigma_z>)/2``.
    """

    times: np.ndarray
    literal: np.ndarray
    physical: np.ndarray
    t_ref: float


@dataclass
class FieldTrace:
    """Waveguide field in arbitrary units plus the output operator mean.

    ``field`` is ``i * prefactor * <sigma_-> * exp(2 pi i |x|)`` with ``x`` in
    emission wavelengths and ``prefactor`` a recorded constant; ``b_out`` is
    ``sqrt(gamma_e/2) <sigma_->`` in sqrt(rad/us); ``sigma_y`` is ``Im <sigma_->``.
    """

    times: np.ndarray
    field: np.ndarray
    b_out: np.ndarray
    sigma_y: np.ndarray
    prefactor: float = 1.0


def _need(traj: Trajectory, key: str) -> np.ndarray:
    if key not in traj.expect:
        raise ConfigError(f"trajectory lacks the {key!r} observable")
    return np.asarray(traj.expect[key])


def output_power_trace(traj: Trajectory, spec: SystemSpec, t_ref: float | None = None) -> PowerTrace:
    """Power traces from ``<sigma_z>(t)`` (key ``"sz"``)."""
    sz = _need(traj, "sz").real
    t_ref = traj.times[0] if t_ref is None else t_ref
    w_a = TWO_PI * spec.omega_a * 1e6
    g1_si = TWO_PI * spec.gamma_1 * 1e6
    ge_si = TWO_PI * spec.gamma_e * 1e6
    decay = np.exp(-TWO_PI * spec.gamma_1 * (traj.times - t_ref))
    literal = hbar * w_a * g1_si / 4 * (1 + sz) * decay
    physical = hbar * w_a * ge_si * (1 + sz) / 2
    return PowerTrace(traj.times, literal, physical, float(t_ref))


def output_field_trace(traj: Trajectory, spec: SystemSpec, x: float = 0.0, prefactor: float = 1.0) -> FieldTrace:
    """Field traces from ``<sigma_->(t)`` (key ``"sm"``)."""
    sm = _need(traj, "sm")
    field_ = 1j * prefactor * sm * np.exp(1j * TWO_PI * abs(x))
    b_out = math.sqrt(TWO_PI * spec.gamma_e / 2) * sm
    return FieldTrace(traj.times, field_, b_out, sm.imag, prefactor)


def standard_observables(ops: Operators) -> dict[str, np.ndarray]:
    """``sz``, ``sm``, ``sp_sm`` and ``n`` keyed as used across the package."""
    return {"sz": ops.sz, "sm": ops.sm, "sp_sm": ops.sp @ ops.sm, "n": ops.n}


def dominant_frequencies(t, y, f_max: float = 100.0, df: float = 0.05, prominence: float = 0.05):
    """Peaks of ``|int (y - y_final) e^{2 pi i f t} dt|`` for ``0 < f < f_max``.

    Subtracting the final value removes the static offset so that the
    transform is dominated by the oscillating content.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=complex)
    f = np.arange(int(round(f_max / df)) + 1) * df
    amp = np.abs(half_sided_transform(t - t[0], y - y[-1], f))
    idx, _ = _find_peaks(amp, prominence=prominence * amp.max())
    out = []
    for i in idx:
        pos, h = _parabolic(f, amp, i)
        out.append((float(pos), float(h)))
    return np.array(out).reshape(-1, 2), f, amp
