"""Transmon and waveguide-reflection formulas plus the least-squares fitters.

All fitters share one Levenberg-Marquardt driver with analytic Jacobians
(:func:`least_squares_fit`) and return a :class:`FitReport`.  Initial guesses
come from deterministic moment heuristics, so identical inputs give identical
reports.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import ConfigError, FitError

MAX_ITERATIONS = 200
GRADIENT_TOL = 1e-10
# cosine between the residual and any Jacobian column below which a fit counts as converged
CONVERGED_COSINE = 1e-6
# residual norm, relative to the model scale |J x|, treated as an exact fit
EXACT_FIT = 1e-10


@dataclass(frozen=True)
class TransmonParams:
    """Josephson and charging energies in GHz."""

    E_J: float = 13.25
    E_C: float = 0.625

    def __post_init__(self):
        if not (self.E_J > self.E_C > 0):
            raise ConfigError("transmon regime requires E_J > E_C > 0")


@dataclass
class FitReport:
    """Outcome of a least-squares fit.

    ``uncertainties`` are linearized one-sigma half-widths scaled by the
    residual variance.  ``gradient`` is the largest cosine between the
    residual vector and a Jacobian column; it vanishes at a stationary point.
    """

    params: dict[str, float]
    residual_norm: float
    uncertainties: dict[str, float]
    iterations: int
    converged: bool
    gradient: float
    flags: tuple[str, ...] = field(default_factory=tuple)


def least_squares_fit(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    names: Sequence[str],
    max_iterations: int = MAX_ITERATIONS,
) -> FitReport:
    """Damped Gauss-Newton (MINPACK Levenberg-Marquardt) on real residuals."""
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise FitError("non-finite initial guess")
    try:
        res = least_squares(
            residual,
            x0,
            jac=jacobian,
            method="lm",
            gtol=GRADIENT_TOL,
            xtol=1e-15,
            ftol=1e-15,
            max_nfev=max_iterations * (x0.size + 1),
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"least-squares solver failed: {exc}") from exc
    r = res.fun
    J = res.jac
    rn = float(np.linalg.norm(r))
    cols = np.linalg.norm(J, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.abs(J.T @ r) / (cols * rn)
    cos = np.where(np.isfinite(cos), cos, 0.0)
    grad = float(np.max(cos)) if rn > 0 else 0.0
    dof = max(r.size - x0.size, 1)
    try:
        cov = np.linalg.inv(J.T @ J) * (rn**2 / dof)
        err = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        err = np.full(x0.size, np.inf)
    # an exact fit leaves round-off residuals whose direction carries no information
    exact = rn <= EXACT_FIT * float(np.linalg.norm(J @ res.x))
    converged = bool(res.status > 0 and (grad <= CONVERGED_COSINE or exact) and np.all(np.isfinite(res.x)))
    return FitReport(
        params=dict(zip(names, map(float, res.x))),
        residual_norm=rn,
        uncertainties=dict(zip(names, map(float, err))),
        iterations=int(res.nfev),
        converged=converged,
        gradient=grad,
    )


def _require_converged(rep: FitReport, what: str) -> FitReport:
    if not rep.converged:
        raise FitError(f"{what} fit did not converge (gradient cosine {rep.gradient:.3g})")
    return rep


# ---------------------------------------------------------------- transmon


def transmon_transition(p: TransmonParams, delta_phi_over_phi0, n=0):
    """``sqrt(8 E_J E_C cos(pi dphi/phi0)) - E_C (n + 1)`` in GHz.

    Raises
    ------
    ConfigError
        Outside the branch where ``cos(pi dphi/phi0) >= 0``.
    """
    c = np.cos(np.pi * np.asarray(delta_phi_over_phi0, dtype=float))
    if np.any(c < 0):
        raise ConfigError("flux outside the real-plasma-frequency branch")
    out = np.sqrt(8 * p.E_J * p.E_C * c) - p.E_C * (np.asarray(n) + 1)
    return float(out) if np.ndim(out) == 0 else out


def fit_transmon(phi, freq, n=0) -> FitReport:
    """Fit ``E_J``, ``E_C`` to transition frequencies versus reduced flux.

    Parameters
    ----------
    phi : array_like
        ``dphi/phi0`` for each sample.
    freq : array_like
        Transition frequencies in GHz.
    n : int or array_like
        Lower level of each transition (0 for E01, 1 for E12).
    """
    phi = np.asarray(phi, dtype=float)
    freq = np.asarray(freq, dtype=float)
    n = np.broadcast_to(np.asarray(n), phi.shape).astype(float)
    if phi.size < 4:
        raise FitError("need at least 4 samples")
    c = np.cos(np.pi * phi)
    if np.any(c <= 0):
        raise ConfigError("flux outside the real-plasma-frequency branch")
    if np.unique(np.round(c, 12)).size < 2:
        raise FitError("degenerate design: all samples at one flux")

    # initial guess from the two extreme-flux samples of the lowest branch
    base = n == n.min()
    cb, fb, nb = c[base], freq[base], n[base]
    if np.unique(np.round(cb, 12)).size >= 2:
        i1, i2 = int(np.argmax(cb)), int(np.argmin(cb))
    else:
        i1, i2 = int(np.argmax(c)), int(np.argmin(c))
        cb, fb, nb = c, freq, n
    s1, s2 = math.sqrt(cb[i1]), math.sqrt(cb[i2])
    k1, k2 = nb[i1] + 1, nb[i2] + 1
    ec0 = (fb[i2] * s1 - fb[i1] * s2) / (k1 * s2 - k2 * s1)
    if not (0 < ec0 < fb[i1]):
        ec0 = 0.05 * fb[i1]
    ej0 = (fb[i1] + k1 * ec0) ** 2 / (8 * ec0 * cb[i1])

    def model(x):
        return np.sqrt(8 * x[0] * x[1] * c) - x[1] * (n + 1)

    def jac(x):
        s = np.sqrt(8 * x[0] * x[1] * c)
        return np.column_stack([4 * x[1] * c / s, 4 * x[0] * c / s - (n + 1)])

    rep = least_squares_fit(lambda x: model(x) - freq, jac, [ej0, ec0], ["E_J", "E_C"])
    return _require_converged(rep, "transmon")


# ---------------------------------------------------------------- reflection


def reflection_coefficient(delta_omega, Omega, gamma_1, gamma_2, gamma_e):
    """Elastic reflection ``r_e`` of a driven atom at the end of a waveguide.

    ``1 - (gamma_e/gamma_2)(1 - i dw/gamma_2) / (1 + (dw/gamma_2)^2 + Omega^2/(gamma_1 gamma_2))``.
    All arguments share one unit.
    """
    if gamma_1 <= 0 or gamma_2 <= 0:
        raise ConfigError("gamma_1 and gamma_2 must be positive")
    dw = np.asarray(delta_omega, dtype=float)
    num = 1 - 1j * dw / gamma_2
    den = 1 + (dw / gamma_2) ** 2 + Omega**2 / (gamma_1 * gamma_2)
    return 1 - (gamma_e / gamma_2) * num / den


def weak_drive_reflection(delta_omega, gamma_2, gamma_e):
    """Weak-drive limit ``1 - (gamma_e/gamma_2) / (1 + i dw/gamma_2)``."""
    dw = np.asarray(delta_omega, dtype=float)
    return 1 - (gamma_e / gamma_2) / (1 + 1j * dw / gamma_2)


def fit_reflection(delta_omega, r, Omega=0.0, gamma_1: float | None = None) -> FitReport:
    """Complex least squares of the reflection formula.

    With ``gamma_1`` given it is held fixed and only ``gamma_e``, ``gamma_2``
    are fitted; otherwise all three are free, which requires a drive strong
    enough for the saturation term to matter.  The report also carries the
    derived efficiency ``eta = gamma_e / (2 gamma_2)``.
    """
    dw = np.asarray(delta_omega, dtype=float)
    r = np.asarray(r, dtype=complex)
    if dw.size < 6:
        raise FitError("need at least 6 samples")
    free_g1 = gamma_1 is None
    if free_g1 and Omega == 0:
        raise FitError("gamma_1 is unidentifiable at zero drive; supply it")

    # moment heuristics: the dip depth gives gamma_e/gamma_2, the half-depth width gives gamma_2
    depth = 1 - r.real
    i0 = int(np.argmax(depth))
    half = depth >= 0.5 * depth[i0]
    width = dw[half].max() - dw[half].min() if half.sum() > 1 else (dw.max() - dw.min()) / 4
    g2_0 = max(width / 2, 1e-6)
    ge_0 = max(depth[i0] * g2_0, 1e-6)
    g1_0 = gamma_1 if gamma_1 is not None else g2_0

    def unpack(x):
        return (x[0], x[1], x[2]) if free_g1 else (x[0], x[1], gamma_1)

    def resid(x):
        ge, g2, g1 = unpack(x)
        d = reflection_coefficient(dw, Omega, g1, g2, ge) - r
        return np.concatenate([d.real, d.imag])

    def jac(x):
        ge, g2, g1 = unpack(x)
        N = 1 - 1j * dw / g2
        D = 1 + (dw / g2) ** 2 + Omega**2 / (g1 * g2)
        d_ge = -(N / D) / g2
        qD = g2 * D
        dqD = D - 2 * dw**2 / g2**2 - Omega**2 / (g1 * g2)
        d_g2 = -ge * ((1j * dw / g2**2) * qD - N * dqD) / qD**2
        cols = [d_ge, d_g2]
        if free_g1:
            cols.append((ge / g2) * N / D**2 * (-(Omega**2) / (g1**2 * g2)))
        J = np.column_stack(cols)
        return np.vstack([J.real, J.imag])

    x0 = [ge_0, g2_0, g1_0] if free_g1 else [ge_0, g2_0]
    names = ["gamma_e", "gamma_2", "gamma_1"] if free_g1 else ["gamma_e", "gamma_2"]
    rep = _require_converged(least_squares_fit(resid, jac, x0, names), "reflection")
    if not free_g1:
        rep.params["gamma_1"] = float(gamma_1)
        rep.uncertainties["gamma_1"] = 0.0
    rep.params["eta"] = rep.params["gamma_e"] / (2 * rep.params["gamma_2"])
    return rep


def reflection_locus_axes(Omega, gamma_1, gamma_2, gamma_e) -> tuple[float, float]:
    """Semi-axes (real, imaginary) of the ``r_e`` locus over detuning.

    With ``s = Omega^2/(gamma_1 gamma_2)`` and ``v = dw/(gamma_2 sqrt(1+s))`` the
    reflection is ``1 - (gamma_e/gamma_2)[1/(1+s) - i v/sqrt(1+s)]/(1+v^2)``, an
    ellipse with semi-axes ``gamma_e/(2 gamma_2 (1+s))`` and
    ``gamma_e/(2 gamma_2 sqrt(1+s))``.  At weak drive both reduce to the circle
    radius ``gamma_e/(2 gamma_2)``.
    """
    s = Omega**2 / (gamma_1 * gamma_2)
    base = gamma_e / (2 * gamma_2)
    return base / (1 + s), base / math.sqrt(1 + s)


def fit_circle(z) -> tuple[complex, float, float]:
    """Algebraic (Kasa) circle fit; returns centre, radius and rms radial residual."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    A = np.column_stack([x, y, np.ones_like(x)])
    b = x**2 + y**2
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = sol[0] / 2, sol[1] / 2
    rad = math.sqrt(sol[2] + cx**2 + cy**2)
    rms = float(np.sqrt(np.mean((np.abs(z - (cx + 1j * cy)) - rad) ** 2)))
    return complex(cx, cy), rad, rms


# ---------------------------------------------------------------- generic shapes


def lorentzian(x, center, fwhm, amplitude, offset=0.0):
    """``offset + amplitude (fwhm/2)^2 / ((x - center)^2 + (fwhm/2)^2)``."""
    w = fwhm / 2
    x = np.asarray(x, dtype=float)
    return offset + amplitude * w**2 / ((x - center) ** 2 + w**2)


def fit_lorentzian(x, y, mismatch_tol: float = 1e-3) -> FitReport:
    """Fit ``center``, ``fwhm``, ``amplitude`` and ``offset``.

    Flags ``"boundary"`` when the maximum sits on the first or last sample and
    ``"non-lorentzian"`` when the rms residual exceeds ``mismatch_tol`` of the
    amplitude (for example two unresolved lines).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 5:
        raise FitError("need at least 5 points")
    flags = []
    i0 = int(np.argmax(y))
    if i0 in (0, x.size - 1):
        flags.append("boundary")
        warnings.warn("Lorentzian peak at the boundary of the fit range", RuntimeWarning, stacklevel=2)
    off0 = float(np.min(y))
    amp0 = float(y[i0] - off0)
    above = np.nonzero(y - off0 >= 0.5 * amp0)[0]
    lo, hi = i0, i0
    while lo - 1 >= 0 and lo - 1 in above:
        lo -= 1
    while hi + 1 < x.size and hi + 1 in above:
        hi += 1
    fwhm0 = float(x[hi] - x[lo]) if hi > lo else float(x[-1] - x[0]) / 4
    fwhm0 = max(fwhm0, abs(x[1] - x[0]))
    x0 = [float(x[i0]), fwhm0, max(amp0, 1e-300), off0]

    def resid(p):
        return lorentzian(x, *p) - y

    def jac(p):
        c, F, A, _ = p
        w = F / 2
        u = x - c
        D = u**2 + w**2
        return np.column_stack([A * w**2 * 2 * u / D**2, A * w * u**2 / D**2, w**2 / D, np.ones_like(x)])

    rep = least_squares_fit(resid, jac, x0, ["center", "fwhm", "amplitude", "offset"])
    rep.params["fwhm"] = abs(rep.params["fwhm"])
    amp = abs(rep.params["amplitude"])
    if amp > 0 and rep.residual_norm / math.sqrt(x.size) > mismatch_tol * amp:
        flags.append("non-lorentzian")
    rep.flags = tuple(flags)
    return _require_converged(rep, "Lorentzian")


def fit_exponential(t, y) -> FitReport:
    """Fit ``amplitude * exp(-t/T1) + offset``; ``T1`` in the units of ``t``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 5:
        raise FitError("need at least 5 points")
    pos = y > 0
    if pos.sum() < 2:
        raise FitError("no positive segment for the initial estimate")
    slope, icpt = np.polyfit(t[pos], np.log(y[pos]), 1)
    if slope >= 0:
        raise FitError("trace grows; not a decay")
    x0 = [math.exp(icpt), -1.0 / slope, 0.0]

    def resid(p):
        return p[0] * np.exp(-t / p[1]) + p[2] - y

    def jac(p):
        e = np.exp(-t / p[1])
        return np.column_stack([e, p[0] * e * t / p[1] ** 2, np.ones_like(t)])

    rep = least_squares_fit(resid, jac, x0, ["amplitude", "T1", "offset"])
    if rep.params["T1"] <= 0:
        raise FitError("fitted time constant is negative: trace grows")
    return _require_converged(rep, "exponential")
