import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from resfluor.correlation import (
    emission_spectrum,
    find_spectrum_peaks,
    frequency_grid,
    g1,
    g1_frequency_content,
    half_sided_transform,
    incoherent_spectrum,
    output_field_trace,
    output_power_trace,
    stationary_correlation,
    tau_grid,
    two_time_correlation,
)
from resfluor.device import lorentzian
from resfluor.errors import AliasingError, ConfigError, NonStationaryError, SpanError
from resfluor.hilbert import TWO_PI, HilbertSpec, SystemSpec, build_operators
from resfluor.lindblad import Trajectory, basis_state, evolve, liouvillian_for, steady_state

SMALL = HilbertSpec(cavity_levels=2)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)  # basis (|e>, |g>) for the oracle
SP = np.array([[0, 1], [0, 0]], dtype=complex)
SM = SP.T.copy()


def bloch_oracle_correlation(Omega, gamma_1, gamma_2, tau):
    """<sigma_+(0) sigma_-(tau)> of a resonantly driven atom from the Bloch equations alone."""
    W, g1_, g2 = TWO_PI * Omega, TWO_PI * gamma_1, TWO_PI * gamma_2
    A = np.array([[-g2, 0, 0], [0, -g2, -W], [0, W, -g1_]], dtype=complex)
    b = np.array([0, 0, -g1_], dtype=complex)
    u, v, w = np.linalg.solve(A, -b)
    rho = 0.5 * (np.eye(2) + u * SX + v * SY + w * SZ)
    X = rho @ SP  # regression operator; its trace is conserved
    trX = np.trace(X)
    x0 = np.array([np.trace(SX @ X), np.trace(SY @ X), np.trace(SZ @ X)])
    sol = solve_ivp(lambda _, x: A @ x + b * trX, (0, tau[-1]), x0, t_eval=tau, rtol=1e-11, atol=1e-14)
    sx, sy = sol.y[0], sol.y[1]
    values = (sx - 1j * sy) / 2
    asym = np.trace(rho @ SP) * np.trace(rho @ SM)
    return values, asym


def decoupled(Omega, **kw):
    return SystemSpec(g_c=0.0, Omega=Omega, hilbert=SMALL, **kw)


# ---------------------------------------------------------------- correlations


@pytest.mark.parametrize("Omega", [0.3, 14.5])
def test_correlation_matches_bloch_regression(Omega):
    spec = decoupled(Omega)
    L = liouvillian_for(spec)
    rho = steady_state(L)
    ops = build_operators(SMALL)
    tau = np.linspace(0, 0.5, 401)
    trace = two_time_correlation(L, rho, ops.sp, ops.sm, tau)
    expected, asym = bloch_oracle_correlation(Omega, spec.gamma_1, spec.gamma_2, tau)
    scale = abs(expected[0])
    assert np.max(np.abs(trace.values - expected)) < 1e-7 * scale
    assert trace.asymptote == pytest.approx(asym, rel=1e-9)


def test_coincidence_and_factorization_limits():
    spec = SystemSpec(Omega=37.0)
    L = liouvillian_for(spec)
    rho = steady_state(L)
    ops = build_operators(spec.hilbert)
    tau = tau_grid(spec, span_factor=12)
    trace = two_time_correlation(L, rho, ops.sp, ops.sm, tau)
    assert trace.values[0] == pytest.approx(np.trace(ops.sp @ ops.sm @ rho), abs=1e-15)
    assert abs(trace.values[-1] - trace.asymptote) < 1e-6 * abs(trace.values[0])


def test_eig_and_propagation_agree():
    spec = SystemSpec(Omega=37.0)
    L = liouvillian_for(spec)
    rho = steady_state(L)
    ops = build_operators(spec.hilbert)
    tau = np.linspace(0, 0.3, 301)
    a = two_time_correlation(L, rho, ops.sp, ops.sm, tau)
    b = two_time_correlation(L, rho, ops.sp, ops.sm, tau, method="eig")
    assert np.max(np.abs(a.values - b.values)) < 1e-9


def test_nonstationary_state_rejected():
    spec = decoupled(5.0)
    L = liouvillian_for(spec)
    ops = build_operators(SMALL)
    with pytest.raises(NonStationaryError):
        two_time_correlation(L, basis_state(SMALL, True), ops.sp, ops.sm, [0.0, 0.1])


def test_g1_normalization_and_undriven_rejection():
    trace, _, _ = stationary_correlation(decoupled(14.5))
    assert g1(trace).values[0] == 1.0
    dark, _, _ = stationary_correlation(decoupled(0.0))
    with pytest.raises(ConfigError):
        g1(dark)


def test_g1_content_matches_spectrum_at_mollow_drive():
    spec = SystemSpec(Omega=14.5)
    trace, _, _ = stationary_correlation(spec)
    content = g1_frequency_content(trace)
    spectrum = emission_spectrum(trace)
    side = np.abs(spectrum.positions)
    side = side[side > 1]
    assert len(content.peaks) >= 1
    for p in content.peaks:
        assert np.min(np.abs(side - p.position)) < 0.5


def test_thermal_cavity_g1_is_multifrequency():
    spec = SystemSpec(Omega=37.0, n_th=0.5)
    trace, _, _ = stationary_correlation(spec)
    content = g1_frequency_content(trace)
    assert len(content.peaks) >= 3


# ---------------------------------------------------------------- transforms


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 10.0), st.floats(-40.0, 40.0))
def test_transform_of_exponential_is_exact(rate, f0):
    # int_0^inf e^{-(r - i 2 pi f0) tau} e^{i 2 pi f tau} dtau = 1 / (r - i 2 pi (f + f0)), r in rad/us
    r = TWO_PI * rate
    tau = np.arange(0, 20 / r, 1 / 1600)
    y = np.exp((-r + 1j * TWO_PI * f0) * tau)
    f = np.linspace(-50, 50, 41)
    got = half_sided_transform(tau, y, f)
    exact = 1 / (r - 1j * TWO_PI * (f + f0))
    lam = abs(r - 1j * TWO_PI * f0)
    # kernel is integrated exactly; what remains is the linear interpolation error h^2 |y''| / 8
    interp = (tau[1] ** 2) * lam**2 / (8 * r)
    tail = np.exp(-r * tau[-1]) / r
    assert np.max(np.abs(got - exact)) < interp + tail


def test_zero_drive_spectrum_vanishes():
    res = incoherent_spectrum(decoupled(0.0))
    assert np.max(np.abs(res.density)) < 1e-15
    assert res.peaks == ()


def test_mollow_peaks_near_eigenfrequencies():
    spec = decoupled(14.5)
    res = incoherent_spectrum(spec)
    assert len(res.peaks) == 3
    # Bloch matrix root: sqrt(Omega^2 - (gamma_1 - gamma_2)^2 / 4)
    eig_f = np.sqrt(14.5**2 - (spec.gamma_1 - spec.gamma_2) ** 2 / 4)
    # maxima sit inside the eigenfrequency because the central line's tail tilts each sideband
    assert abs(res.positions[1]) < 0.05
    assert 0 < eig_f - abs(res.positions[0]) < 0.6
    assert 0 < eig_f - abs(res.positions[2]) < 0.6


def test_weak_drive_linewidth_is_gamma_2():
    spec = decoupled(0.2)
    res = incoherent_spectrum(spec, frequency_grid(30, 0.02), method="eig")
    (peak,) = res.peaks
    assert peak.fwhm / 2 == pytest.approx(spec.gamma_2, rel=0.01)


@pytest.mark.parametrize("Omega", [14.5, 37.0, 52.6])
def test_transform_and_eig_spectra_agree(Omega):
    spec = SystemSpec(Omega=Omega)
    a = incoherent_spectrum(spec)
    b = incoherent_spectrum(spec, method="eig")
    assert np.max(np.abs(a.density - b.density)) < 0.01 * np.max(b.density)


def test_spectrum_integral_equals_incoherent_coincidence():
    spec = SystemSpec(Omega=37.0)
    trace, _, _ = stationary_correlation(spec, f_max=400)
    res = emission_spectrum(trace, frequency_grid(400, 0.05), detect=False)
    inc0 = (trace.values[0] - trace.asymptote).real
    assert res.integral() * TWO_PI == pytest.approx(inc0, rel=0.02)
    assert np.min(res.density) > -1e-9 * np.max(res.density)


def test_short_span_and_coarse_grid_rejected():
    spec = decoupled(14.5)
    L = liouvillian_for(spec)
    ops = build_operators(SMALL)
    rho = steady_state(L)
    short = two_time_correlation(L, rho, ops.sp, ops.sm, np.linspace(0, 0.05, 200))
    with pytest.raises(SpanError):
        emission_spectrum(short)
    coarse = two_time_correlation(L, rho, ops.sp, ops.sm, np.arange(0, 3, 0.02))
    with pytest.raises(AliasingError):
        emission_spectrum(coarse)


def test_peak_finding_deterministic_and_separated():
    f = frequency_grid()
    y = lorentzian(f, -7.5, 3.0, 1.0) + lorentzian(f, 7.5, 3.0, 1.0) + lorentzian(f, 8.3, 3.0, 0.5)
    a = find_spectrum_peaks(f, y)
    b = find_spectrum_peaks(f, y)
    assert np.array_equal([p.position for p in a], [p.position for p in b])
    assert len(a) == 2  # the 0.8 MHz pair merges


# ---------------------------------------------------------------- waveguide outputs


def _trajectory(sz, sm):
    t = np.linspace(0, 1, sz.size)
    z = np.zeros_like(t)
    return Trajectory(t, {"sz": sz, "sm": sm}, z, z, z)


def test_ground_state_emits_nothing():
    n = 11
    traj = _trajectory(-np.ones(n), np.zeros(n, complex))
    p = output_power_trace(traj, SystemSpec())
    assert np.all(p.literal == 0) and np.all(p.physical == 0)
    fld = output_field_trace(traj, SystemSpec())
    assert np.all(fld.field == 0)


def test_free_decay_power_gives_gamma_1():
    from resfluor.device import fit_exponential

    spec = decoupled(0.0)
    ops = build_operators(SMALL)
    t = np.linspace(0, 0.4, 401)
    traj = evolve(liouvillian_for(spec), basis_state(SMALL, True), t, {"sz": ops.sz})
    p = output_power_trace(traj, spec)
    rep = fit_exponential(t, p.physical / p.physical[0])
    assert rep.params["T1"] == pytest.approx(1 / (TWO_PI * spec.gamma_1), rel=0.01)


def test_output_field_bounded_and_sigma_y():
    spec = decoupled(5.0)
    ops = build_operators(SMALL)
    L = liouvillian_for(spec)
    rho = steady_state(L)
    traj = evolve(L, rho, [0.0, 0.1], {"sz": ops.sz, "sm": ops.sm, "pe": ops.sp @ ops.sm})
    fld = output_field_trace(traj, spec)
    assert np.all(np.abs(fld.b_out) ** 2 <= TWO_PI * spec.gamma_e / 2 * traj.expect["pe"].real + 1e-12)
    assert np.array_equal(fld.sigma_y, traj.expect["sm"].imag)
