import numpy as np
import pytest

from resfluor.correlation import eigen_spectrum, frequency_grid
from resfluor.errors import BracketError, ConfigError, PeriodicStateError
from resfluor.hilbert import HilbertSpec, SystemSpec, build_operators
from resfluor.lindblad import evolve, liouvillian_for, steady_state
from resfluor.pumped import (
    calibrate_pump,
    harmonic_state,
    magnus_propagators,
    mean_photon_number,
    period_average,
    periodic_steady_state,
    pumped_spectrum,
)

SMALL = HilbertSpec(cavity_levels=6)


def spec(**kw):
    kw.setdefault("hilbert", SMALL)
    kw.setdefault("Omega", 37.0)
    return SystemSpec(**kw)


def test_unpumped_periodic_state_is_the_steady_state():
    s = spec()
    L = liouvillian_for(s)
    pss = periodic_steady_state(L, 16, period=1 / 37)
    rho = steady_state(L)
    assert np.max(np.abs(pss.states - rho[None])) < 1e-6
    ops = build_operators(SMALL)
    assert mean_photon_number(s) == pytest.approx(np.trace(ops.n @ rho).real, abs=1e-12)


def test_unpumped_modulated_spectrum_reduces_to_static():
    s = spec()
    freqs = frequency_grid(50, 0.1)
    got = pumped_spectrum(s, freqs, n_t0=16, refine=4)
    L = liouvillian_for(s)
    ref = eigen_spectrum(L, steady_state(L), freqs)
    assert np.max(np.abs(got.density - ref.density)) < 1e-3 * np.max(ref.density)


def test_magnus_cycle_matches_direct_integration():
    s = spec(pump_amp=2.0)
    L = liouvillian_for(s)
    pss = periodic_steady_state(L, 64)
    ops = build_operators(SMALL)
    t = np.arange(len(pss.states) + 1) * pss.step
    traj = evolve(L, pss.states[0], t, {"n": ops.n, "sz": ops.sz}, rtol=1e-10, atol=1e-12)
    assert np.max(np.abs(traj.expect["n"][:-1] - pss.expect(ops.n))) < 1e-5
    # periodicity: one full cycle returns to the start
    assert abs(traj.expect["sz"][-1] - traj.expect["sz"][0]) < 1e-5
    assert pss.drift < 1e-8


def test_harmonic_average_matches_time_average():
    s = spec(pump_amp=2.0)
    L = liouvillian_for(s)
    ops = build_operators(SMALL)
    pss = periodic_steady_state(L, 64)
    assert period_average(L, ops.n) == pytest.approx(np.mean(pss.expect(ops.n).real), rel=1e-5)
    rho = harmonic_state(L, 8)
    assert np.trace(rho[0]) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho[1], rho[-1].conj().T, atol=1e-10)


def test_photon_number_grows_with_pump():
    values = [mean_photon_number(spec(pump_amp=p)) for p in (0.0, 0.5, 1.0, 2.0)]
    assert np.all(np.diff(values) > 0)


def test_calibration_hits_target():
    cal = calibrate_pump(spec(), 1.0)
    assert cal.mean_n == pytest.approx(1.0, rel=0.01)
    assert mean_photon_number(spec(pump_amp=cal.pump_amp)) == pytest.approx(1.0, rel=0.01)


def test_calibration_errors():
    with pytest.raises(BracketError):
        calibrate_pump(spec(), 1.0, max_amp=0.3)
    with pytest.raises(ConfigError):
        calibrate_pump(spec(omega_pc=6814.0), 1.0)
    with pytest.raises(ConfigError):
        calibrate_pump(spec(), -1.0)


def test_periodic_state_rejects_large_drift():
    L = liouvillian_for(spec(pump_amp=2.0))
    U = magnus_propagators(L, L.period, 4)
    with pytest.raises(PeriodicStateError):
        periodic_steady_state(L, propagators=U, drift_tol=-1.0)


def test_undriven_pumped_spectrum_is_zero():
    res = pumped_spectrum(spec(Omega=0.0, g_c=0.0, pump_amp=1.0), frequency_grid(20, 0.5))
    assert np.max(np.abs(res.density)) < 1e-15


def test_spectrum_needs_resolved_period():
    with pytest.raises(ConfigError):
        pumped_spectrum(spec(pump_amp=1.0), n_t0=8)


@pytest.mark.slow
def test_pumped_state_needs_more_photon_levels():
    from resfluor.lindblad import converge_truncation

    base = spec(hilbert=HilbertSpec(cavity_levels=4))
    vac = converge_truncation(base, rel_tol=1e-3, n_start=4, step=2)
    cal = calibrate_pump(base.with_cavity_levels(10), 1.4)
    pumped = base.replace(pump_amp=cal.pump_amp)
    pum = converge_truncation(pumped, observable=mean_photon_number, rel_tol=1e-3, n_start=4, step=2)
    assert pum.cavity_levels > vac.cavity_levels
