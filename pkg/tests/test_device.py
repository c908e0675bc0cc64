import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resfluor.device import (
    TransmonParams,
    fit_circle,
    fit_exponential,
    fit_lorentzian,
    fit_reflection,
    fit_transmon,
    lorentzian,
    reflection_coefficient,
    reflection_locus_axes,
    transmon_transition,
    weak_drive_reflection,
)
from resfluor.errors import ConfigError, FitError

FLUX = np.linspace(-0.4, 0.4, 41)


# ---------------------------------------------------------------- transmon


def test_transmon_transition_values():
    p = TransmonParams()
    # sqrt(8 * 13.25 * 0.625) - 0.625 at zero flux
    assert transmon_transition(p, 0.0) == pytest.approx(math.sqrt(66.25) - 0.625)
    assert transmon_transition(p, 0.0, n=1) == pytest.approx(math.sqrt(66.25) - 1.25)
    with pytest.raises(ConfigError):
        transmon_transition(p, 0.7)
    with pytest.raises(ConfigError):
        TransmonParams(E_J=0.5, E_C=0.625)


def test_transmon_fit_recovers_noiseless_parameters():
    p = TransmonParams(E_J=11.0, E_C=0.4)
    phi = np.concatenate([FLUX, FLUX])
    n = np.repeat([0, 1], FLUX.size)
    rep = fit_transmon(phi, transmon_transition(p, phi, n), n)
    assert rep.params["E_J"] == pytest.approx(11.0, rel=1e-9)
    assert rep.params["E_C"] == pytest.approx(0.4, rel=1e-9)


def test_transmon_fit_noise_statistics():
    p = TransmonParams()
    phi = np.concatenate([FLUX, FLUX])
    n = np.repeat([0, 1], FLUX.size)
    clean = transmon_transition(p, phi, n)
    ej, ec, inside = [], [], 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        rep = fit_transmon(phi, clean + rng.normal(0, 1e-3, clean.size), n)
        ej.append(rep.params["E_J"])
        ec.append(rep.params["E_C"])
        inside += abs(rep.params["E_C"] - p.E_C) <= 2 * rep.uncertainties["E_C"]
    assert abs(np.mean(ej) - p.E_J) < 3 * np.std(ej) / 10
    assert abs(np.mean(ec) - p.E_C) < 3 * np.std(ec) / 10
    # linearized uncertainties are calibrated: about 95% of two-sigma intervals cover the truth
    assert 88 <= inside <= 100


def test_transmon_fit_rejects_degenerate_design():
    with pytest.raises(FitError):
        fit_transmon(np.zeros(6), np.full(6, 7.5))
    with pytest.raises(FitError):
        fit_transmon([0.0, 0.1], [7.5, 7.4])


# ---------------------------------------------------------------- reflection


def test_weak_drive_limit():
    dw = np.linspace(-20, 20, 81)
    assert np.allclose(reflection_coefficient(dw, 0.0, 3.6, 2.8, 3.5), weak_drive_reflection(dw, 2.8, 3.5))


def test_weak_drive_locus_is_circle():
    dw = np.linspace(-400, 400, 4001)
    centre, radius, rms = fit_circle(weak_drive_reflection(dw, 2.8, 3.5))
    assert centre == pytest.approx(1 - 3.5 / 5.6, abs=1e-9)
    assert radius == pytest.approx(3.5 / 5.6, rel=1e-9)
    assert rms < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(0.5, 5.0), st.floats(0.5, 5.0))
def test_locus_semi_axes(Omega, g1, g2):
    ge = min(g1, 2 * g2) * 0.9
    s = Omega**2 / (g1 * g2)
    dw = np.linspace(-1, 1, 20001) * 2000 * g2 * math.sqrt(1 + s)
    r = reflection_coefficient(dw, Omega, g1, g2, ge)
    a_re, a_im = reflection_locus_axes(Omega, g1, g2, ge)
    assert (r.real.max() - r.real.min()) / 2 == pytest.approx(a_re, rel=1e-5)
    assert (r.imag.max() - r.imag.min()) / 2 == pytest.approx(a_im, rel=1e-5)


def test_reflection_fit_round_trip_fixed_gamma_1():
    dw = np.linspace(-15, 15, 61)
    r = reflection_coefficient(dw, 0.0, 3.6, 2.8, 3.5)
    rep = fit_reflection(dw, r, gamma_1=3.6)
    assert rep.params["gamma_e"] == pytest.approx(3.5, rel=1e-8)
    assert rep.params["gamma_2"] == pytest.approx(2.8, rel=1e-8)
    assert rep.params["eta"] == pytest.approx(0.625, rel=1e-8)


def test_reflection_fit_driven_all_free():
    dw = np.linspace(-15, 15, 61)
    r = reflection_coefficient(dw, 4.0, 3.6, 2.8, 3.5)
    rep = fit_reflection(dw, r, Omega=4.0)
    for k, v in {"gamma_e": 3.5, "gamma_2": 2.8, "gamma_1": 3.6}.items():
        assert rep.params[k] == pytest.approx(v, rel=1e-6)


def test_reflection_fit_needs_gamma_1_at_zero_drive():
    dw = np.linspace(-15, 15, 61)
    with pytest.raises(FitError):
        fit_reflection(dw, weak_drive_reflection(dw, 2.8, 3.5))


# ---------------------------------------------------------------- shapes


def test_lorentzian_fit_round_trip():
    x = np.linspace(-10, 10, 201)
    rep = fit_lorentzian(x, lorentzian(x, 1.3, 2.5, 4.0, 0.2))
    assert rep.params["center"] == pytest.approx(1.3, abs=1e-9)
    assert rep.params["fwhm"] == pytest.approx(2.5, rel=1e-9)
    assert rep.flags == ()


def test_lorentzian_fit_flags_unresolved_pair_and_boundary():
    x = np.linspace(-10, 10, 201)
    pair = lorentzian(x, -0.8, 3.0, 1.0) + lorentzian(x, 0.8, 3.0, 1.0)
    assert "non-lorentzian" in fit_lorentzian(x, pair).flags
    with pytest.warns(RuntimeWarning):
        rep = fit_lorentzian(x, lorentzian(x, -10.0, 6.0, 1.0))
    assert "boundary" in rep.flags


def test_exponential_fit():
    t = np.linspace(0, 0.5, 101)
    rep = fit_exponential(t, 2.0 * np.exp(-t / 0.044) + 0.01)
    assert rep.params["T1"] == pytest.approx(0.044, rel=1e-9)
    assert rep.params["offset"] == pytest.approx(0.01, abs=1e-10)
    with pytest.raises(FitError):
        fit_exponential(t, np.exp(t))
    with pytest.raises(FitError):
        fit_exponential(t[:3], np.ones(3))


def test_fits_are_deterministic():
    x = np.linspace(-10, 10, 101)
    y = lorentzian(x, 0.5, 2.0, 1.0) + np.random.default_rng(3).normal(0, 1e-3, x.size)
    assert fit_lorentzian(x, y).params == fit_lorentzian(x, y).params
