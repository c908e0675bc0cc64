"""Scenario pipelines: build the spec, fix the truncation, solve, write files.

Every scenario writes ``<scenario>.dat`` (data), ``<scenario>.peaks.dat``
(peak or fit table) and ``manifest.txt`` into the output directory.  Data
files carry no timestamps, so identical configurations give byte-identical
data; the manifest records the run time and software versions.
"""

from __future__ import annotations

import datetime as _dt
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from ..correlation import (
    SpectrumResult,
    dominant_frequencies,
    emission_spectrum,
    g1,
    g1_frequency_content,
    incoherent_spectrum,
    output_field_trace,
    output_power_trace,
    stationary_correlation,
)
from ..device import (
    TransmonParams,
    fit_exponential,
    fit_reflection,
    fit_transmon,
    reflection_coefficient,
    transmon_transition,
)
from ..dressed import DressedParams, predict_peaks
from ..errors import ConfigError, NumericalError, ResfluorError
from ..hilbert import SystemSpec, displace_frame
from ..lindblad import converge_truncation
from ..pumped import calibrate_pump, mean_photon_number, pumped_spectrum
from .config import ScenarioConfig
from .dataio import format_meta, read_table, write_table
from .pulses import PulseProgram, Segment, run_pulse_program

LOWER_SIDEBAND_EDGE = -15.0  # MHz; peaks below this belong to the lower sideband group


@dataclass
class ScenarioOutput:
    """Paths written and a small summary of the headline numbers."""

    scenario: str
    files: list[Path]
    summary: dict = field(default_factory=dict)


@contextmanager
def stage(name: str):
    """Prefix errors raised inside the block with the pipeline stage name."""
    try:
        yield
    except ResfluorError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
            exc.args = (f"[{name}] {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
        raise
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
        err = NumericalError(f"[{name}] {exc}")
        err.stage = name
        raise err from exc


def worker_count() -> int:
    """Worker processes for sweeps: ``SIM_THREADS`` or the CPU count."""
    raw = os.environ.get("SIM_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SIM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"SIM_THREADS must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items, workers: int | None = None) -> list:
    """Ordered map over ``items``; serial when one worker suffices."""
    items = list(items)
    workers = min(worker_count() if workers is None else workers, max(len(items), 1))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- spec resolution


def resolve_spec(cfg: ScenarioConfig) -> tuple[SystemSpec, dict]:
    """Physical spec of ``cfg`` with the port-drive option applied.

    With ``port_drive`` the configured ``Omega_c`` is the only drive and is
    moved onto the atom with the lossless displacement; ``Omega`` is ignored.
    """
    spec = cfg.system()
    info = {"drive_axis": "Omega [2pi MHz]"}
    if cfg.port_drive:
        if cfg.Omega_c == 0:
            raise ConfigError("port_drive needs a nonzero Omega_c")
        spec = displace_frame(spec.replace(Omega=0.0))
        info = {"drive_axis": "Omega_c [arbitrary units]", "displaced_Omega": spec.Omega}
    return spec, info


def resolve_truncation(cfg: ScenarioConfig, spec: SystemSpec, observable=None) -> SystemSpec:
    """Raise ``N_c`` from the configured value until the observable settles."""
    if not cfg.converge:
        return spec
    space = converge_truncation(spec, observable, cfg.rel_tol, n_start=cfg.N_c, step=2, n_max=cfg.n_max)
    return spec.with_cavity_levels(space.cavity_levels)


def _freqs(cfg: ScenarioConfig) -> np.ndarray:
    n = int(round(cfg.f_band / cfg.df))
    return np.arange(-n, n + 1) * cfg.df


def _method(cfg: ScenarioConfig, default: str) -> str:
    return default if cfg.method == "auto" else cfg.method


def _spectrum(cfg: ScenarioConfig, spec: SystemSpec, freqs, method: str) -> SpectrumResult:
    if method == "eig" or cfg.tau_span <= 0:
        return incoherent_spectrum(spec, freqs, method, cfg.dephasing, cfg.window)
    f_max = float(np.max(np.abs(freqs)))
    dt = 1.0 / (16 * f_max)
    tau = np.arange(int(math.ceil(cfg.tau_span / dt)) + 1) * dt
    trace, _, _ = stationary_correlation(spec, tau, f_max, cfg.dephasing)
    return emission_spectrum(trace, freqs, window=cfg.window)


def multiplet_splittings(positions) -> dict[str, float]:
    """Left, right and central splittings of a seven-line multiplet."""
    p = sorted(positions)
    if len(p) != 7:
        return {}
    return {"left_splitting": p[1] - p[0], "right_splitting": p[6] - p[5], "central_splitting": p[4] - p[2]}


def _peak_table(peaks):
    return (
        ["position", "height", "fwhm"],
        ["MHz", "1/MHz", "MHz"],
        [[p.position for p in peaks], [p.height for p in peaks], [p.fwhm for p in peaks]],
    )


def _meta(cfg: ScenarioConfig, spec: SystemSpec, **extra) -> dict:
    meta = {"scenario": cfg.scenario, "N_c": spec.hilbert.cavity_levels, "Omega": spec.Omega}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------- scenarios


def run_spectrum(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    with stage("build"):
        spec, info = resolve_spec(cfg)
    with stage("truncation"):
        spec = resolve_truncation(cfg, spec)
    with stage("solve"):
        freqs = _freqs(cfg)
        res = _spectrum(cfg, spec, freqs, _method(cfg, "transform"))
    splits = multiplet_splittings(res.positions)
    meta = _meta(cfg, spec, method=res.meta.get("method", "transform"), normalization=res.normalization)
    f1 = write_table(out / "spectrum.dat", ["freq", "S"], ["MHz", "1/MHz"], [res.freqs, res.density], meta)
    f2 = write_table(out / "spectrum.peaks.dat", *_peak_table(res.peaks), {**meta, "peaks": len(res.peaks), **splits})
    summary = {"positions": list(res.positions), "fwhm": [p.fwhm for p in res.peaks], "N_c": spec.hilbert.cavity_levels}
    summary.update(splits)
    summary.update(info)
    return ScenarioOutput(cfg.scenario, [f1, f2], summary)


def _sweep_point(args):
    spec, freqs, method, dephasing, window = args
    res = incoherent_spectrum(spec, freqs, method, dephasing, window)
    return res.density, res.peaks


def anticrossing_gap(omegas, peak_lists, edge: float = LOWER_SIDEBAND_EDGE):
    """Smallest separation of two adjacent lower-sideband peaks over the sweep.

    Returns ``(gap, Omega)``; ``(nan, nan)`` when no sweep point shows two
    lower-sideband peaks.
    """
    best = (math.inf, math.nan)
    for om, peaks in zip(omegas, peak_lists):
        pos = sorted(p.position for p in peaks if p.position < edge)
        for a, b in zip(pos, pos[1:]):
            if b - a < best[0]:
                best = (b - a, om)
    return best if math.isfinite(best[0]) else (math.nan, math.nan)


def _sweep_specs(cfg: ScenarioConfig, spec: SystemSpec) -> list[SystemSpec]:
    omegas = cfg.sweep_values()
    with stage("truncation"):
        n = spec.hilbert.cavity_levels
        for om in (omegas[0], omegas[-1]):
            n = max(n, resolve_truncation(cfg, spec.replace(Omega=om)).hilbert.cavity_levels)
    if cfg.port_drive:
        # the sweep axis is the port amplitude; map each value through the displacement
        return [displace_frame(spec.replace(Omega=0.0, Omega_c=v).with_cavity_levels(n)) for v in omegas]
    return [spec.replace(Omega=om).with_cavity_levels(n) for om in omegas]


def run_sweep(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    with stage("build"):
        spec = cfg.system()
        axis = cfg.sweep_values()
    specs = _sweep_specs(cfg, spec)
    freqs = _freqs(cfg)
    method = _method(cfg, "eig")
    with stage("solve"):
        results = parallel_map(_sweep_point, [(s, freqs, method, cfg.dephasing, cfg.window) for s in specs])
    om_col, f_col, s_col = [], [], []
    pk = {"axis": [], "Omega": [], "position": [], "height": [], "fwhm": []}
    for v, s, (density, peaks) in zip(axis, specs, results):
        om_col += [v] * freqs.size
        f_col.append(freqs)
        s_col.append(density)
        for p in peaks:
            pk["axis"].append(v)
            pk["Omega"].append(s.Omega)
            pk["position"].append(p.position)
            pk["height"].append(p.height)
            pk["fwhm"].append(p.fwhm)
    gap, at = anticrossing_gap([s.Omega for s in specs], [r[1] for r in results])
    meta = _meta(cfg, specs[0], method=method, sweep_axis="Omega_c" if cfg.port_drive else "Omega")
    meta.pop("Omega")
    f1 = write_table(
        out / "sweep.dat", ["axis", "freq", "S"], ["MHz", "MHz", "1/MHz"], [om_col, np.concatenate(f_col), np.concatenate(s_col)], meta
    )
    f2 = write_table(
        out / "sweep.peaks.dat",
        list(pk),
        ["MHz", "MHz", "MHz", "1/MHz", "MHz"],
        list(pk.values()),
        {**meta, "lower_sideband_min_gap": gap, "gap_at_Omega": at},
    )
    summary = {"omegas": [s.Omega for s in specs], "peaks": [r[1] for r in results], "min_gap": gap, "gap_at": at}
    return ScenarioOutput(cfg.scenario, [f1, f2], summary)


def run_g1(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    with stage("build"):
        spec, _ = resolve_spec(cfg)
    rows = {"Omega": [], "tau": [], "g1": []}
    pk = {"Omega": [], "source": [], "position": [], "nearest_spectrum": [], "deviation": []}
    deviations = {}
    for om in cfg.g1_omegas:
        s = spec.replace(Omega=om)
        with stage(f"truncation Omega={om}"):
            s = resolve_truncation(cfg, s)
        with stage(f"correlation Omega={om}"):
            trace, _, _ = stationary_correlation(s, f_max=cfg.f_band, dephasing=cfg.dephasing)
            spec_res = emission_spectrum(trace, _freqs(cfg), window=cfg.window)
            content = g1_frequency_content(trace, cfg.f_band, cfg.df)
        g = g1(trace)
        rows["Omega"] += [om] * g.tau.size
        rows["tau"].append(g.tau)
        rows["g1"].append(g.values)
        targets = np.abs(spec_res.positions)
        worst = 0.0
        for p in spec_res.peaks:
            pk["Omega"].append(om)
            pk["source"].append("spectrum")
            pk["position"].append(p.position)
            pk["nearest_spectrum"].append(p.position)
            pk["deviation"].append(0.0)
        for p in content.peaks:
            j = int(np.argmin(np.abs(targets - p.position))) if targets.size else -1
            near = float(spec_res.positions[j]) if j >= 0 else math.nan
            dev = abs(abs(near) - p.position) if j >= 0 else math.inf
            worst = max(worst, dev)
            pk["Omega"].append(om)
            pk["source"].append("g1")
            pk["position"].append(p.position)
            pk["nearest_spectrum"].append(near)
            pk["deviation"].append(dev)
        deviations[om] = (worst, [p.position for p in content.peaks], list(spec_res.positions))
    meta = {"scenario": cfg.scenario, "g1_omegas": cfg.g1_omegas}
    f1 = write_table(
        out / "g1.dat",
        ["Omega", "tau", "g1"],
        ["MHz", "us", "1"],
        [rows["Omega"], np.concatenate(rows["tau"]), np.concatenate(rows["g1"])],
        meta,
    )
    f2 = write_table(out / "g1.peaks.dat", list(pk), ["MHz", "-", "MHz", "MHz", "MHz"], list(pk.values()), meta)
    return ScenarioOutput(cfg.scenario, [f1, f2], {"deviations": deviations})


def _drive_mode(cfg: ScenarioConfig, default: str) -> str:
    mode = default if cfg.drive_mode == "auto" else cfg.drive_mode
    return "direct" if mode == "displaced" else "port"


def run_dynamics(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    with stage("build"):
        spec, _ = resolve_spec(cfg)
        mode = _drive_mode(cfg, "displaced")
        prog = PulseProgram((Segment(cfg.t_span * 1e3, spec.Omega, label="drive"),), 0.0, cfg.t_step * 1e3)
    with stage("evolve"):
        res = run_pulse_program(prog, spec.replace(Omega=0.0, Omega_c=0.0), mode, cfg.dephasing)
        traj = res.trajectory
        traj.check_invariants()
    power = output_power_trace(traj, spec)
    fld = output_field_trace(traj, spec)
    with stage("analysis"):
        found, _, _ = dominant_frequencies(traj.times, traj.expect["sz"].real, cfg.f_band, cfg.df)
    meta = _meta(cfg, spec, drive_mode=mode)
    f1 = write_table(
        out / "dynamics.dat",
        ["t", "sz", "sm", "sp_sm", "sigma_y", "P_literal", "P_physical", "field"],
        ["us", "1", "1", "1", "1", "W", "W", "arb"],
        [traj.times, traj.expect["sz"].real, traj.expect["sm"], traj.expect["sp_sm"].real, fld.sigma_y, power.literal, power.physical, fld.field],
        meta,
    )
    f2 = write_table(out / "dynamics.peaks.dat", ["freq", "amplitude"], ["MHz", "arb"], [found[:, 0], found[:, 1]], meta)
    return ScenarioOutput(cfg.scenario, [f1, f2], {"frequencies": list(found[:, 0]), "amplitudes": list(found[:, 1])})


def run_relax(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    with stage("build"):
        spec, _ = resolve_spec(cfg)
        mode = _drive_mode(cfg, "port")
    cols = {k: [] for k in ("Omega", "t", "sz", "sp_sm", "P_literal", "P_physical")}
    fits = {k: [] for k in ("Omega", "T1", "T1_literal", "amplitude", "offset", "converged")}
    t1 = {}
    for om in cfg.relax_omegas:
        prog = PulseProgram.pi_pulse(om, cfg.relax_window * 1e3, cfg.t_step * 1e3)
        with stage(f"evolve Omega={om}"):
            res = run_pulse_program(prog, spec.replace(Omega=0.0, Omega_c=0.0), mode, cfg.dephasing)
            traj = res.trajectory
            traj.check_invariants()
        power = output_power_trace(traj, spec, t_ref=res.drive_end)
        m = traj.times >= res.drive_end - 1e-12
        t = traj.times[m] - res.drive_end
        with stage(f"fit Omega={om}"):
            rep = fit_exponential(t, traj.expect["sp_sm"].real[m])
            lit = fit_exponential(t, power.literal[m] / power.literal[m][0])
        t1[om] = rep.params["T1"]
        cols["Omega"] += [om] * traj.times.size
        cols["t"].append(traj.times)
        cols["sz"].append(traj.expect["sz"].real)
        cols["sp_sm"].append(traj.expect["sp_sm"].real)
        cols["P_literal"].append(power.literal)
        cols["P_physical"].append(power.physical)
        fits["Omega"].append(om)
        fits["T1"].append(rep.params["T1"] * 1e3)
        fits["T1_literal"].append(lit.params["T1"] * 1e3)
        fits["amplitude"].append(rep.params["amplitude"])
        fits["offset"].append(rep.params["offset"])
        fits["converged"].append(rep.converged)
    meta = {"scenario": cfg.scenario, "drive_mode": mode, "N_c": spec.hilbert.cavity_levels}
    data = [cols["Omega"]] + [np.concatenate(cols[k]) for k in ("t", "sz", "sp_sm", "P_literal", "P_physical")]
    f1 = write_table(out / "relax.dat", list(cols), ["MHz", "us", "1", "1", "W", "W"], data, meta)
    f2 = write_table(out / "relax.peaks.dat", list(fits), ["MHz", "ns", "ns", "1", "1", "bool"], list(fits.values()), meta)
    return ScenarioOutput(cfg.scenario, [f1, f2], {"T1": t1, "mode": mode})


def _calibrated(cfg: ScenarioConfig, spec: SystemSpec):
    """Pump amplitude from the config, or calibrated to ``target_n`` when zero."""
    if spec.pump_amp != 0:
        return spec, None
    cal = calibrate_pump(spec, cfg.target_n, dephasing=cfg.dephasing)
    return spec.replace(pump_amp=cal.pump_amp), cal


def _pumped_truncation(cfg: ScenarioConfig, spec: SystemSpec):
    spec, cal = _calibrated(cfg, spec)
    if not cfg.converge:
        return spec, cal

    def obs(s):
        return np.array([mean_photon_number(s, cfg.dephasing)])

    settled = resolve_truncation(cfg, spec, obs)
    if settled.hilbert != spec.hilbert and cal is not None:
        settled, cal = _calibrated(cfg, settled.replace(pump_amp=0.0))
    return settled, cal


def run_pumped(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    with stage("build"):
        spec, _ = resolve_spec(cfg)
    with stage("calibration"):
        spec, cal = _pumped_truncation(cfg, spec)
    with stage("solve"):
        kw = {"n_t0": cfg.n_t0, "window": cfg.window}
        if cfg.tau_span > 0:
            kw["tau_span"] = cfg.tau_span
        res = pumped_spectrum(spec, _freqs(cfg), cfg.dephasing, **kw)
    extra = {"pump_amp": spec.pump_amp, "period": res.meta["period"], "drift": res.meta["drift"]}
    if cal is not None:
        extra.update(mean_n=cal.mean_n, target_n=cal.target_n)
    meta = _meta(cfg, spec, **extra)
    f1 = write_table(out / "pumped-spectrum.dat", ["freq", "S"], ["MHz", "1/MHz"], [res.freqs, res.density], meta)
    f2 = write_table(out / "pumped-spectrum.peaks.dat", *_peak_table(res.peaks), meta)
    summary = {"positions": list(res.positions), "pump_amp": spec.pump_amp, "mean_n": cal.mean_n if cal else math.nan}
    return ScenarioOutput(cfg.scenario, [f1, f2], summary)


def central_linewidths(specs, freqs, method="eig", dephasing="rates", window="none"):
    """Position and FWHM of the peak nearest the drive frequency for each spec."""
    results = parallel_map(_sweep_point, [(s, freqs, method, dephasing, window) for s in specs])
    out = []
    for _, peaks in results:
        if not peaks:
            out.append((math.nan, math.nan))
            continue
        c = min(peaks, key=lambda p: abs(p.position))
        out.append((c.position, c.fwhm))
    return out


def local_minima(x, y) -> list[tuple[float, float]]:
    """Interior local minima of ``y`` sorted by depth (smallest first)."""
    y = np.asarray(y, dtype=float)
    found = [(x[i], y[i]) for i in range(1, len(y) - 1) if y[i] < y[i - 1] and y[i] <= y[i + 1]]
    return sorted(found, key=lambda m: m[1])


def run_linewidth_sweep(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    with stage("build"):
        spec = cfg.system()
    specs = _sweep_specs(cfg, spec)
    with stage("solve"):
        lw = central_linewidths(specs, _freqs(cfg), _method(cfg, "eig"), cfg.dephasing, cfg.window)
    om = [s.Omega for s in specs]
    fwhm = [w for _, w in lw]
    minima = local_minima(om, fwhm)
    meta = {"scenario": cfg.scenario, "N_c": specs[0].hilbert.cavity_levels}
    f1 = write_table(
        out / "linewidth-sweep.dat", ["Omega", "center", "fwhm"], ["MHz", "MHz", "MHz"], [om, [c for c, _ in lw], fwhm], meta
    )
    f2 = write_table(
        out / "linewidth-sweep.peaks.dat", ["Omega", "fwhm"], ["MHz", "MHz"], [[m[0] for m in minima], [m[1] for m in minima]], meta
    )
    return ScenarioOutput(cfg.scenario, [f1, f2], {"Omega": om, "fwhm": fwhm, "minima": minima})


# ---------------------------------------------------------------- fitting


def synthetic_transmon(noise: float, seed: int, params: TransmonParams = TransmonParams()):
    """E01 and E12 branches on a flux grid with Gaussian noise (GHz)."""
    rng = np.random.default_rng(seed)
    phi = np.tile(np.linspace(-0.4, 0.4, 41), 2)
    n = np.repeat([0, 1], 41)
    freq = transmon_transition(params, phi, n) + noise * rng.standard_normal(phi.size)
    return phi, freq, n


def synthetic_reflection(spec: SystemSpec, Omega: float = 0.0):
    dw = np.linspace(-20, 20, 81)
    return dw, reflection_coefficient(dw, Omega, spec.gamma_1, spec.gamma_2, spec.gamma_e)


def run_fit(cfg: ScenarioConfig, out: Path) -> ScenarioOutput:
    spec = cfg.system()
    kinds = ("transmon", "reflection") if cfg.fit_kind == "all" else (cfg.fit_kind,)
    if cfg.fit_data and len(kinds) != 1:
        raise ConfigError("fit_data needs fit_kind = transmon or reflection")
    data = {"dataset": [], "x": [], "y": [], "model": []}
    table = {"dataset": [], "parameter": [], "value": [], "uncertainty": [], "reference": []}
    summary = {}
    for kind in kinds:
        with stage(f"data {kind}"):
            loaded = read_table(cfg.fit_data) if cfg.fit_data else None
        with stage(f"fit {kind}"):
            if kind == "transmon":
                if loaded is not None:
                    phi, freq = loaded.column("flux"), loaded.column("freq")
                    n = loaded.column("n").astype(int) if "n" in loaded.columns else np.zeros(phi.size, int)
                else:
                    phi, freq, n = synthetic_transmon(cfg.noise, cfg.seed)
                rep = fit_transmon(phi, freq, n)
                fitted = TransmonParams(rep.params["E_J"], rep.params["E_C"])
                x, y, model = phi, freq.astype(complex), transmon_transition(fitted, phi, n).astype(complex)
                ref = {"E_J": 13.25, "E_C": 0.625}
            else:
                if loaded is not None:
                    dw = loaded.column("dw")
                    r = loaded.column("r.re") + 1j * loaded.column("r.im")
                else:
                    dw, r = synthetic_reflection(spec)
                rep = fit_reflection(dw, r, 0.0, gamma_1=spec.gamma_1)
                x, y = dw, r
                model = reflection_coefficient(dw, 0.0, spec.gamma_1, rep.params["gamma_2"], rep.params["gamma_e"])
                ref = {"gamma_e": spec.gamma_e, "gamma_2": spec.gamma_2, "gamma_1": spec.gamma_1, "eta": spec.gamma_e / (2 * spec.gamma_2)}
        summary[kind] = rep.params
        for name, value in rep.params.items():
            table["dataset"].append(kind)
            table["parameter"].append(name)
            table["value"].append(value)
            table["uncertainty"].append(rep.uncertainties.get(name, math.nan))
            table["reference"].append(ref.get(name, math.nan) if loaded is None else math.nan)
        data["dataset"] += [kind] * len(x)
        data["x"].append(np.asarray(x, float))
        data["y"].append(np.asarray(y, complex))
        data["model"].append(np.asarray(model, complex))
    meta = {"scenario": cfg.scenario, "fit_kind": cfg.fit_kind, "noise_GHz": cfg.noise, "seed": cfg.seed}
    f1 = write_table(
        out / "fit.dat",
        ["dataset", "x", "y", "model"],
        ["-", "flux|MHz", "GHz|1", "GHz|1"],
        [data["dataset"], np.concatenate(data["x"]), np.concatenate(data["y"]), np.concatenate(data["model"])],
        meta,
    )
    f2 = write_table(out / "fit.peaks.dat", list(table), ["-", "-", "-", "-", "-"], list(table.values()), meta)
    return ScenarioOutput(cfg.scenario, [f1, f2], summary)


# ---------------------------------------------------------------- analytic comparison


@dataclass(frozen=True)
class Pairing:
    label: str
    predicted: float
    numeric: float
    deviation: float
    tolerance: float
    merged: bool

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def pair_peaks(prediction, numeric_positions) -> list[Pairing]:
    """Match each predicted line to the nearest numeric peak.

    The tolerance is the predicted line's FWHM.  Without numeric peaks every
    line is unmatched, recorded with ``nan`` position and infinite deviation.
    """
    pos = np.asarray(numeric_positions, dtype=float)
    out = []
    for line in prediction.lines:
        if pos.size:
            j = int(np.argmin(np.abs(pos - line.offset)))
            near, dev = float(pos[j]), float(abs(pos[j] - line.offset))
        else:
            near, dev = math.nan, math.inf
        out.append(Pairing(line.label, line.offset, near, dev, line.linewidth, line.merged))
    return out


def compare_analytic(cfg: ScenarioConfig, out: Path | None = None) -> ScenarioOutput:
    """Pair dressed-state predictions with the numerically detected peaks."""
    with stage("build"):
        spec, _ = resolve_spec(cfg)
        prediction = predict_peaks(DressedParams.from_spec(spec), cfg.regime)
    if cfg.regime == "pumped":
        with stage("calibration"):
            spec, cal = _pumped_truncation(cfg, spec)
        with stage("solve"):
            res = pumped_spectrum(spec, _freqs(cfg), cfg.dephasing, n_t0=cfg.n_t0, window=cfg.window)
    else:
        with stage("truncation"):
            spec = resolve_truncation(cfg, spec)
        with stage("solve"):
            res = _spectrum(cfg, spec, _freqs(cfg), _method(cfg, "transform"))
    pairs = pair_peaks(prediction, res.positions)
    summary = {"pairs": pairs, "all_matched": all(p.passed for p in pairs), "positions": list(res.positions)}
    files = []
    if out is not None:
        meta = _meta(cfg, spec, regime=cfg.regime, matched=sum(p.passed for p in pairs), lines=len(pairs))
        files.append(write_table(out / "compare.dat", ["freq", "S"], ["MHz", "1/MHz"], [res.freqs, res.density], meta))
        files.append(
            write_table(
                out / "compare.peaks.dat",
                ["label", "predicted", "numeric", "deviation", "tolerance", "merged", "status"],
                ["-", "MHz", "MHz", "MHz", "MHz", "bool", "-"],
                [
                    [p.label for p in pairs],
                    [p.predicted for p in pairs],
                    [p.numeric for p in pairs],
                    [p.deviation for p in pairs],
                    [p.tolerance for p in pairs],
                    [p.merged for p in pairs],
                    ["pass" if p.passed else "FAIL" for p in pairs],
                ],
                meta,
            )
        )
    return ScenarioOutput(cfg.scenario, files, summary)


# ---------------------------------------------------------------- entry point

RUNNERS = {
    "spectrum": run_spectrum,
    "sweep": run_sweep,
    "g1": run_g1,
    "dynamics": run_dynamics,
    "relax": run_relax,
    "pumped-spectrum": run_pumped,
    "linewidth-sweep": run_linewidth_sweep,
    "fit": run_fit,
    "compare": compare_analytic,
}


def write_manifest(cfg: ScenarioConfig, out: Path, result: ScenarioOutput, started: _dt.datetime) -> Path:
    """Flat ``key = value`` record of the run; read back with :func:`read_manifest`."""
    entries = {
        "scenario": cfg.scenario,
        "started": started.isoformat(timespec="seconds"),
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "version.resfluor": __version__,
        "version.python": platform.python_version(),
        "version.numpy": np.__version__,
        "version.scipy": scipy.__version__,
        "SIM_THREADS": os.environ.get("SIM_THREADS", ""),
        "workers": worker_count(),
        "units": "frequencies and rates in 2pi MHz, times in us",
        "drive_axis": "Omega_c, arbitrary units" if cfg.port_drive else "Omega",
    }
    entries.update({f"config.{k}": v for k, v in cfg.items()})
    for k, v in result.summary.items():
        if isinstance(v, (int, float, str)):
            entries[f"result.{k}"] = v
    entries["files"] = [p.name for p in result.files]
    lines = [f"{k} = {format_meta(v)}" for k, v in entries.items()]
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def run_scenario(cfg: ScenarioConfig, out: str | Path | None = None) -> ScenarioOutput:
    """Run ``cfg.scenario`` and write its files into ``out`` (default ``cfg.out``)."""
    out = Path(cfg.out if out is None else out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    started = _dt.datetime.now(_dt.timezone.utc)
    result = RUNNERS[cfg.scenario](cfg, out)
    result.files.append(write_manifest(cfg, out, result, started))
    return result
