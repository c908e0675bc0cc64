"""Piecewise-constant drive programs.

A program is an ordered list of segments, each holding a constant drive of
amplitude ``Omega`` (2*pi*MHz at the atom) and phase; gaps between segments
and the trailing measurement window are free evolution.  In ``port`` mode the
drive enters through the cavity port, so the cavity field keeps ringing down
after a segment ends; in ``direct`` mode the atom is driven directly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..hilbert import SystemSpec, build_operators, port_drive_for
from ..lindblad import (
    Trajectory,
    build_hamiltonian,
    build_liouvillian,
    cavity_amplitude,
    evolve,
    ground_state,
    port_driven_liouvillian,
)
from ..correlation import standard_observables

PI_AREA_TOL = 1e-6


@dataclass(frozen=True)
class Segment:
    """Constant drive over ``duration_ns``.

    ``start_ns`` pins the segment on the time axis; ``None`` places it right
    after the previous one.  A segment labelled ``"pi"`` must have area
    ``Omega * duration = pi`` (``Omega`` in 2*pi*MHz, so ``Omega * t_us = 1/2``).
    """

    duration_ns: float
    Omega: float
    phase: float = 0.0
    start_ns: float | None = None
    label: str = ""

    def __post_init__(self):
        if not self.duration_ns > 0:
            raise ConfigError(f"segment duration must be positive, got {self.duration_ns}")
        if self.label == "pi":
            area = self.Omega * self.duration_ns * 1e-3 * 2 * math.pi
            if abs(area - math.pi) > PI_AREA_TOL:
                raise ConfigError(f"pi segment has area {area:.9g}, not pi")

    @property
    def complex_drive(self) -> complex:
        return self.Omega * cmath.exp(1j * self.phase)


@dataclass(frozen=True)
class PulseProgram:
    """Segments followed by a drive-free measurement window."""

    segments: tuple[Segment, ...]
    window_ns: float = 1000.0
    sample_ns: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.window_ns < 0 or self.sample_ns <= 0:
            raise ConfigError("window must be non-negative and sample spacing positive")
        self.schedule()  # rejects overlaps

    @classmethod
    def pi_pulse(cls, Omega: float, window_ns: float = 1000.0, sample_ns: float = 0.5, phase: float = 0.0):
        """A single pi pulse at amplitude ``Omega`` then free decay."""
        if Omega <= 0:
            raise ConfigError("pi pulse needs a positive amplitude")
        seg = Segment(1e3 / (2 * Omega), Omega, phase, label="pi")
        return cls((seg,), window_ns, sample_ns)

    def schedule(self) -> list[tuple[float, float, complex]]:
        """``(start_us, stop_us, drive)`` pieces covering the whole program, gaps included."""
        pieces = []
        t = 0.0
        for seg in self.segments:
            start = t if seg.start_ns is None else seg.start_ns * 1e-3
            if start < t - 1e-12:
                raise ConfigError(f"segment {seg.label or seg} overlaps the previous one")
            if start > t:
                pieces.append((t, start, 0j))
            stop = start + seg.duration_ns * 1e-3
            pieces.append((start, stop, seg.complex_drive))
            t = stop
        if self.window_ns > 0:
            pieces.append((t, t + self.window_ns * 1e-3, 0j))
        return pieces

    @property
    def drive_end_us(self) -> float:
        pieces = self.schedule()
        ends = [stop for start, stop, drive in pieces if drive != 0]
        return max(ends, default=0.0)

    @property
    def total_us(self) -> float:
        pieces = self.schedule()
        return pieces[-1][1] if pieces else 0.0


@dataclass
class PulseResult:
    """Stitched trajectory plus the classical cavity amplitude (port mode)."""

    trajectory: Trajectory
    alpha: np.ndarray
    mode: str
    drive_end: float
    meta: dict = field(default_factory=dict)


def run_pulse_program(
    prog: PulseProgram, spec: SystemSpec, mode: str = "port", dephasing: str = "rates", rho0=None
) -> PulseResult:
    """Evolve ``spec`` from the ground state (or ``rho0``) through ``prog``.

    Each piece is integrated separately and the final state of one piece is
    the initial state of the next.  In ``port`` mode the atom amplitude
    ``Omega`` of a segment is converted to a port drive with
    :func:`port_drive_for` and the cavity amplitude is carried continuously
    across piece boundaries.  Observables ``sz``, ``sm`` and ``sp_sm`` are
    sampled every ``prog.sample_ns`` plus at every boundary.
    """
    if mode not in ("port", "direct"):
        raise ConfigError(f"unknown drive mode {mode!r}")
    if spec.Omega_c != 0 or spec.pump_amp != 0:
        raise ConfigError("pulse programs supply the drive themselves; set Omega_c and pump_amp to 0")
    pieces = prog.schedule()
    if not pieces:
        raise ConfigError("empty pulse program")
    if mode == "port" and spec.g_c == 0 and any(d != 0 for _, _, d in pieces):
        raise ConfigError("port drive cannot reach an uncoupled atom; use mode='direct'")
    ops = build_operators(spec.hilbert)
    obs = standard_observables(ops)
    obs.pop("n")  # cavity occupation is frame dependent in port mode
    base = spec.replace(Omega=0.0)
    total = pieces[-1][1]
    n = int(math.floor(total / (prog.sample_ns * 1e-3) + 1e-9))
    grid = np.arange(n + 1) * prog.sample_ns * 1e-3

    rho = ground_state(spec.hilbert) if rho0 is None else np.asarray(rho0, dtype=complex)
    alpha = 0j
    times, alphas, diag = [], [], {"trace": [], "herm": [], "eig": []}
    expect = {k: [] for k in obs}
    for k, (start, stop, drive) in enumerate(pieces):
        inner = grid[(grid > start + 1e-12) & (grid < stop - 1e-12)]
        t_piece = np.concatenate(([start], inner, [stop]))
        if mode == "port":
            Oc = port_drive_for(spec, 1.0) * drive if drive != 0 else 0j
            L = port_driven_liouvillian(base, alpha, start, dephasing, port_drive=Oc)
            a_piece = cavity_amplitude(base, t_piece, alpha, start, port_drive=Oc)
        else:
            Oc = 0j
            H, _ = build_hamiltonian(base, ops, atom_drive=drive)
            L = build_liouvillian(H, base, (), dephasing, ops)
            a_piece = np.zeros(t_piece.size, dtype=complex)
        traj = evolve(L, rho, t_piece, obs, store_states=True)
        keep = slice(0 if k == 0 else 1, None)
        times.append(t_piece[keep])
        alphas.append(np.asarray(a_piece)[keep])
        for name in obs:
            expect[name].append(traj.expect[name][keep])
        diag["trace"].append(traj.trace_deviation[keep])
        diag["herm"].append(traj.hermiticity_deviation[keep])
        diag["eig"].append(traj.min_eigenvalue[keep])
        rho = traj.final_state
        if mode == "port":
            alpha = complex(cavity_amplitude(base, stop, alpha, start, port_drive=Oc))
    full = Trajectory(
        times=np.concatenate(times),
        expect={k: np.concatenate(v) for k, v in expect.items()},
        trace_deviation=np.concatenate(diag["trace"]),
        hermiticity_deviation=np.concatenate(diag["herm"]),
        min_eigenvalue=np.concatenate(diag["eig"]),
        states=rho[None],
    )
    return PulseResult(full, np.concatenate(alphas), mode, prog.drive_end_us, {"pieces": len(pieces)})
