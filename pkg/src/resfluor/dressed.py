"""Closed-form doubly-dressed-state theory.

The drive dresses the atom into ``|1~>`` (energy ``+W``) and ``|2~>``
(energy ``-W``) with ``W = (Omega/2) sqrt(1 + delta^2)``, ``delta = Delta_a/Omega``.
When the cavity sits at ``omega_d - 2W`` the pair ``|1~, n>``, ``|2~, n-1>`` is
degenerate and the cavity coupling ``g_1 = g_c cos^2(phi)`` splits it into
``|N, +-n>`` with energies ``N omega_d - (2n-1) W +- g_1 sqrt(n)``.

Rates, linewidths and populations follow the perturbative secular treatment;
``gamma`` is the atomic relaxation rate ``gamma_1`` and pure dephasing is not
part of this branch.  All quantities are in 2*pi*MHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlation import SpectrumResult, find_spectrum_peaks
from .errors import ConfigError, SubspaceError
from .hilbert import HilbertSpec, SystemSpec, build_operators


@dataclass(frozen=True)
class DressedParams:
    """Drive, detuning, coupling and rates (2*pi*MHz)."""

    Omega: float = 37.0
    Delta_a: float = 0.0
    g_c: float = 7.5
    gamma: float = 3.6
    kappa: float = 1.5

    def __post_init__(self):
        if not self.Omega > 0:
            raise ConfigError("dressed expansion needs Omega > 0")
        if abs(self.Delta_a / self.Omega) >= 1:
            raise ConfigError("dressed expansion needs |Delta_a/Omega| < 1")
        if self.gamma < 0 or self.kappa < 0:
            raise ConfigError("rates must be non-negative")

    @classmethod
    def from_spec(cls, spec: SystemSpec) -> "DressedParams":
        return cls(spec.Omega, spec.delta_a, spec.g_c, spec.gamma_1, spec.kappa)

    @property
    def delta(self) -> float:
        return self.Delta_a / self.Omega

    @property
    def cos2phi(self) -> float:
        return 0.5 - self.Delta_a / (2 * self.Omega)

    @property
    def sin2phi(self) -> float:
        return 1.0 - self.cos2phi

    @property
    def Omega_tilde(self) -> float:
        return 0.5 * self.Omega * math.sqrt(1 + self.delta**2)

    @property
    def g1(self) -> float:
        return self.g_c * self.cos2phi

    @property
    def Delta_0(self) -> float:
        """Cavity detuning below the atom at resonance, ``2 W``."""
        return 2 * self.Omega_tilde


def _sign(n_signed: int) -> int:
    return 0 if n_signed == 0 else (1 if n_signed > 0 else -1)


def doubly_dressed_energy(params: DressedParams, N: int, n_signed: int, omega_d: float = 0.0) -> float:
    """``E_{N, +-n} = N omega_d - (2n - 1) W +- g_1 sqrt(n)``; ``n = 0`` gives ``N omega_d + W``."""
    n = abs(int(n_signed))
    return N * omega_d - (2 * n - 1) * params.Omega_tilde + _sign(n_signed) * params.g1 * math.sqrt(n)


# ---------------------------------------------------------------- numeric check


def _dressed_atom_vectors(params: DressedParams):
    """``|1~>`` and ``|2~>`` in the (g, e) basis from the same angle convention."""
    c = math.sqrt(params.cos2phi)
    s = math.sqrt(params.sin2phi)
    return np.array([c, s]), np.array([s, -c])


def manifold_vectors(params: DressedParams, n: int, cavity_levels: int) -> np.ndarray:
    """Orthonormal basis (columns) of the degenerate pair of manifold ``n``."""
    one, two = _dressed_atom_vectors(params)
    fock = np.eye(cavity_levels)
    if n == 0:
        return np.kron(one, fock[0])[:, None]
    return np.column_stack([np.kron(one, fock[n]), np.kron(two, fock[n - 1])])


def numeric_crosscheck(
    params: DressedParams, n_max: int = 2, cavity_levels: int | None = None, overlap_min: float = 0.5
) -> float:
    """Largest ``|numeric - analytic|`` level deviation for manifolds ``n <= n_max``.

    The rotating-frame Hamiltonian with cavity detuning ``-2W`` is diagonalized
    in full.  Each analytic level is matched to the eigenstate with the largest
    weight inside its degenerate pair, and matched eigenvalues are sorted to
    pair with the ``-`` and ``+`` branches.

    Raises
    ------
    SubspaceError
        If an eigenstate with weight ``overlap_min`` in a manifold cannot be
        found, or two levels claim the same eigenstate.
    """
    nc = cavity_levels or n_max + 6
    space = HilbertSpec(cavity_levels=nc)
    ops = build_operators(space)
    H = (
        -params.Delta_0 * ops.n
        + 0.5 * params.Delta_a * ops.sz
        + params.g_c * (ops.adag @ ops.sm + ops.a @ ops.sp)
        + 0.5 * params.Omega * (ops.sp + ops.sm)
    )
    evals, evecs = np.linalg.eigh(H)
    used = set()
    worst = 0.0
    for n in range(n_max + 1):
        Q = manifold_vectors(params, n, nc)
        weight = np.sum(np.abs(Q.T @ evecs) ** 2, axis=0)
        k = 1 if n == 0 else 2
        idx = np.argsort(weight)[::-1][:k]
        if np.any(weight[idx] < overlap_min) or used.intersection(idx.tolist()):
            raise SubspaceError(f"could not identify manifold n = {n} among numeric levels")
        used.update(idx.tolist())
        numeric = np.sort(evals[idx])
        signs = [0] if n == 0 else [-n, n]
        analytic = np.sort([doubly_dressed_energy(params, 0, s) for s in signs])
        worst = max(worst, float(np.max(np.abs(numeric - analytic))))
    return worst


# ---------------------------------------------------------------- rates


class UnsupportedTransition(ConfigError):
    """Index combination outside the dressed-state rate table."""


def gamma_rate(params: DressedParams, n: int, n_prime: int, branch: int = 1, branch_prime: int = 1) -> float:
    """Atomic rate ``gamma_{+-n, n'}`` from manifold ``n`` to ``n'`` (one drive photon lower).

    ``branch`` and ``branch_prime`` are the signs of the two states; they are
    ignored for ``n = 0`` states.
    """
    if n < 0 or n_prime < 0:
        raise UnsupportedTransition("n and n' must be non-negative")
    g = params.gamma
    c2, s2 = params.cos2phi, params.sin2phi
    b = 0 if n == 0 else _sign(branch)
    bp = 0 if n_prime == 0 else _sign(branch_prime)
    if n == n_prime:
        if n == 0 or b == -bp:
            return g * s2 * c2
        return 0.0
    if n_prime == n - 1:
        return g / 4 * s2**2 * (1 + (n_prime == 0))
    if n_prime == n + 1:
        return g / 4 * c2**2 * (1 + (n == 0))
    raise UnsupportedTransition(f"no atomic transition between manifolds {n} and {n_prime}")


def kappa_rate(params: DressedParams, n: int, n_prime: int, branch: int = 1, branch_prime: int = 1) -> float:
    """Cavity rate ``kappa |<N, +-n| a^dag |N-1, +-n'>|^2`` from the state vectors.

    ``a^dag`` links ``n' = n - 1`` to ``n``.  With
    ``|N, +-n> = (|1~, n> -+ |2~, n-1>)/sqrt(2)`` the element is ``1/sqrt(2)``
    for ``n' = 0`` and ``(sqrt(n) + s s' sqrt(n-1))/2`` otherwise.
    """
    if n < 0 or n_prime < 0:
        raise UnsupportedTransition("n and n' must be non-negative")
    if n_prime != n - 1:
        raise UnsupportedTransition(f"a^dag does not link manifold {n_prime} to {n}")
    return params.kappa * cavity_matrix_element(n, n_prime, branch, branch_prime) ** 2


def cavity_matrix_element(n: int, n_prime: int, branch: int = 1, branch_prime: int = 1) -> float:
    """``<N, s n| a^dag |N-1, s' n'>`` computed from explicit state vectors."""
    if n_prime != n - 1 or n < 1:
        return 0.0
    nc = n + 2
    fock = np.eye(nc)
    adag = np.diag(np.sqrt(np.arange(1, nc)), -1)
    one, two = np.array([1.0, 0.0]), np.array([0.0, 1.0])  # dressed-atom labels

    def state(m, s):
        if m == 0:
            return np.kron(one, fock[0])
        return (np.kron(one, fock[m]) - _sign(s) * np.kron(two, fock[m - 1])) / math.sqrt(2)

    op = np.kron(np.eye(2), adag)
    return float(state(n, branch) @ op @ state(n_prime, branch_prime))


def printed_kappa_table(n: int, n_prime: int, same_branch: bool) -> float:
    """Coefficient of ``kappa`` as printed in the reference case table (no squares)."""
    if n_prime == 0 and n == 1:
        return 1 / math.sqrt(2)
    if n_prime == n - 1:
        s = 1 if same_branch else -1
        return 0.5 * (math.sqrt(n_prime + 1) + s * math.sqrt(n_prime))
    return 0.0


def kappa_table_discrepancies(params: DressedParams, n_max: int = 5) -> list[tuple[int, int, str, float, float]]:
    """Rows ``(n, n', branches, computed/kappa, printed)`` where the two disagree."""
    rows = []
    for n in range(1, n_max + 1):
        for same in (True, False):
            if n == 1 and not same:
                continue
            computed = cavity_matrix_element(n, n - 1, 1, 1 if same else -1) ** 2
            printed = printed_kappa_table(n, n - 1, same)
            if not math.isclose(computed, printed, rel_tol=1e-12):
                rows.append((n, n - 1, "same" if same else "opposite", computed, printed))
    return rows


def transition_rates(params: DressedParams, n: int, n_prime: int, branch: int = 1, branch_prime: int = 1):
    """``(gamma_{+-n,n'}, kappa_{+-n,n'})``; a channel that does not exist gives 0.

    Raises :class:`UnsupportedTransition` when neither channel links the pair.
    """
    try:
        g = gamma_rate(params, n, n_prime, branch, branch_prime)
    except UnsupportedTransition:
        g = None
    try:
        k = kappa_rate(params, n, n_prime, branch, branch_prime)
    except UnsupportedTransition:
        k = None
    if g is None and k is None:
        raise UnsupportedTransition(f"no transition between manifolds {n} and {n_prime}")
    return (g or 0.0, k or 0.0)


def total_decay(params: DressedParams, n: int) -> float:
    """``Gamma_n``: ``gamma/2 + kappa (2n-1)/2`` for ``n >= 1``, ``gamma cos^2(phi)`` for ``n = 0``."""
    n = abs(int(n))
    if n == 0:
        return params.gamma * params.cos2phi
    return params.gamma / 2 + params.kappa * (2 * n - 1) / 2


def dressed_populations(params: DressedParams, n_max: int = 4) -> dict[int, float]:
    """``Pi_n`` for ``n = -n_max .. n_max`` with ``Pi_{-n} = Pi_n`` and unit total.

    ``Pi_n / Pi_0 = prod_{m=1}^{n} gamma sin^4 / (gamma cos^4 + (2m - 1) kappa)``.
    """
    g, k = params.gamma, params.kappa
    c4, s4 = params.cos2phi**2, params.sin2phi**2
    ratios = [1.0]
    for m in range(1, n_max + 1):
        den = g * c4 + (2 * m - 1) * k
        ratios.append(ratios[-1] * (g * s4 / den if den > 0 else 1.0))
    total = ratios[0] + 2 * sum(ratios[1:])
    pops = {}
    for n, r in enumerate(ratios):
        pops[n] = r / total
        if n:
            pops[-n] = r / total
    return pops


def population_ratio_diagnostics(params: DressedParams) -> dict[str, float]:
    """``Pi_1/Pi_0`` from the product formula next to the alternative ``gamma/(gamma + 2 kappa)``."""
    pops = dressed_populations(params, 1)
    g, k = params.gamma, params.kappa
    return {
        "product_formula": pops[1] / pops[0],
        "alternative_text": g / (g + 2 * k) if g + 2 * k > 0 else 1.0,
    }


# ---------------------------------------------------------------- spectra


def sideband_linewidth(params: DressedParams, n: int) -> float:
    """HWHM of the lines between manifolds ``n`` and ``n + 1``."""
    if n == 0:
        return params.gamma / 2 * (0.5 + params.sin2phi) + params.kappa / 4
    return params.gamma / 2 + n * params.kappa


def _lorentz(x, hwhm):
    return hwhm / (x**2 + hwhm**2)


def analytic_sideband_spectrum(params: DressedParams, n_max: int = 4, freqs=None) -> tuple[SpectrumResult, SpectrumResult]:
    """Right (``+Delta_0``) and left (``-Delta_0``) sideband groups on ``freqs`` (MHz).

    Right group: lines at ``Delta_0 +- g_1 (sqrt(n+1) +- sqrt(n))`` weighted by
    ``gamma_{n,n+1} Pi_n``.  Left group: mirrored positions weighted by
    ``gamma_{n+1,n} Pi_{n+1}``.  Each line is ``(1/(pi gamma)) w G/(x^2 + G^2)``
    with ``G`` from :func:`sideband_linewidth`; for ``n = 0`` the two inner
    signs coincide and the line pair is counted once.
    """
    from .correlation import frequency_grid

    f = frequency_grid() if freqs is None else np.asarray(freqs, dtype=float)
    pops = dressed_populations(params, n_max + 1)
    g1 = params.g1
    D0 = params.Delta_0
    right = np.zeros_like(f)
    left = np.zeros_like(f)
    norm = 1.0 / (math.pi * params.gamma) if params.gamma > 0 else 1.0
    for n in range(n_max + 1):
        G = sideband_linewidth(params, n)
        inner = (1,) if n == 0 else (1, -1)
        w_r = gamma_rate(params, n, n + 1) * pops[n]
        w_l = gamma_rate(params, n + 1, n) * pops[n + 1]
        for outer in (1, -1):
            for s in inner:
                off = outer * g1 * (math.sqrt(n + 1) + s * math.sqrt(n))
                right += norm * w_r * G * _lorentz(f - D0 - off, G) / 1.0
                left += norm * w_l * G * _lorentz(f + D0 - off, G) / 1.0
    norm_text = "(1/(pi gamma)) sum w G/(x^2+G^2)"
    return (
        SpectrumResult(f, right, find_spectrum_peaks(f, right), norm_text, {"group": "right"}),
        SpectrumResult(f, left, find_spectrum_peaks(f, left), norm_text, {"group": "left"}),
    )


def analytic_asymmetry(params: DressedParams, n_max: int = 4) -> float:
    """Ratio of integrated right to left sideband weights (closed form)."""
    pops = dressed_populations(params, n_max + 1)
    right = left = 0.0
    for n in range(n_max + 1):
        lines = 2 if n == 0 else 4
        right += lines * gamma_rate(params, n, n + 1) * pops[n]
        left += lines * gamma_rate(params, n + 1, n) * pops[n + 1]
    return right / left


@dataclass(frozen=True)
class PredictedLine:
    """One dressed-state transition."""

    label: str
    offset: float
    linewidth: float
    weight: float
    merged: bool = False


@dataclass
class MultipletPrediction:
    regime: str
    lines: list[PredictedLine]

    @property
    def offsets(self) -> np.ndarray:
        return np.array([line.offset for line in self.lines])


def _line(params, pops, upper, lower, label):
    """Transition ``|N, upper> -> |N-1, lower>``; FWHM is ``Gamma_upper + Gamma_lower``."""
    offset = doubly_dressed_energy(params, 1, upper) - doubly_dressed_energy(params, 0, lower)
    n, m = abs(upper), abs(lower)
    try:
        rate = gamma_rate(params, n, m, upper or 1, lower or 1)
    except UnsupportedTransition:
        rate = 0.0
    width = total_decay(params, n) + total_decay(params, m)
    return PredictedLine(label, offset, width, rate * pops.get(upper, 0.0))


def predict_peaks(params: DressedParams, regime: str = "vacuum") -> MultipletPrediction:
    """Dressed-state emission lines relative to the drive (MHz).

    ``vacuum``: the seven lines among manifolds ``n <= 1``.  ``pumped`` adds the
    lines reaching ``n = 2``: ``+-Delta_0 +- (sqrt 2 +- 1) g_1`` and the central
    ``+-2 sqrt 2 g_1``.  Offsets are differences of
    :func:`doubly_dressed_energy` across adjacent manifolds.  ``merged`` marks a
    line lying within its FWHM of another line.
    """
    if regime not in ("vacuum", "pumped"):
        raise ConfigError("regime must be 'vacuum' or 'pumped'")
    pops = dressed_populations(params, 3)
    lines = [
        _line(params, pops, 0, 0, "0->0"),
        _line(params, pops, 1, -1, "+1->-1"),
        _line(params, pops, -1, 1, "-1->+1"),
        _line(params, pops, 0, 1, "0->+1"),
        _line(params, pops, 0, -1, "0->-1"),
        _line(params, pops, 1, 0, "+1->0"),
        _line(params, pops, -1, 0, "-1->0"),
    ]
    if regime == "pumped":
        for up in (1, -1):
            for lo in (2, -2):
                lines.append(_line(params, pops, up, lo, f"{up:+d}->{lo:+d}"))
                lines.append(_line(params, pops, lo, up, f"{lo:+d}->{up:+d}"))
        lines.append(_line(params, pops, 2, -2, "+2->-2"))
        lines.append(_line(params, pops, -2, 2, "-2->+2"))
    if params.g_c == 0:
        # uncoupled: the manifold pairs collapse onto the three Mollow lines
        seen = {}
        for line in lines:
            seen.setdefault(round(line.offset, 9), line)
        lines = list(seen.values())
    out = []
    for i, line in enumerate(lines):
        merged = any(
            j != i and abs(line.offset - other.offset) < line.linewidth for j, other in enumerate(lines)
        )
        out.append(PredictedLine(line.label, line.offset, line.linewidth, line.weight, merged))
    out.sort(key=lambda l: l.offset)
    return MultipletPrediction(regime, out)
