"""Rates and populations of the doubly-dressed ladder.

Everything here is closed form: transition rates from dressed-state matrix
elements of sigma_- and of the cavity field, the resulting steady populations
of the ladder, and the linewidths of the lines between neighbouring manifolds.

Run with ``python3 demos/03_dressed_state_rates.py``.
"""

from resfluor.dressed import (
    DressedParams,
    dressed_populations,
    gamma_rate,
    kappa_rate,
    kappa_table_discrepancies,
    population_ratio_diagnostics,
    sideband_linewidth,
)

p = DressedParams()
print("atomic rates gamma(n -> n') for the + branch, MHz")
for n in range(4):
    row = [gamma_rate(p, n, m) if abs(n - m) <= 1 else 0.0 for m in range(4)]
    print("  " + "  ".join(f"{x:6.3f}" for x in row))
print("cavity rates kappa(n -> n-1), same and opposite branch, MHz")
for n in range(1, 5):
    opp = kappa_rate(p, n, n - 1, 1, -1) if n > 1 else float("nan")
    print(f"  n={n}: {kappa_rate(p, n, n - 1):6.3f}  {opp:6.3f}")
pops = dressed_populations(p, 4)
print("populations Pi_n:", {n: round(v, 4) for n, v in sorted(pops.items()) if n >= 0})
print("Pi_1/Pi_0 from the recurrence and the alternative reading:", population_ratio_diagnostics(p))
print("sideband HWHM for n = 0..3:", [round(sideband_linewidth(p, n), 3) for n in range(4)])
print("cavity-table rows that differ from the computed matrix elements (computed, printed):")
for row in kappa_table_discrepancies(p):
    print("  ", row)
