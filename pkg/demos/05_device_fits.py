"""Device characterization fits.

Synthetic transmon spectroscopy with 1 MHz noise is fitted for E_J and E_C,
and a noiseless reflection trace is fitted for the waveguide coupling
efficiency eta = gamma_e / (2 gamma_2).

Run with ``python3 demos/05_device_fits.py``.
"""

from resfluor.device import TransmonParams, fit_reflection, fit_transmon, transmon_transition
from resfluor.hilbert import SystemSpec
from resfluor.scenarios.runner import synthetic_reflection, synthetic_transmon

print(f"E01 at zero flux: {transmon_transition(TransmonParams(), 0.0):.3f} GHz")
rep = fit_transmon(*synthetic_transmon(noise=0.001, seed=1))
for k in ("E_J", "E_C"):
    print(f"{k} = {rep.params[k]:.4f} +- {rep.uncertainties[k]:.4f} GHz")

spec = SystemSpec()
dw, r = synthetic_reflection(spec)
refl = fit_reflection(dw, r, gamma_1=spec.gamma_1)
print(f"eta = {refl.params['eta']:.6f} (gamma_e {refl.params['gamma_e']:.4f}, gamma_2 {refl.params['gamma_2']:.4f} MHz)")
