"""Self-consistent permittivity of the cold gas, density by density.

Walks the detuning axis for a few densities, prints the negative-Re(eps)
window once it opens, and locates the critical density where it first
appears.  Run: python3 demos/01_permittivity_and_forbidden_zone.py
"""

import numpy as np

from coldscatter.permittivity import (
    coupling_strength,
    critical_density,
    negative_window,
    permittivity_grid,
)

deltas = np.linspace(-10.0, 10.0, 2001)

for eta in (0.02, 0.09, 0.5):
    eps = permittivity_grid(deltas, coupling_strength(eta), warn_ambiguous=False)
    i0 = np.argmin(np.abs(deltas))
    print(f"eta = {eta}")
    print(f"  eps(0)      = {eps[i0]:.4f}")
    print(f"  max Im(eps) = {eps.imag.max():.4f} at delta = {deltas[eps.imag.argmax()]:+.3f}")
    window = negative_window(eta, deltas)
    if window is None:
        print("  no negative-permittivity window")
    else:
        print(f"  Re(eps) < 0 for delta in ({window[0]:+.4f}, {window[1]:+.4f})")

eta_c = critical_density()
print(f"\ncritical density eta_c = {eta_c:.4f}  (window first opens here)")
