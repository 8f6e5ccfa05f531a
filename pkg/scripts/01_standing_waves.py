"""Standing waves on a three-edge star and Dirichlet arches on an interval.

phi'' - phi + phi^7 = 0 on each edge, phi(0) = 1 at the center, and the edge
slopes (-a - b, -a - 3, 2a + 3 + b) sum to zero (Kirchhoff).  Each edge ends
at the first zero of phi, so b controls the edge lengths.
"""

from __future__ import annotations

import numpy as np

from nlsgraph.standing_wave import WaveParams, half_period, integrate_profile, interval_wave

A = 0.8660

for b in (5, 3, 1):
    prof = integrate_profile(WaveParams(-1.0, 3.0, 1.0, (-A - b, -A - 3, 2 * A + 3 + b)), 0.0)
    e = [float(prof.energies(i, [0.0])[0]) for i in range(3)]
    print(f"b = {b}: lengths {np.round(prof.lengths, 6)}  energies {np.round(e, 4)}")

# arches of phi'' - 2 phi + phi^{2p+1} = 0 vanishing at both ends
for p, target in ((3.0, 3.28418), (1.0, 1.09868)):
    prof = interval_wave(-2.0, p, target)
    amp = float(prof.phi(0, [0.5 * target])[0])
    print(f"p = {p:.0f}: amplitude {amp:.8f}  half-period {half_period(-2.0, p, amp):.8f}")
