"""Eigenvalue curves when the boundary condition rotates instead of the domain.

On one interval the condition at the right end turns from Dirichlet (t = 0)
through Neumann (t = 1) back to Dirichlet (t = 2).  With zero potentials there
are no nonzero real eigenvalues; with an arch of a standing wave as the
potential, real eigenvalue pairs appear and move as t varies.
"""

from __future__ import annotations

import numpy as np

from nlsgraph.curves import crossings_on_segment
from nlsgraph.spectral import interval_det
from nlsgraph.standing_wave import WaveProfile, interval_wave

cases = {
    "zero potential on [0, pi]": (WaveProfile.flat([np.pi], beta=0.0), False),
    "p = 3 arch, right end rotating": (interval_wave(-2.0, 3.0, 3.28418), False),
    "p = 1 arch, both ends rotating": (interval_wave(-2.0, 1.0, 1.09868), True),
}

for name, (prof, both) in cases.items():
    print(name)
    det = lambda lam, t: interval_det(lam, t, prof, both)
    for t in (0.25, 0.75, 1.25, 1.75):
        roots = crossings_on_segment("lambda", t, (0.05, 20.0), det=det, n=120)
        print(f"  t = {t}: lambda = {[round(r.root, 4) for r in roots if not r.tangential]}")
