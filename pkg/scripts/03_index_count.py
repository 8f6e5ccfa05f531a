"""Counting positive real eigenvalues through the Maslov index.

The box [eps0, 1] x [0, lambda_inf] is traversed counterclockwise; its sides
contribute signed crossing counts that add to zero.  The bottom side t = eps0
and the far side lambda = lambda_inf have no crossings, lambda = 0 picks up the
conjugate points, and the corner term c records the concavity at (0, 1).  What
remains on t = 1 counts the positive real eigenvalues: at least
|p_c - q_c - c|.
"""

from __future__ import annotations

import time

from nlsgraph.index import spectral_index_report
from nlsgraph.spectral import graph_for
from nlsgraph.standing_wave import WaveParams, integrate_profile

A = 0.8660

for b in (5, 3, 1):
    prof = integrate_profile(WaveParams(-1.0, 3.0, 1.0, (-A - b, -A - 3, 2 * A + 3 + b)), 0.0)
    t0 = time.perf_counter()
    rep = spectral_index_report(prof, graph_for(prof))
    m = rep.maslov
    print(f"b = {b} ({time.perf_counter() - t0:.1f} s)")
    print(f"  p_c = {rep.p_c}, q_c = {rep.q_c}, t''(0) = {rep.tpp:.3e}, c = {rep.corner_c}, bound = {rep.bound}")
    print(f"  sides: bottom {m['gamma1']}, lambda=0 {m['gamma2']}, corner {m['corner']}, "
          f"t=1 {m['gamma3']}, far {m['gamma4']}; sum {m['sum']}")
    print(f"  positive real eigenvalues {rep.positive_real_eigs}; verdict {rep.vk_verdict}")
