"""Real eigenvalue curves in the (lambda, t)-plane for the b = 5 and b = 1 waves.

Zeros of the shooting determinant D(lambda, t) are real eigenvalues t^2 lambda
of the rescaled problem on the graph shrunk by t.  Each curve starts at the
conjugate point on lambda = 0 and ends at the corner (0, 1).  The concavity
at the corner flips sign between b = 5 and b = 1.
"""

from __future__ import annotations

import sys

from nlsgraph.cli import svg_plot
from nlsgraph.curves import Determinant, concavity_at_seed, corner_curve, default_lambda_inf, trace_all
from nlsgraph.spectral import graph_for
from nlsgraph.standing_wave import WaveParams, integrate_profile

A = 0.8660
out = sys.argv[1] if len(sys.argv) > 1 else "."

for b, lam_max in ((5, 200.0), (1, 100.0)):
    prof = integrate_profile(WaveParams(-1.0, 3.0, 1.0, (-A - b, -A - 3, 2 * A + 3 + b)), 0.0)
    graph = graph_for(prof)
    det = Determinant(prof, graph)
    curves = trace_all(det, ((-5.0, lam_max), (0.02, 1.05)), lam_max, n_lines=3, n_scan=80)
    tpp, err, tp = concavity_at_seed(corner_curve(prof, graph, lambda_scale=default_lambda_inf(prof)))
    print(f"b = {b}: {len(curves)} curve(s), {det.calls} determinant calls")
    print(f"  t'(0) = {tp:.2e}, t''(0) = {tpp:.4e} +/- {err:.1e}")
    for c in curves:
        print(f"  from {c.points[0].round(3)} to {c.points[-1].round(3)} ({len(c.points)} points)")
    svg_plot(f"{out}/curves_b{b}.svg", [c.points for c in curves], (-5.0, lam_max), (0.0, 1.05),
             title=f"b = {b}")
