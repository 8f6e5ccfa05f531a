"""Operator identities for block operators built from -d^2/dx^2 on an interval.

With constant coefficients the resolvent has a closed-form kernel, so the
Green identity, resolvent differences between boundary conditions, first-order
expansions in a parameter, eigenvalue derivatives and Riesz projections can be
checked to near machine precision.
"""

from __future__ import annotations

import time

from nlsgraph.resolvent_lab import identity_suite

t0 = time.perf_counter()
rows = identity_suite(seed=0)
width = max(len(r["check_name"]) for r in rows)
for r in rows:
    flag = "ok" if r["pass"] else "FAIL"
    print(f"{r['check_name']:<{width}}  {r['residual']:.3e}  (tol {r['tolerance']:.1e})  {flag}")
print(f"{sum(r['pass'] for r in rows)}/{len(rows)} passed in {time.perf_counter() - t0:.1f} s")
