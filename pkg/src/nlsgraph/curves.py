"""Zero sets of the dispersion determinant in the (lambda, t)-plane.

Curves are traced by pseudo-arclength continuation in the normalized
coordinates (lambda / lambda_scale, t).  Near the corner (0, 1), where the
lambda-derivative of D vanishes, t is solved as a function of lambda instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import CorrectorDiverged, InsufficientPoints, InterpolationOutOfRange, SeedNotACrossing
from .spectral import dispersion_det

CORRECTOR_TOL = 1e-9
H_MIN, H_MAX = 1e-5, 0.05
FD_REL = 1e-6
SEED_TOL = 1e-6


@dataclass(frozen=True)
class SegmentRoot:
    root: float
    bracket_width: float
    tangential: bool = False


@dataclass
class EigenCurve:
    points: np.ndarray
    residuals: np.ndarray
    tangents: np.ndarray
    seed: tuple
    status: str = "complete"
    corrector_histories: list = field(default_factory=list)


def strip_bound(profile, t_max: float = 1.0) -> float:
    """sup over t <= t_max of ||V_t|| / t^2, from the profile on [0, t_max * l_i]."""
    worst = abs(profile.beta)
    for i, ell in enumerate(profile.lengths):
        x = np.linspace(0.0, min(t_max, profile.extension) * ell, 2001)
        q = np.abs(profile.phi(i, x)) ** (2 * profile.p)
        worst = max(worst, np.max(np.abs((2 * profile.p + 1) * q + profile.beta)), np.max(np.abs(q + profile.beta)))
    return float(worst)


def default_lambda_inf(profile) -> float:
    return 1.5 * strip_bound(profile)


class Determinant:
    """D(lambda, t) for a fixed profile and graph, with evaluation counting."""

    def __init__(self, profile, graph, func=None):
        self.profile = profile
        self.graph = graph
        self.func = func or (lambda lam, t: dispersion_det(lam, t, profile, graph))
        self.calls = 0

    def __call__(self, lam, t):
        self.calls += 1
        return self.func(lam, t)


def crossings_on_segment(axis: str, fixed: float, rng, profile=None, graph=None, n: int = 400,
                         tol: float = 1e-10, dip_tol: float = 1e-6, det=None) -> list:
    """Zeros of D on the segment {axis varies in rng, other coordinate = fixed}.

    Sign changes on an n-point grid are refined by Brent's method.  Interior
    local minima of |D| below dip_tol without a sign change are returned with
    tangential=True and are not crossings in the counting sense.
    """
    a, b = float(rng[0]), float(rng[1])
    if not b > a:
        raise ValueError("segment range must be nondegenerate")
    det = det or Determinant(profile, graph)
    if axis == "lambda":
        f = lambda s: det(s, fixed)
    elif axis == "t":
        f = lambda s: det(fixed, s)
    else:
        raise ValueError("axis must be 'lambda' or 't'")
    s = np.linspace(a, b, n)
    d = np.array([f(x) for x in s])
    out = []
    for k in range(n - 1):
        if d[k] == 0.0:
            out.append(SegmentRoot(float(s[k]), 0.0))
        elif d[k] * d[k + 1] < 0:
            r = brentq(f, s[k], s[k + 1], xtol=tol * max(1.0, abs(s[k])), rtol=1e-15)
            out.append(SegmentRoot(float(r), float(s[k + 1] - s[k])))
    if d[-1] == 0.0:
        out.append(SegmentRoot(float(s[-1]), 0.0))
    ad = np.abs(d)
    for k in range(1, n - 1):
        if ad[k] < dip_tol and ad[k] <= ad[k - 1] and ad[k] <= ad[k + 1] and d[k - 1] * d[k + 1] > 0 and d[k] != 0:
            out.append(SegmentRoot(float(s[k]), float(s[k + 1] - s[k - 1]), tangential=True))
    return sorted(out, key=lambda r: r.root)


class _Normalized:
    """D as a function of z = (lambda / scale, t) with a central-difference gradient."""

    def __init__(self, det, scale):
        self.det = det
        self.scale = scale

    def value(self, z):
        return self.det(z[0] * self.scale, z[1])

    def grad(self, z):
        g = np.zeros(2)
        for k in range(2):
            h = FD_REL * max(1.0, abs(z[k]))
            e = np.zeros(2)
            e[k] = h
            g[k] = (self.value(z + e) - self.value(z - e)) / (2 * h)
        return g


def _tangent(grad, prev=None, direction=1):
    tau = np.array([-grad[1], grad[0]])
    tau /= np.linalg.norm(tau)
    if prev is not None:
        if tau @ prev < 0:
            tau = -tau
    elif direction < 0:
        tau = -tau
    return tau


def _correct(nd, z_pred, tau, max_iter=5):
    """Newton on (D(z) = 0, tau . (z - z_pred) = 0); returns (z, history, ok)."""
    z = z_pred.copy()
    try:
        hist = [abs(nd.value(z))]
    except InterpolationOutOfRange:
        return z, [np.inf], False
    for _ in range(max_iter):
        try:
            g = nd.grad(z)
            jac = np.array([g, tau])
            rhs = -np.array([nd.value(z), tau @ (z - z_pred)])
            dz = np.linalg.solve(jac, rhs)
            z = z + dz
            hist.append(abs(nd.value(z)))
        except (np.linalg.LinAlgError, InterpolationOutOfRange):
            return z, hist, False
        if hist[-1] < CORRECTOR_TOL and np.linalg.norm(dz) < 1e-9:
            return z, hist, True
    return z, hist, hist[-1] < CORRECTOR_TOL


def _in_bounds(z, bounds, scale):
    (l0, l1), (t0, t1) = bounds
    return l0 <= z[0] * scale <= l1 and t0 <= z[1] <= t1


def trace_curve(seed, step: float, bounds, profile=None, graph=None, max_length: float = 10.0,
                direction: int = 1, lambda_scale: float | None = None, det=None,
                max_points: int = 2000, h_max: float = H_MAX) -> EigenCurve:
    """Pseudo-arclength continuation of D = 0 from seed.

    bounds is ((lambda_min, lambda_max), (t_min, t_max)); step and the
    arclength limit are measured in (lambda / lambda_scale, t).
    """
    det = det or Determinant(profile, graph)
    if lambda_scale is None:
        lambda_scale = default_lambda_inf(profile)
    nd = _Normalized(det, lambda_scale)
    z = np.array([seed[0] / lambda_scale, seed[1]], dtype=float)
    d0 = abs(nd.value(z))
    if d0 > SEED_TOL:
        raise SeedNotACrossing(f"|D| = {d0:.2e} at the seed exceeds {SEED_TOL:.0e}")
    g = nd.grad(z)
    if not np.all(np.isfinite(g)) or np.linalg.norm(g) == 0:
        raise SeedNotACrossing("gradient of D vanishes at the seed")
    tau0 = _tangent(g, direction=direction)
    z, hist, ok = _correct(nd, z, tau0)
    if not ok:
        raise SeedNotACrossing(f"seed is not on D = 0 (|D| = {abs(nd.value(z)):.2e})")
    pts, res, tans, hists = [z.copy()], [hist[-1]], [], [hist]
    tau = _tangent(nd.grad(z), direction=direction)
    tans.append(tau)
    h = float(np.clip(step, H_MIN, h_max))
    length = 0.0
    status = "max_points"
    while len(pts) < max_points:
        if length >= max_length:
            status = "max_length"
            break
        z_pred = z + h * tau
        z_new, hist, ok = _correct(nd, z_pred, tau)
        if not ok or np.linalg.norm(z_new - z) > 2 * h:
            h *= 0.5
            if h < H_MIN:
                status = "corrector_failed"
                break
            continue
        if not _in_bounds(z_new, bounds, lambda_scale):
            status = "bounds"
            break
        length += np.linalg.norm(z_new - z)
        tau = _tangent(nd.grad(z_new), prev=tau)
        z = z_new
        pts.append(z.copy())
        res.append(hist[-1])
        tans.append(tau)
        hists.append(hist)
        if len(hist) <= 3:
            h = min(1.5 * h, h_max)
    points = np.array(pts)
    points[:, 0] *= lambda_scale
    return EigenCurve(points, np.array(res), np.array(tans), (float(seed[0]), float(seed[1])), status, hists)


def solve_t_at_lambda(det, lam: float, t_guess: float, tol: float = 1e-14, max_iter: int = 50) -> float:
    """Secant iteration for D(lam, t) = 0 in t."""
    t0, t1 = t_guess, t_guess + 1e-6
    f0, f1 = det(lam, t0), det(lam, t1)
    for _ in range(max_iter):
        if f1 == f0:
            break
        t2 = t1 - f1 * (t1 - t0) / (f1 - f0)
        t0, f0 = t1, f1
        t1, f1 = t2, det(lam, t2)
        if abs(t1 - t0) < tol:
            return t1
    if abs(f1) < CORRECTOR_TOL:
        return t1
    raise CorrectorDiverged(f"t-solve failed at lambda = {lam}", last_point=(lam, t1))


def solve_lambda_at_t(det, t: float, lam_guess: float, tol: float = 1e-12, max_iter: int = 50) -> float:
    l0, l1 = lam_guess, lam_guess * (1 + 1e-6) + 1e-6
    f0, f1 = det(l0, t), det(l1, t)
    for _ in range(max_iter):
        if f1 == f0:
            break
        l2 = l1 - f1 * (l1 - l0) / (f1 - f0)
        l0, f0 = l1, f1
        l1, f1 = l2, det(l2, t)
        if abs(l1 - l0) < tol * max(1.0, abs(l1)):
            return l1
    if abs(f1) < CORRECTOR_TOL:
        return l1
    raise CorrectorDiverged(f"lambda-solve failed at t = {t}", last_point=(l1, t))


def corner_curve(profile=None, graph=None, delta: float | None = None, n_side: int = 24, det=None,
                 lambda_scale: float | None = None) -> EigenCurve:
    """Points of the curve through (0, 1) with |lambda| in [delta, 10 delta].

    t is solved at fixed lambda by secant iteration starting from t = 1,
    continuing from the previous solution.  The default delta is 1e-4 of the
    strip bound.
    """
    det = det or Determinant(profile, graph)
    if lambda_scale is None:
        lambda_scale = default_lambda_inf(profile)
    if delta is None:
        delta = 1e-4 * lambda_scale
    lams = np.linspace(delta, 10 * delta, n_side)
    pts = []
    for sgn in (-1, 1):
        t = 1.0
        for lam in lams:
            t = solve_t_at_lambda(det, sgn * lam, t)
            pts.append((sgn * lam, t))
    pts.sort()
    points = np.array(pts)
    res = np.array([abs(det(l, t)) for l, t in points])
    tangents = np.gradient(points, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]
    return EigenCurve(points, res, tangents, (0.0, 1.0), "corner")


def _parabola_fit(lam, t):
    v = np.vander(lam, 3)
    coef, res, *_ = np.linalg.lstsq(v, t, rcond=None)
    fit = v @ coef
    return coef, float(np.sqrt(np.mean((fit - t) ** 2)))


def concavity_at_seed(curve: EigenCurve, delta: float | None = None):
    """(t''(0), error estimate, t'(0)) from symmetric parabola fits.

    Fits t = c0 + c1 lam + c2 lam^2 on |lam| <= W and |lam| <= W/2, where W is
    the largest |lam| available, and Richardson-extrapolates 2 c2 (the fit
    error is O(W^2)).
    """
    lam, t = curve.points[:, 0], curve.points[:, 1]
    w = np.max(np.abs(lam))
    if delta is None:
        delta = np.min(np.abs(lam[lam != 0])) if np.any(lam != 0) else 0.0
    big = np.abs(lam) <= w
    small = np.abs(lam) <= w / 2
    for mask in (big, small):
        if np.sum(mask & (lam > 0)) < 2 or np.sum(mask & (lam < 0)) < 2:
            raise InsufficientPoints("need at least two points on each side of lambda = 0 per window")
    (cb, rb), (cs, rs) = _parabola_fit(lam[big], t[big]), _parabola_fit(lam[small], t[small])
    tpp_b, tpp_s = 2 * cb[0], 2 * cs[0]
    tpp = (4 * tpp_s - tpp_b) / 3
    err = abs(tpp - tpp_s) + 2 * (rb + rs) / max(w / 2, 1e-300) ** 2
    tp = (4 * cs[1] - cb[1]) / 3
    return float(tpp), float(err), float(tp)


def fd_slope(det, lam0: float, t0: float, lambda_scale: float, h: float = 1e-4):
    """Central finite-difference dlambda/dt of the zero set through (lam0, t0).

    The curve is parameterized by whichever normalized coordinate its tangent
    favors; nearby points are found by secant iteration.
    """
    nd = _Normalized(det, lambda_scale)
    g = nd.grad(np.array([lam0 / lambda_scale, t0]))
    if abs(g[0]) >= abs(g[1]):
        # |dD/d(lambda/scale)| dominates: lambda = lambda(t)
        lp = solve_lambda_at_t(det, t0 + h, lam0)
        lm = solve_lambda_at_t(det, t0 - h, lam0)
        return (lp - lm) / (2 * h)
    dl = h * lambda_scale
    tp = solve_t_at_lambda(det, lam0 + dl, t0)
    tm = solve_t_at_lambda(det, lam0 - dl, t0)
    dtdl = (tp - tm) / (2 * dl)
    return np.inf if dtdl == 0 else 1.0 / dtdl


def distance_to_curve(point, curve: EigenCurve, det, lambda_scale: float) -> float:
    """Distance in normalized coordinates from point to the zero set near curve.

    The nearest polyline segment gives a foot point, which is projected onto
    D = 0 along the segment normal.
    """
    z = np.array([point[0] / lambda_scale, point[1]])
    pts = curve.points.copy()
    pts[:, 0] /= lambda_scale
    best, foot, normal = np.inf, None, None
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        s = np.clip((z - a) @ d / (d @ d), 0, 1)
        q = a + s * d
        dist = np.linalg.norm(z - q)
        if dist < best:
            best, foot = dist, q
            normal = np.array([-d[1], d[0]]) / np.linalg.norm(d)
    nd = _Normalized(det, lambda_scale)
    f = lambda s: nd.value(foot + s * normal)
    s0, s1 = 0.0, 1e-7
    f0, f1 = f(s0), f(s1)
    for _ in range(40):
        if f1 == f0:
            break
        s2 = s1 - f1 * (s1 - s0) / (f1 - f0)
        s0, f0, s1, f1 = s1, f1, s2, f(s2)
        if abs(s1 - s0) < 1e-14:
            break
    return float(np.linalg.norm(z - (foot + s1 * normal)))


def _join(back: EigenCurve, fwd: EigenCurve) -> EigenCurve:
    """One polyline from a backward and a forward trace sharing a seed."""
    return EigenCurve(
        np.vstack([back.points[:0:-1], fwd.points]),
        np.concatenate([back.residuals[:0:-1], fwd.residuals]),
        np.vstack([-back.tangents[:0:-1], fwd.tangents]),
        fwd.seed,
        f"{back.status}/{fwd.status}",
        back.corrector_histories[:0:-1] + fwd.corrector_histories,
    )


def trace_all(det, window, lambda_scale: float, n_lines: int = 7, n_scan: int = 200,
              step: float = 0.02, max_length: float = 20.0, skip: float = 3 * H_MAX,
              h_max: float = 0.02, max_points: int = 400) -> list:
    """Trace every curve of D = 0 that meets a seed line.

    Seed lines are n_lines interior horizontal lines plus the window edges
    t = t_min, t = t_max and lambda = lambda_max, so every curve leaving the
    window is found.  window is ((lambda_min, lambda_max), (t_min, t_max)).
    Seeds within skip (normalized coordinates) of an already traced curve are
    not retraced, so each curve is reported once.  Seeds are visited in a
    fixed order.
    """
    (l0, l1), (t0, t1) = window
    seeds = []
    for t in np.linspace(t0, t1, n_lines + 2):
        seeds += [(r.root, float(t)) for r in crossings_on_segment("lambda", float(t), (l0, l1), det=det, n=n_scan)
                  if not r.tangential]
    seeds += [(float(l1), r.root) for r in crossings_on_segment("t", float(l1), (t0, t1), det=det, n=n_scan)
              if not r.tangential]
    curves = []
    kw = dict(max_length=max_length, lambda_scale=lambda_scale, det=det, h_max=h_max, max_points=max_points)
    for seed in seeds:
        z = np.array([seed[0] / lambda_scale, seed[1]])
        if any(np.min(np.linalg.norm(c.points / [lambda_scale, 1.0] - z, axis=1)) < skip for c in curves):
            continue
        try:
            fwd = trace_curve(seed, step, window, direction=1, **kw)
            back = trace_curve(seed, step, window, direction=-1, **kw)
        except SeedNotACrossing:
            continue
        curves.append(_join(back, fwd))
    return curves
