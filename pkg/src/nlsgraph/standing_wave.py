"""Standing-wave profiles phi'' + beta phi + |phi|^{2p} phi = 0 on star graphs.

Each edge is integrated from the central vertex with DOP853 until the first
zero of phi; that zero defines the edge length.  The dense output is kept, and
integration is continued past the zero so that phi(t x) can be evaluated for
stretched graphs (t > 1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import (
    DegenerateProfile,
    InterpolationOutOfRange,
    NoPeriodicOrbit,
    NoZeroCrossing,
    TargetOutOfRange,
)

RTOL = 1e-13
ATOL = 1e-14


def _rhs(beta, p):
    def f(x, y):
        phi = y[0]
        return [y[1], -beta * phi - np.abs(phi) ** (2 * p) * phi]

    return f


def energy(phi, dphi, beta, p):
    """First integral 1/2 phi'^2 + 1/2 beta phi^2 + |phi|^{2p+2} / (2p+2)."""
    phi = np.asarray(phi)
    return 0.5 * np.asarray(dphi) ** 2 + 0.5 * beta * phi ** 2 + np.abs(phi) ** (2 * p + 2) / (2 * p + 2)


def default_horizon(beta):
    return 50.0 * max(1.0, 2 * np.pi / np.sqrt(abs(beta))) if beta != 0 else 50.0


@dataclass(frozen=True)
class WaveParams:
    beta: float
    p: float
    center_value: float
    center_slopes: tuple

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("p must be positive")
        object.__setattr__(self, "center_slopes", tuple(float(s) for s in self.center_slopes))

    def vertex_residual(self, alpha: float) -> float:
        """sum_i phi_i'(0) - alpha phi(0)."""
        return float(sum(self.center_slopes) - alpha * self.center_value)


@dataclass(frozen=True)
class WaveProfile:
    """Standing wave on a star graph; immutable after construction.

    Attributes
    ----------
    lengths : edge lengths, the first zero of phi on each edge.
    edge_end_slopes : phi_i'(l_i).
    length_errors : |l_i(tol) - l_i(100 tol)|, a conservative error estimate.
    extension : phi is available on [0, extension * l_i] for every edge.
    """

    params: WaveParams
    alpha: float
    lengths: tuple
    edge_end_slopes: tuple
    length_errors: tuple
    vertex_consistent: bool
    extension: float
    _solutions: tuple = field(repr=False, compare=False)

    @property
    def m(self):
        return len(self.lengths)

    @property
    def beta(self):
        return self.params.beta

    @property
    def p(self):
        return self.params.p

    def _check(self, edge, x):
        x = np.asarray(x, dtype=float)
        limit = self.extension * self.lengths[edge]
        if np.any(x < -1e-14) or np.any(x > limit * (1 + 1e-12)):
            raise InterpolationOutOfRange(
                f"edge {edge}: requested x outside [0, {limit:.6g}]"
            )
        return np.clip(x, 0.0, limit)

    def state(self, edge: int, x) -> np.ndarray:
        """(phi, phi') at positions x on the given edge, shape (2, len(x))."""
        x = self._check(edge, x)
        sol = self._solutions[edge]
        if sol is None:
            return np.zeros((2,) + np.shape(x))
        return sol(x)

    def phi(self, edge: int, x):
        return self.state(edge, x)[0]

    def dphi(self, edge: int, x):
        return self.state(edge, x)[1]

    def energies(self, edge: int, x) -> np.ndarray:
        s = self.state(edge, x)
        return energy(s[0], s[1], self.beta, self.p)

    @classmethod
    def flat(cls, lengths, beta: float, p: float = 1.0, alpha: float = 0.0) -> "WaveProfile":
        """phi = 0 on edges of prescribed lengths (constant-potential problems)."""
        lengths = tuple(float(x) for x in lengths)
        m = len(lengths)
        params = WaveParams(beta, p, 0.0, (0.0,) * m)
        return cls(params, float(alpha), lengths, (0.0,) * m, (0.0,) * m, True, np.inf, (None,) * m)

    def samples(self, n: int = 201):
        """Per-edge arrays (x, phi, phi') on [0, l_i]."""
        out = []
        for i, ell in enumerate(self.lengths):
            x = np.linspace(0.0, ell, n)
            s = self.state(i, x)
            out.append((x, s[0], s[1]))
        return out

    def to_record(self, n: int = 201) -> dict:
        return {
            "beta": self.beta,
            "p": self.p,
            "alpha": self.alpha,
            "center_value": self.params.center_value,
            "center_slopes": list(self.params.center_slopes),
            "lengths": list(self.lengths),
            "extension": self.extension,
            "samples": [
                [[float(a), float(b), float(c)] for a, b, c in zip(*edge)] for edge in self.samples(n)
            ],
        }

    def to_json(self, path, n: int = 201):
        with open(path, "w") as fh:
            json.dump(self.to_record(n), fh, indent=1)

    @classmethod
    def from_record(cls, rec: dict, check_tol: float = 1e-8) -> "WaveProfile":
        """Rebuild by re-integration and check the stored lengths."""
        params = WaveParams(rec["beta"], rec["p"], rec["center_value"], rec["center_slopes"])
        prof = integrate_profile(params, rec["alpha"], extension=rec.get("extension", 2.0))
        stored = np.asarray(rec["lengths"])
        if np.max(np.abs(stored - np.asarray(prof.lengths))) > check_tol:
            raise ValueError("stored lengths disagree with re-integrated profile")
        return prof

    @classmethod
    def from_json(cls, path) -> "WaveProfile":
        with open(path) as fh:
            return cls.from_record(json.load(fh))


def edge_orbit(beta: float, p: float, phi0: float, dphi0: float, x_end: float, rtol: float = RTOL):
    """Dense DOP853 solution of the profile ODE on [0, x_end] (no events)."""
    sol = solve_ivp(
        _rhs(beta, p), (0.0, x_end), [phi0, dphi0], method="DOP853",
        rtol=rtol, atol=ATOL, dense_output=True,
    )
    return sol.sol


def _first_zero(beta, p, y0, horizon, rtol, atol):
    """Integrate from x=0 and return (solution, x of first sign change)."""
    phi0, dphi0 = y0
    sign = np.sign(phi0) if phi0 != 0 else np.sign(dphi0)
    ev = lambda x, y: y[0]
    ev.terminal = True
    ev.direction = -sign
    sol = solve_ivp(
        _rhs(beta, p), (0.0, horizon), list(y0), method="DOP853",
        rtol=rtol, atol=atol, events=ev, dense_output=True,
    )
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise NoZeroCrossing(f"no sign change of phi before x = {horizon}")
    return sol, float(sol.t_events[0][0])


def _polish(dense, guess, scale):
    """Brent polish of the zero of phi near guess on a dense interpolant."""
    f = lambda x: dense(x)[0]
    h = 1e-6 * max(guess, 1e-3)
    a, b = guess - h, guess + h
    while np.sign(f(a)) == np.sign(f(b)):
        h *= 2
        a, b = max(guess - h, 1e-300), guess + h
    root = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) > 1e-12 * scale:
        raise NoZeroCrossing("edge length polish did not converge")
    return root


def integrate_profile(
    params: WaveParams,
    graph_alpha: float,
    horizon: float | None = None,
    extension: float = 2.0,
    rtol: float = RTOL,
) -> WaveProfile:
    """Integrate each edge from the center to the first zero of phi."""
    beta, p = params.beta, params.p
    if horizon is None:
        horizon = default_horizon(beta)
    slopes = params.center_slopes
    if params.center_value == 0 and any(s == 0 for s in slopes):
        raise DegenerateProfile("phi vanishes identically on at least one edge")
    lengths, errors, ends, sols = [], [], [], []
    for s in slopes:
        y0 = (params.center_value, s)
        sol, x0 = _first_zero(beta, p, y0, horizon, rtol, ATOL)
        _, x_coarse = _first_zero(beta, p, y0, horizon, 100 * rtol, 100 * ATOL)
        dense = edge_orbit(beta, p, y0[0], y0[1], extension * x0, rtol)
        scale = np.max(np.abs(dense(np.linspace(0, x0, 64))[0]))
        ell = _polish(dense, x0, scale)
        lengths.append(ell)
        errors.append(abs(ell - x_coarse) + 1e-14)
        ends.append(float(dense(ell)[1]))
        sols.append(dense)
    consistent = abs(params.vertex_residual(graph_alpha)) <= 1e-12 * (1 + sum(abs(s) for s in slopes))
    return WaveProfile(
        params, float(graph_alpha), tuple(lengths), tuple(ends), tuple(errors),
        bool(consistent), float(extension), tuple(sols),
    )


def separatrix_amplitude(beta: float, p: float) -> float:
    """Smallest amplitude of an orbit through phi = 0 (zero for beta >= 0)."""
    if beta >= 0:
        return 0.0
    return ((p + 1) * (-beta)) ** (1.0 / (2 * p))


def _orbit_energy(beta, p, amplitude):
    return 0.5 * beta * amplitude ** 2 + amplitude ** (2 * p + 2) / (2 * p + 2)


def half_period(beta: float, p: float, amplitude: float, horizon: float | None = None) -> float:
    """Distance between consecutive zeros of the orbit with max phi = amplitude.

    The orbit starts at phi(0) = 0 with phi'(0) = sqrt(2 E), E the energy at
    the turning point.  For beta < 0 the origin is a saddle, so such orbits
    exist only above the separatrix amplitude.
    """
    if not amplitude > separatrix_amplitude(beta, p):
        raise NoPeriodicOrbit("energy level has no arch through phi = 0")
    e = _orbit_energy(beta, p, amplitude)
    if horizon is None:
        horizon = default_horizon(beta) * max(1.0, np.log(1.0 + 1.0 / e))
    _, x = _first_zero(beta, p, (0.0, np.sqrt(2 * e)), horizon, RTOL, ATOL)
    return x


def half_period_quadrature(beta: float, p: float, amplitude: float) -> float:
    """Independent value 2 * int_0^A dphi / sqrt(2 (U(A) - U(phi)))."""
    ua = _orbit_energy(beta, p, amplitude)

    def g(phi):
        # (U(A) - U(phi)) / (A - phi) is smooth and positive on [0, A]
        d = amplitude - phi
        if d < 1e-9 * amplitude:
            du = beta * amplitude + amplitude ** (2 * p + 1)
            return 1.0 / np.sqrt(2 * du)
        return 1.0 / np.sqrt(2 * (ua - _orbit_energy(beta, p, phi)) / d)

    val, _ = quad(g, 0.0, amplitude, weight="alg", wvar=(0.0, -0.5), epsabs=1e-14, epsrel=1e-13, limit=200)
    return 2 * val


def amplitude_for_half_period(beta: float, p: float, target: float) -> float:
    """Invert half_period in the amplitude (it decreases monotonically)."""
    if not np.isfinite(target) or target <= 0:
        raise TargetOutOfRange("half-period must be positive")
    if beta > 0 and target >= np.pi / np.sqrt(beta):
        raise TargetOutOfRange(f"half-periods are below pi/sqrt(beta) = {np.pi / np.sqrt(beta):.6g}")
    a0 = separatrix_amplitude(beta, p)
    f = lambda a: half_period(beta, p, a) - target
    if a0 > 0:
        lo = a0 * 1.5
        while f(lo) < 0:
            lo = a0 + 0.5 * (lo - a0)
            if lo - a0 < 1e-12 * a0:
                raise TargetOutOfRange("target half-period too long")
    else:
        lo = 1.0
        while f(lo) < 0:
            lo *= 0.5
            if lo < 1e-8:
                raise TargetOutOfRange("target half-period not attained")
    hi = max(2 * lo, 1.0)
    while f(hi) > 0:
        hi *= 2
        if hi > 1e8:
            raise TargetOutOfRange("target half-period too short")
    return brentq(f, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=200)


def interval_wave(beta: float, p: float, target: float, extension: float = 1.5) -> WaveProfile:
    """Positive arch on [0, target] vanishing at both ends, as a one-edge profile.

    The amplitude is fixed by amplitude_for_half_period; the edge starts at
    phi(0) = 0 with phi'(0) = sqrt(2 E), so the edge length is the half-period.
    """
    amp = amplitude_for_half_period(beta, p, target)
    e = _orbit_energy(beta, p, amp)
    params = WaveParams(beta, p, 0.0, (float(np.sqrt(2 * e)),))
    return integrate_profile(params, 0.0, horizon=4 * target, extension=extension)
