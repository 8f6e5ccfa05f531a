"""Linearized eigenvalue problem on a star graph: shooting and Cauchy data.

On each edge the eigenvalue problem (N_t + V_t) u = t^2 lambda u reads

    u'' = -t^2 ((2p+1) phi(t x)^{2p} + beta) u - t^2 lambda v
    v'' = -t^2 (phi(t x)^{2p} + beta) v + t^2 lambda u

with state y = (u, u', v, v').  The boundary trace is scaled,
tr_t u = (Gamma_0 u, Gamma_1 u / t), and the vertex plane is fixed, so the
flux condition becomes sum_i u_i'(0) = t alpha u_1(0).

Transfer matrices are built with a sixth-order Magnus integrator on a uniform
grid (batched matrix exponentials); eigenfunctions at crossings are
re-integrated with DOP853 for the inner products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .core import (
    LagrangianFrame,
    StarGraph,
    SymplecticSpace,
    direct_sum,
    intersection_dim,
    vertex_conditions,
    vertex_lagrangian,
)
from .errors import InterpolationOutOfRange, MultiplicityAboveOne, NotACrossing
from .standing_wave import WaveProfile

# Magnus step is chosen so that h * sqrt(max |coefficient|) <= STEP_SCALE
STEP_SCALE = 0.02
MIN_STEPS = 16
CROSSING_TOL = 1e-7
MULTIPLICITY_TOL = 1e-6

_GAUSS = 0.5 + np.array([-np.sqrt(15) / 10, 0.0, np.sqrt(15) / 10])


@dataclass(frozen=True)
class ScaledTrace:
    """T_t applied to a pair (u, v); each block has length 2m."""

    gamma0_u: np.ndarray
    gamma1_u: np.ndarray
    gamma0_v: np.ndarray
    gamma1_v: np.ndarray
    t: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.gamma0_u, self.gamma1_u, self.gamma0_v, self.gamma1_v])


@dataclass(frozen=True)
class CrossingData:
    lambda0: float
    t0: float
    lengths: tuple
    end_slopes_u: np.ndarray
    end_slopes_v: np.ndarray
    center_values: tuple
    uv_inner: float
    norms: tuple
    trace: ScaledTrace
    vertex_residual: float
    singular_ratio: float


def _coefficient_matrices(profile: WaveProfile, edge: int, lam: float, t: float, x: np.ndarray) -> np.ndarray:
    """A(x) of y' = A(x) y at the points x, shape (len(x), 4, 4)."""
    tx = t * x
    if profile.extension != np.inf and np.any(tx > profile.extension * profile.lengths[edge] * (1 + 1e-12)):
        raise InterpolationOutOfRange("t * x exceeds the extended profile")
    q = np.abs(profile.phi(edge, tx)) ** (2 * profile.p)
    t2 = t * t
    a = np.zeros((len(x), 4, 4))
    a[:, 0, 1] = 1.0
    a[:, 2, 3] = 1.0
    a[:, 1, 0] = -t2 * ((2 * profile.p + 1) * q + profile.beta)
    a[:, 1, 2] = -t2 * lam
    a[:, 3, 0] = t2 * lam
    a[:, 3, 2] = -t2 * (q + profile.beta)
    return a


def _step_count(profile, edge, lam, t, length):
    q = np.abs(profile.phi(edge, t * np.linspace(0, length, 65))) ** (2 * profile.p)
    kmax = t * t * (np.max((2 * profile.p + 1) * q) + abs(profile.beta) + abs(lam))
    return max(MIN_STEPS, int(np.ceil(length * np.sqrt(kmax) / STEP_SCALE)))


def magnus_steps(afun, grid: np.ndarray) -> np.ndarray:
    """Sixth-order Magnus step propagators exp(Omega_k) for consecutive grid cells."""
    h = np.diff(grid)
    nodes = (grid[:-1, None] + h[:, None] * _GAUSS[None, :]).ravel()
    a = afun(nodes).reshape(len(h), 3, *afun(nodes[:1]).shape[1:])
    a1, a2, a3 = a[:, 0], a[:, 1], a[:, 2]
    hh = h[:, None, None]
    al1 = hh * a2
    al2 = (np.sqrt(15) / 3) * hh * (a3 - a1)
    al3 = (10.0 / 3) * hh * (a3 - 2 * a2 + a1)
    comm = lambda x, y: x @ y - y @ x
    c1 = comm(al1, al2)
    c2 = -comm(al1, 2 * al3 + c1) / 60
    omega = al1 + al3 / 12 + comm(-20 * al1 - al3 + c1, al2 + c2) / 240
    return sla.expm(omega)


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """mats[-1] @ ... @ mats[0] by pairwise reduction (fixed order)."""
    mats = np.asarray(mats)
    while len(mats) > 1:
        if len(mats) % 2:
            tail = mats[-1:]
            mats = mats[:-1]
        else:
            tail = None
        mats = mats[1::2] @ mats[0::2]
        if tail is not None:
            mats = np.concatenate([mats, tail])
    return mats[0]


def edge_propagator(edge: int, lam: float, t: float, profile: WaveProfile, x_from: float, x_to: float,
                    steps: int | None = None) -> np.ndarray:
    """Transfer matrix taking y(x_from) to y(x_to) on the given edge."""
    if x_from == x_to:
        return np.eye(4)
    length = abs(x_to - x_from)
    if steps is None:
        steps = _step_count(profile, edge, lam, t, max(x_from, x_to))
        steps = max(MIN_STEPS, int(np.ceil(steps * length / max(x_from, x_to))))
    grid = np.linspace(x_from, x_to, steps + 1)
    afun = lambda x: _coefficient_matrices(profile, edge, lam, t, x)
    return ordered_product(magnus_steps(afun, grid))


def evolve_edge(edge: int, lam: float, t: float, profile: WaveProfile, y0, x_from: float, x_to: float) -> np.ndarray:
    """State y(x_to) of the solution with y(x_from) = y0."""
    return edge_propagator(edge, lam, t, profile, x_from, x_to) @ np.asarray(y0, dtype=float)


def _center_rows(graph: StarGraph, t: float) -> np.ndarray:
    """Central-vertex conditions acting on (values at 0, derivatives at 0)."""
    m = graph.m
    full = vertex_conditions(graph, flux_scale=t)
    # drop the free-end rows and the columns of free-end data
    rows = full[: m]
    return np.hstack([rows[:, :m], rows[:, 2 * m : 3 * m]])


def shooting_matrix(lam: float, t: float, profile: WaveProfile, graph: StarGraph):
    """Normalized 2m x 2m shooting matrix and the column gauges.

    Column j is the central-vertex residual of the solution on one edge with
    u(l) = v(l) = 0 and either u'(l) = 1 (first m columns) or v'(l) = 1 (last
    m columns), divided by the norm of its state at x = 0.  Rows are the u
    conditions followed by the v conditions, so at lambda = 0 the matrix is
    block diagonal.
    """
    m = graph.m
    c0 = _center_rows(graph, t)
    s = np.zeros((2 * m, 2 * m))
    gauges = np.zeros(2 * m)
    states = np.zeros((2 * m, 4))
    for i, ell in enumerate(graph.lengths):
        psi = edge_propagator(i, lam, t, profile, ell, 0.0)
        for k, col in ((0, i), (1, m + i)):
            y = psi[:, 1 + 2 * k]
            ud = np.zeros(2 * m)
            vd = np.zeros(2 * m)
            ud[i], ud[m + i] = y[0], y[1]
            vd[i], vd[m + i] = y[2], y[3]
            g = np.linalg.norm(y)
            s[:, col] = np.concatenate([c0 @ ud, c0 @ vd]) / g
            gauges[col] = g
            states[col] = y
    return s, gauges, states


def dispersion_det(lam: float, t: float, profile: WaveProfile, graph: StarGraph) -> float:
    """Normalized shooting determinant; zero iff t^2 lam is an eigenvalue."""
    s, _, _ = shooting_matrix(lam, t, profile, graph)
    return float(np.linalg.det(s))


def scalar_dets(t: float, profile: WaveProfile, graph: StarGraph) -> dict:
    """{'F': d_F(t), 'G': d_G(t)}: the two diagonal blocks of D(0, t)."""
    s, _, _ = shooting_matrix(0.0, t, profile, graph)
    m = graph.m
    return {"G": float(np.linalg.det(s[:m, :m])), "F": float(np.linalg.det(s[m:, m:]))}


def scalar_det(which: str, t: float, profile: WaveProfile, graph: StarGraph) -> float:
    """Shooting determinant of -u'' + G_t u = 0 (which='G') or -u'' + F_t u = 0 ('F')."""
    if which not in ("F", "G"):
        raise ValueError("which must be 'F' or 'G'")
    return scalar_dets(t, profile, graph)[which]


def scalar_singular_values(which: str, t: float, profile: WaveProfile, graph: StarGraph) -> np.ndarray:
    s, _, _ = shooting_matrix(0.0, t, profile, graph)
    m = graph.m
    block = s[:m, :m] if which == "G" else s[m:, m:]
    return np.linalg.svd(block, compute_uv=False)


def cauchy_frame(lam: float, t: float, profile: WaveProfile, graph: StarGraph) -> LagrangianFrame:
    """Scaled traces of all solutions of the edge equations (no vertex conditions)."""
    m = graph.m
    cols = []
    for i, ell in enumerate(graph.lengths):
        phi_end = edge_propagator(i, lam, t, profile, 0.0, ell)
        for k in range(4):
            y0 = np.eye(4)[k]
            y1 = phi_end[:, k]
            vec = np.zeros(8 * m)
            for blk, (iv, idv) in enumerate(((0, 1), (2, 3))):
                off = 4 * m * blk
                vec[off + i] = y0[iv]
                vec[off + m + i] = y1[iv]
                vec[off + 2 * m + i] = y0[idv] / t
                vec[off + 3 * m + i] = -y1[idv] / t
            cols.append(vec)
    f = np.array(cols).T
    q, _ = np.linalg.qr(f)
    return LagrangianFrame(SymplecticSpace.doubled(2 * m), q)


def boundary_plane(graph: StarGraph) -> LagrangianFrame:
    """L (+) L: the vertex plane for both components."""
    plane = vertex_lagrangian(graph)
    return direct_sum(plane, plane)


def frame_intersection(lam: float, t: float, profile: WaveProfile, graph: StarGraph, tol: float = 1e-8) -> int:
    return intersection_dim(cauchy_frame(lam, t, profile, graph), boundary_plane(graph), tol)


def _augmented_rhs(profile, edge, lam, t):
    p, beta, t2 = profile.p, profile.beta, t * t

    def f(x, y):
        q = abs(profile.phi(edge, t * x)) ** (2 * p)
        u, du, v, dv = y[:4]
        return [
            du,
            -t2 * ((2 * p + 1) * q + beta) * u - t2 * lam * v,
            dv,
            -t2 * (q + beta) * v + t2 * lam * u,
            u * u,
            v * v,
            u * v,
        ]

    return f


def edge_solution(edge: int, lam: float, t: float, profile: WaveProfile, y_end, length: float):
    """Re-integrate from x = length back to 0 with DOP853.

    Returns the dense solution and the integrals (int u^2, int v^2, int u v)
    over [0, length].
    """
    y0 = np.concatenate([np.asarray(y_end, dtype=float), np.zeros(3)])
    scale = max(np.max(np.abs(y_end)), 1e-300)
    sol = solve_ivp(
        _augmented_rhs(profile, edge, lam, t), (length, 0.0), y0, method="DOP853",
        rtol=1e-12, atol=1e-15 * scale, dense_output=True,
    )
    ints = -sol.y[4:, -1]
    return sol.sol, ints


def eigen_data_at_crossing(lam0: float, t0: float, profile: WaveProfile, graph: StarGraph,
                           crossing_tol: float = CROSSING_TOL) -> CrossingData:
    """Eigenfunction data at a point of the zero set of the dispersion determinant."""
    s, gauges, _ = shooting_matrix(lam0, t0, profile, graph)
    _, sv, vh = np.linalg.svd(s)
    ratio = sv[-1] / sv[0]
    if ratio > crossing_tol:
        raise NotACrossing(f"smallest singular value ratio {ratio:.3e} exceeds {crossing_tol:.1e}")
    if len(sv) > 1 and sv[-2] / sv[0] < MULTIPLICITY_TOL:
        raise MultiplicityAboveOne("second singular value is below the multiplicity tolerance")
    c = vh[-1]
    first = np.flatnonzero(np.abs(c) > 1e-12 * np.max(np.abs(c)))[0]
    if c[first] < 0:
        c = -c
    coef = c / gauges
    m = graph.m
    ints = np.zeros(3)
    center = np.zeros((m, 4))
    for i, ell in enumerate(graph.lengths):
        y_end = np.array([0.0, coef[i], 0.0, coef[m + i]])
        if not np.any(y_end):
            continue
        sol, e_ints = edge_solution(i, lam0, t0, profile, y_end, ell)
        center[i] = sol(0.0)[:4]
        ints += e_ints
    norm = np.sqrt(ints[0] + ints[1])
    coef = coef / norm
    center = center / norm
    ints = ints / norm ** 2
    su, sv_ = coef[:m], coef[m:]
    trace = ScaledTrace(
        gamma0_u=np.concatenate([center[:, 0], np.zeros(m)]),
        gamma1_u=np.concatenate([center[:, 1], -su]) / t0,
        gamma0_v=np.concatenate([center[:, 2], np.zeros(m)]),
        gamma1_v=np.concatenate([center[:, 3], -sv_]) / t0,
        t=t0,
    )
    cond = vertex_conditions(graph)
    bu = np.concatenate([trace.gamma0_u, trace.gamma1_u])
    bv = np.concatenate([trace.gamma0_v, trace.gamma1_v])
    resid = max(np.max(np.abs(cond @ bu)), np.max(np.abs(cond @ bv))) / max(np.max(np.abs(trace.vector())), 1e-300)
    return CrossingData(
        lambda0=float(lam0), t0=float(t0), lengths=tuple(graph.lengths),
        end_slopes_u=su, end_slopes_v=sv_,
        center_values=(float(center[0, 0]), float(center[0, 2])),
        uv_inner=float(ints[2]), norms=(float(np.sqrt(ints[0])), float(np.sqrt(ints[1]))),
        trace=trace, vertex_residual=float(resid), singular_ratio=float(ratio),
    )


def graph_for(profile: WaveProfile) -> StarGraph:
    """Star graph carrying the profile's edge lengths and coupling."""
    return StarGraph(profile.lengths, profile.alpha)


def interval_angles(t: float, both_ends: bool = False):
    """Separated-condition angles of the rotating plane family on one interval.

    At the right end (u(l), u'(l)) lies on span{(sin(pi t/2), -cos(pi t/2))}.
    With both_ends the same line is imposed at x = 0 on (u(0), -u'(0)), the
    outward co-normal there, so the family is symmetric under x -> l - x.
    """
    th = 0.5 * np.pi * t
    return (th if both_ends else 0.0), th


def interval_matrix(lam: float, t: float, profile: WaveProfile, both_ends: bool = False) -> np.ndarray:
    """Column-normalized 2 x 2 shooting matrix for one interval with the rotating plane.

    The potentials are frozen at the unscaled profile (t enters only through
    the boundary plane).  Columns start from the left condition in u and in v;
    rows evaluate the right condition.
    """
    th0, th1 = interval_angles(t, both_ends)
    ell = profile.lengths[0]
    psi = edge_propagator(0, lam, 1.0, profile, 0.0, ell)
    # (u(0), u'(0)) = (sin th0, cos th0): -u'(0) is the outward co-normal
    s0, c0 = np.sin(th0), np.cos(th0)
    y = psi @ np.array([[s0, 0.0], [c0, 0.0], [0.0, s0], [0.0, c0]])
    s1, c1 = np.sin(th1), np.cos(th1)
    rows = np.array([[c1, s1, 0.0, 0.0], [0.0, 0.0, c1, s1]])
    return (rows @ y) / np.linalg.norm(y, axis=0)


def interval_det(lam: float, t: float, profile: WaveProfile, both_ends: bool = False) -> float:
    return float(np.linalg.det(interval_matrix(lam, t, profile, both_ends)))


def shooting_nullity(mat: np.ndarray, tol: float = 1e-8) -> int:
    """Number of singular values below tol (columns are already normalized)."""
    sv = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sv < tol))
