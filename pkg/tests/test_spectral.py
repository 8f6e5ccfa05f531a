import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from conftest import b_wave
from nlsgraph.core import StarGraph, SymplecticSpace
from nlsgraph.errors import NotACrossing
from nlsgraph.spectral import (
    boundary_plane,
    cauchy_frame,
    dispersion_det,
    edge_propagator,
    eigen_data_at_crossing,
    frame_intersection,
    scalar_det,
    scalar_dets,
    shooting_matrix,
)
from nlsgraph.standing_wave import WaveProfile


def _complex_propagator(kappa2, ell):
    """Propagator of w'' = -kappa2 w on [0, ell] as a real 4x4 on (u, u', v, v'), w = u + i v."""
    k = np.sqrt(complex(kappa2))
    c, s = np.cos(k * ell), np.sin(k * ell)
    m2 = np.array([[c, s / k], [-k * s, c]])
    out = np.zeros((4, 4))
    for col, (w0, dw0) in enumerate(((1, 0), (0, 1), (1j, 0), (0, 1j))):
        w, dw = m2 @ np.array([w0, dw0])
        out[:, col] = [w.real, dw.real, w.imag, dw.imag]
    return out


@pytest.mark.parametrize("beta, lam, t", [(2.0, 0.0, 1.0), (-1.5, 3.0, 0.7), (4.0, -7.0, 1.3)])
def test_constant_potential_propagator_matches_closed_form(beta, lam, t):
    prof = WaveProfile.flat([1.3], beta)
    psi = edge_propagator(0, lam, t, prof, 0.0, 1.3)
    # u'' = -t^2 beta u - t^2 lam v, v'' = -t^2 beta v + t^2 lam u  =>  w'' = -t^2 (beta - i lam) w
    oracle = _complex_propagator(t * t * (beta - 1j * lam), 1.3)
    assert np.max(np.abs(psi - oracle)) < 1e-11 * max(1.0, np.max(np.abs(oracle)))


def test_propagator_matches_dop853_on_wave():
    prof, _ = b_wave(1)
    lam, t, p, beta = 13.0, 0.9, prof.p, prof.beta
    ell = prof.lengths[2]

    def rhs(x, y):
        q = prof.phi(2, t * x) ** (2 * p)
        u, du, v, dv = y
        return [du, -t * t * ((2 * p + 1) * q + beta) * u - t * t * lam * v, dv, -t * t * (q + beta) * v + t * t * lam * u]

    oracle = np.column_stack([
        solve_ivp(rhs, (0, ell), e, method="DOP853", rtol=1e-13, atol=1e-15).y[:, -1] for e in np.eye(4)
    ])
    psi = edge_propagator(2, lam, t, prof, 0.0, ell)
    assert np.max(np.abs(psi - oracle)) < 1e-10 * np.max(np.abs(oracle))


@pytest.mark.parametrize("beta, lam, t", [(5.0, 0.0, 1.0), (5.0, 2.5, 0.8), (-2.0, 11.0, 1.1), (30.0, -4.0, 0.6)])
def test_single_edge_determinant_closed_form(beta, lam, t):
    # one edge, Neumann at the center (alpha = 0), Dirichlet at the end
    ell = 0.9
    prof = WaveProfile.flat([ell], beta)
    d = dispersion_det(lam, t, prof, StarGraph([ell]))
    k = np.sqrt(complex(t * t * (beta - 1j * lam)))
    w0, dw0 = -np.sin(k * ell) / k, np.cos(k * ell)
    assert abs(d - abs(dw0) ** 2 / (abs(w0) ** 2 + abs(dw0) ** 2)) < 1e-11


@pytest.mark.parametrize("n", [1, 2])
def test_dirichlet_constant_potential_zeros(n):
    # -u'' = c t^2 u with Dirichlet ends vanishes at t = n pi / (sqrt(c) l)
    c, ell = (2.5 * np.pi) ** 2, 1.0
    prof = WaveProfile.flat([ell], c)
    graph = StarGraph([ell], center="dirichlet")
    tn = n * np.pi / np.sqrt(c)
    for which in ("G", "F"):
        lo, hi = scalar_det(which, tn - 1e-3, prof, graph), scalar_det(which, tn + 1e-3, prof, graph)
        assert lo * hi < 0
        assert abs(scalar_det(which, tn, prof, graph)) < 1e-12


def test_linearity_in_initial_data():
    prof, _ = b_wave(5)
    psi = edge_propagator(0, 4.0, 0.8, prof, 0.0, prof.lengths[0])
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=4), rng.normal(size=4)
    assert np.allclose(psi @ (2 * a - 3 * b), 2 * psi @ a - 3 * psi @ b, atol=1e-12)


@pytest.mark.parametrize("b", [5, 1])
def test_zero_lambda_decouples(b):
    prof, graph = b_wave(b)
    for t in (0.3, 0.75, 1.0):
        s, _, _ = shooting_matrix(0.0, t, prof, graph)
        m = graph.m
        assert np.max(np.abs(s[:m, m:])) == 0 and np.max(np.abs(s[m:, :m])) == 0
        d = scalar_dets(t, prof, graph)
        assert abs(dispersion_det(0.0, t, prof, graph) - d["G"] * d["F"]) < 1e-14


@pytest.mark.parametrize("b", [5, 3, 1])
def test_corner_is_a_simple_crossing(b):
    prof, graph = b_wave(b)
    assert abs(dispersion_det(0.0, 1.0, prof, graph)) < 1e-8
    assert frame_intersection(0.0, 1.0, prof, graph) == 1
    data = eigen_data_at_crossing(0.0, 1.0, prof, graph)
    assert data.norms[0] < 1e-7
    assert abs(data.norms[1] - 1) < 1e-12
    assert data.vertex_residual < 1e-10
    # v is a multiple of phi: its end slopes are proportional to phi'(l_i)
    ratio = np.asarray(data.end_slopes_v) / np.asarray(prof.edge_end_slopes)
    assert np.ptp(ratio) < 1e-8 * abs(ratio[0])


def test_not_a_crossing():
    prof, graph = b_wave(5)
    with pytest.raises(NotACrossing):
        eigen_data_at_crossing(10.0, 0.5, prof, graph)


@pytest.mark.parametrize("lam, t", [(0.0, 0.5), (5.0, 1.0), (-20.0, 0.7), (200.0, 1.0)])
def test_cauchy_frame_is_lagrangian(lam, t):
    prof, graph = b_wave(1)
    frame = cauchy_frame(lam, t, prof, graph)
    assert frame.frame.shape == (24, 12)
    assert frame.isotropy_residual() < 1e-10


def test_determinant_zero_set_matches_frame_intersection():
    prof, graph = b_wave(1)
    lam3 = 19.961177009538147
    for lam, t in [(0.0, 1.0), (lam3, 1.0), (-lam3, 1.0)]:
        assert frame_intersection(lam, t, prof, graph) == 1
        assert abs(dispersion_det(lam, t, prof, graph)) < 1e-8
    for lam in (-50.0, -5.0, 3.0, 40.0):
        for t in (0.3, 0.65, 0.95):
            d = dispersion_det(lam, t, prof, graph)
            assert (frame_intersection(lam, t, prof, graph) == 0) == (abs(d) > 1e-6)


def _joint_solution(prof, edge, lams, t, y0s, ell):
    """Two solutions (at lams[0], lams[1]) and int (u1 v2 + v1 u2) over [0, ell]."""
    p, beta, t2 = prof.p, prof.beta, t * t

    def rhs(x, y):
        q = prof.phi(edge, t * x) ** (2 * p)
        out = []
        for k, lam in enumerate(lams):
            u, du, v, dv = y[4 * k : 4 * k + 4]
            out += [du, -t2 * ((2 * p + 1) * q + beta) * u - t2 * lam * v, dv, -t2 * (q + beta) * v + t2 * lam * u]
        out.append(y[0] * y[6] + y[2] * y[4])
        return out

    sol = solve_ivp(rhs, (0, ell), np.concatenate([y0s[0], y0s[1], [0.0]]), method="DOP853", rtol=1e-13, atol=1e-15)
    return sol.y[:4, -1], sol.y[4:8, -1], sol.y[8, -1]


def test_green_identity():
    # t * Omega(T a, T b) = -(mu_2 - mu_1) <a, tau b>, mu = t^2 lambda, tau swaps components
    prof, graph = b_wave(3)
    rng = np.random.default_rng(7)
    m = graph.m
    omega = SymplecticSpace.doubled(2 * m)
    for _ in range(4):
        t = rng.uniform(0.4, 1.2)
        lams = rng.uniform(-30, 30, 2)
        ta, tb = np.zeros(8 * m), np.zeros(8 * m)
        inner = 0.0
        for i, ell in enumerate(graph.lengths):
            y0a, y0b = rng.normal(size=4), rng.normal(size=4)
            ya, yb, ii = _joint_solution(prof, i, lams, t, (y0a, y0b), ell)
            inner += ii
            for vec, y0, y1 in ((ta, y0a, ya), (tb, y0b, yb)):
                for blk, (iv, idv) in enumerate(((0, 1), (2, 3))):
                    off = 4 * m * blk
                    vec[off + i], vec[off + m + i] = y0[iv], y1[iv]
                    vec[off + 2 * m + i], vec[off + 3 * m + i] = y0[idv] / t, -y1[idv] / t
        lhs = t * omega.form(ta, tb)
        rhs = -t * t * (lams[1] - lams[0]) * inner
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))


def test_boundary_plane_dimension():
    _, graph = b_wave(5)
    plane = boundary_plane(graph)
    assert plane.frame.shape == (24, 12)
    assert plane.isotropy_residual() < 1e-14


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 300.0), st.floats(0.05, 1.0))
def test_determinant_even_in_lambda(lam, t):
    prof, graph = b_wave(5)
    assert dispersion_det(lam, t, prof, graph) == pytest.approx(dispersion_det(-lam, t, prof, graph), abs=1e-12)


def test_interval_det_zero_potential_at_lambda_zero():
    # u'' = 0, u(0) = 0 gives u = x; cos(th) l + sin(th) = 0 at th = pi - arctan(l)
    from nlsgraph.spectral import interval_det, interval_matrix, shooting_nullity
    prof = WaveProfile.flat([np.pi], beta=0.0)
    t0 = 2 - 2 / np.pi * np.arctan(np.pi)
    assert abs(interval_det(0.0, t0, prof)) < 1e-12
    assert shooting_nullity(interval_matrix(0.0, t0, prof)) == 2
    assert abs(interval_det(0.0, 0.5, prof)) > 0.1


def test_interval_det_zero_potential_has_no_real_eigenvalues():
    from nlsgraph.spectral import interval_det
    prof = WaveProfile.flat([np.pi], beta=0.0)
    for t in (0.3, 1.0, 1.7):
        d = np.array([interval_det(lam, t, prof) for lam in np.linspace(0.5, 10, 40)])
        assert np.all(np.sign(d) == np.sign(d[0]))


def test_interval_det_both_ends_symmetric_wave_is_even():
    from nlsgraph.spectral import interval_det
    from nlsgraph.standing_wave import interval_wave
    prof = interval_wave(-2.0, 1.0, 1.09868)
    for lam, t in ((0.7, 1.3), (2.0, 0.4)):
        assert abs(interval_det(lam, t, prof, True) - interval_det(-lam, t, prof, True)) < 1e-10
