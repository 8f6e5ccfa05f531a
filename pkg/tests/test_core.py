import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsgraph.core import (
    LagrangianFrame,
    StarGraph,
    SymplecticSpace,
    dirichlet_plane,
    direct_sum,
    intersection_dim,
    neumann_plane,
    rotating_plane,
    separated_plane,
    vertex_lagrangian,
)


def test_one_edge_kirchhoff_plane_is_neumann_dirichlet():
    plane = vertex_lagrangian(StarGraph([1.0], 0.0))
    expected = np.array([[1.0, 0, 0, 0], [0, 0, 0, 1.0]]).T
    proj = plane.projector()
    assert np.allclose(proj, expected @ expected.T, atol=1e-14)
    assert plane.isotropy_residual() < 1e-14


def test_three_edge_kirchhoff_plane():
    plane = vertex_lagrangian(StarGraph([0.3, 0.5, 0.7], 0.0))
    assert plane.frame.shape == (12, 6)
    assert np.allclose(plane.frame.T @ plane.frame, np.eye(6), atol=1e-14)
    assert plane.isotropy_residual() < 1e-14


def test_delta_plane_meets_dirichlet_plane():
    # With all values zero only the flux row constrains the 2m co-normal
    # entries, so the intersection is (2m - 1)-dimensional.
    g = StarGraph([0.3, 0.5, 0.7], 2.5)
    plane = vertex_lagrangian(g)
    assert plane.isotropy_residual() < 1e-14
    stacked = np.hstack([plane.frame, -dirichlet_plane(6).frame])
    brute = 12 - np.linalg.matrix_rank(stacked, tol=1e-10)
    assert brute == 5
    assert intersection_dim(plane, dirichlet_plane(6)) == brute


def test_rotating_plane_endpoints():
    d = rotating_plane(0.0, np.pi)
    assert intersection_dim(d, dirichlet_plane(2)) == 2
    n = rotating_plane(1.0, np.pi)
    # Dirichlet at 0 and Neumann at ell: u(0) = 0 and -u'(ell) = 0.
    target = LagrangianFrame(SymplecticSpace.standard(2), np.array([[0, 1.0, 0, 0], [0, 0, 1.0, 0]]).T)
    assert intersection_dim(n, target) == 2
    assert intersection_dim(rotating_plane(2.0, np.pi), dirichlet_plane(2)) == 2
    assert rotating_plane(0.5, 2.0).isotropy_residual() < 1e-14


def test_rotating_plane_matches_direct_omega():
    f = rotating_plane(0.5, 1.0).frame
    sp = SymplecticSpace.standard(2)
    for i in range(2):
        for j in range(2):
            # omega(f, g) = <f_2, g_1> - <f_1, g_2> written out by hand
            a, b = f[:, i], f[:, j]
            direct = a[2:] @ b[:2] - a[:2] @ b[2:]
            assert abs(direct) < 1e-14
            assert abs(sp.form(a, b) - direct) < 1e-15


def test_intersection_simple_cases():
    d, n = dirichlet_plane(2), neumann_plane(2)
    assert intersection_dim(d, d) == 2
    assert intersection_dim(d, n) == 0
    with pytest.raises(ValueError):
        intersection_dim(d, n, tol=0.0)


def test_form_is_green_bracket_for_laplacian():
    # <-u'', v> - <u, -v''> = omega(tr u, tr v) for u = x^2, v = x^3 on [0, 1]
    ell = 1.0
    u = lambda x: x ** 2
    du = lambda x: 2 * x
    v = lambda x: x ** 3
    dv = lambda x: 3 * x ** 2
    bracket = -2 * (1 / 4) + 6 * (1 / 4)  # int(-2 x^3) + int(6 x^3)
    tr = lambda f, df: np.array([f(0), f(ell), df(0), -df(ell)])
    sp = SymplecticSpace.standard(2)
    assert abs(sp.form(tr(u, du), tr(v, dv)) - bracket) < 1e-14


def test_non_isotropic_frame_rejected():
    with pytest.raises(ValueError):
        # u(0) paired with u'(0) is not isotropic
        LagrangianFrame(SymplecticSpace.standard(2), np.eye(4)[:, [0, 2]])


def test_direct_sum_is_lagrangian_for_doubled_form():
    plane = vertex_lagrangian(StarGraph([0.2, 0.4], 1.0))
    both = direct_sum(plane, plane)
    assert both.frame.shape == (16, 8)
    assert both.isotropy_residual() < 1e-13


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.1, 3.0), min_size=1, max_size=4),
    st.floats(-5, 5),
    st.floats(0, 2),
    st.integers(0, 2 ** 31 - 1),
)
def test_intersection_properties(lengths, alpha, theta, seed):
    plane = vertex_lagrangian(StarGraph(lengths, alpha))
    assert plane.isotropy_residual() < 1e-12
    h = 2 * len(lengths)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((h, h)))
    rotated = LagrangianFrame(plane.space, plane.frame @ q)
    other = dirichlet_plane(h)
    k = intersection_dim(plane, other)
    assert k == intersection_dim(other, plane)
    assert k == intersection_dim(rotated, other)
    assert k == h - 1
    assert separated_plane(theta, 2 * theta).isotropy_residual() < 1e-14
