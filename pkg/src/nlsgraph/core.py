"""Symplectic linear algebra for boundary data of star graphs.

Boundary vectors of a function on a star graph with m edges are ordered as

    (u_1(0), ..., u_m(0), u_1(l_1), ..., u_m(l_m),
     u_1'(0), ..., u_m'(0), -u_1'(l_1), ..., -u_m'(l_m))

i.e. the Dirichlet block Gamma_0 followed by the Neumann block Gamma_1.  With
h = 2m this is R^{2h} and the symplectic form is omega(f, g) = <J f, g> with
J = [[0, I], [-I, 0]], so that omega(f, g) = <f_2, g_1> - <f_1, g_2>.  For the
pair (u, v) the boundary space is R^{4h} with Omega = omega (+) (-omega).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

ISOTROPY_TOL = 1e-8


def standard_j(h: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]] acting on C^h x C^h."""
    eye = np.eye(h)
    zero = np.zeros((h, h))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class SymplecticSpace:
    """R^dim (or C^dim) with the form (f, g) -> <form_matrix f, g>."""

    dim: int
    form_matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        fm = np.array(self.form_matrix, dtype=float)
        if self.dim <= 0 or self.dim % 2:
            raise ValueError("dimension must be even and positive")
        if fm.shape != (self.dim, self.dim):
            raise ValueError("form matrix has wrong shape")
        if not np.allclose(fm, -fm.T, atol=1e-14):
            raise ValueError("form matrix must be skew-symmetric")
        if not np.allclose(fm @ fm.T, np.eye(self.dim), atol=1e-14):
            raise ValueError("form matrix must be orthogonal")
        fm.setflags(write=False)
        object.__setattr__(self, "form_matrix", fm)

    @classmethod
    def standard(cls, h: int) -> "SymplecticSpace":
        """Boundary space of a single operator, omega with matrix J."""
        return cls(2 * h, standard_j(h))

    @classmethod
    def doubled(cls, h: int) -> "SymplecticSpace":
        """Boundary space of a pair (u, v), Omega with matrix J (+) (-J)."""
        j = standard_j(h)
        return cls(4 * h, sla.block_diag(j, -j))

    def form(self, f, g):
        """Evaluate <form_matrix f, g>, conjugate-linear in g."""
        return np.vdot(np.asarray(g), self.form_matrix @ np.asarray(f))


@dataclass(frozen=True)
class LagrangianFrame:
    """Lagrangian subspace given by an orthonormal basis (columns of frame)."""

    space: SymplecticSpace
    frame: np.ndarray = field(repr=False)

    def __post_init__(self):
        f = np.array(self.frame)
        if f.ndim != 2 or f.shape[0] != self.space.dim:
            raise ValueError("frame rows must match the ambient dimension")
        if f.shape[1] != self.space.dim // 2:
            raise ValueError("a Lagrangian frame needs dim/2 columns")
        q, r = np.linalg.qr(f)
        if np.min(np.abs(np.diag(r))) < 1e-12 * np.max(np.abs(np.diag(r))):
            raise ValueError("frame columns are linearly dependent")
        q.setflags(write=False)
        object.__setattr__(self, "frame", q)
        res = self.isotropy_residual()
        if res > ISOTROPY_TOL:
            raise ValueError(f"subspace is not isotropic (residual {res:.2e})")

    def isotropy_residual(self) -> float:
        f = self.frame
        return float(np.max(np.abs(f.conj().T @ self.space.form_matrix @ f)))

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T


@dataclass(frozen=True)
class StarGraph:
    """Star graph with m edges [0, l_i] joined at x = 0.

    center is "delta" (continuity plus flux jump sum u_i'(0) = alpha u(0)) or
    "dirichlet" (u_i(0) = 0 on every edge).  Free ends carry Dirichlet
    conditions.
    """

    lengths: tuple
    alpha: float = 0.0
    center: str = "delta"

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        if len(lengths) < 1:
            raise ValueError("a star graph needs at least one edge")
        if min(lengths) <= 0 or not all(np.isfinite(lengths)):
            raise ValueError("edge lengths must be positive")
        if self.center not in ("delta", "dirichlet"):
            raise ValueError("center must be 'delta' or 'dirichlet'")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def m(self) -> int:
        return len(self.lengths)


def vertex_conditions(graph: StarGraph, flux_scale: float = 1.0) -> np.ndarray:
    """Constraint rows C (2m x 4m) with C @ boundary_vector = 0.

    flux_scale multiplies alpha in the flux row; it carries the factor t that
    appears when the Neumann block of the trace is scaled by 1/t.
    """
    m = graph.m
    rows = []
    if graph.center == "delta":
        for i in range(1, m):
            r = np.zeros(4 * m)
            r[i], r[0] = 1.0, -1.0
            rows.append(r)
        r = np.zeros(4 * m)
        r[2 * m : 3 * m] = 1.0
        r[0] -= flux_scale * graph.alpha
        rows.append(r)
    else:
        for i in range(m):
            r = np.zeros(4 * m)
            r[i] = 1.0
            rows.append(r)
    for i in range(m):
        r = np.zeros(4 * m)
        r[m + i] = 1.0
        rows.append(r)
    return np.array(rows)


def vertex_lagrangian(graph: StarGraph) -> LagrangianFrame:
    """Plane of boundary vectors satisfying the vertex conditions of graph."""
    c = vertex_conditions(graph)
    return LagrangianFrame(SymplecticSpace.standard(2 * graph.m), sla.null_space(c))


def dirichlet_plane(h: int) -> LagrangianFrame:
    """All boundary values vanish (Gamma_0 = 0)."""
    return LagrangianFrame(SymplecticSpace.standard(h), np.vstack([np.zeros((h, h)), np.eye(h)]))


def neumann_plane(h: int) -> LagrangianFrame:
    """All co-normal derivatives vanish (Gamma_1 = 0)."""
    return LagrangianFrame(SymplecticSpace.standard(h), np.vstack([np.eye(h), np.zeros((h, h))]))


def separated_frame(theta0, theta1) -> np.ndarray:
    """Frame in C^4 for separated conditions on one interval.

    At each end e the pair (Gamma_0 u at e, Gamma_1 u at e) lies on the line
    spanned by (sin theta_e, cos theta_e): theta = 0 is Dirichlet and
    theta = pi/2 is Neumann.  Ordering is (u(0), u(l), u'(0), -u'(l)).
    """
    f = np.zeros((4, 2))
    f[0, 0], f[2, 0] = np.sin(theta0), np.cos(theta0)
    f[1, 1], f[3, 1] = np.sin(theta1), np.cos(theta1)
    return f


def separated_plane(theta0: float, theta1: float) -> LagrangianFrame:
    return LagrangianFrame(SymplecticSpace.standard(2), separated_frame(theta0, theta1))


def rotating_plane(t: float, ell: float = 1.0) -> LagrangianFrame:
    """Dirichlet at x = 0; at x = ell, (u(ell), u'(ell)) in span{(sin(pi t/2), -cos(pi t/2))}.

    In trace coordinates, where the last entry is -u'(ell), this is the
    separated plane with angles (0, pi t/2).  The plane does not depend on
    ell; the argument is kept so call sites document the interval.
    """
    if ell <= 0:
        raise ValueError("ell must be positive")
    return separated_plane(0.0, 0.5 * np.pi * t)


def direct_sum(a: LagrangianFrame, b: LagrangianFrame) -> LagrangianFrame:
    """a (+) b inside the doubled space with form J (+) (-J)."""
    if a.space.dim != b.space.dim:
        raise ValueError("planes must live in spaces of equal dimension")
    space = SymplecticSpace.doubled(a.space.dim // 2)
    return LagrangianFrame(space, sla.block_diag(a.frame, b.frame))


def intersection_dim(a: LagrangianFrame, b: LagrangianFrame, tol: float = 1e-8) -> int:
    """dim(a intersect b) from the singular values of [frame_a | -frame_b].

    Singular values below tol times the largest one count as null directions.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if a.space.dim != b.space.dim:
        raise ValueError("planes must share the ambient space")
    s = np.linalg.svd(np.hstack([a.frame, -b.frame]), compute_uv=False)
    s = np.concatenate([s, np.zeros(a.frame.shape[1] + b.frame.shape[1] - len(s))])
    return int(np.sum(s < tol * s[0]))
