"""Q1 finite-element discretization of the strip quadratic form.

In the coordinates (s, u) the form is

    q0(f, f) = int int  |f_s|^2 / (1 - u gamma(s)) + (1 - u gamma(s)) |f_u|^2  ds du

with the weighted measure (1 - u gamma(s)) ds du.  On the truncated
rectangle [-L, L] x [0, d] with a uniform tensor grid this gives a sparse
pencil (A, M).  The edge u = 0 carries the Dirichlet condition; u = d is
natural.  At s = +-L either condition may be imposed, which brackets the
spectrum of the infinite strip from above (dirichlet) and below (neumann).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .geometry import StripGeometry

TRUNC_BCS = ("dirichlet", "neumann")

_GP = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GW = np.array([5.0, 8.0, 5.0]) / 9.0


class AssemblyError(ValueError):
    pass


def threshold(d: float) -> float:
    """Bottom of the essential spectrum, pi^2 / (4 d^2)."""
    if not d > 0:
        raise ValueError("d must be > 0")
    return math.pi ** 2 / (4.0 * d * d)


@dataclass(frozen=True)
class Grid:
    L: float
    ns: int
    nu: int
    trunc_bc: str = "neumann"

    def __post_init__(self):
        if self.ns < 4 or self.nu < 4:
            raise AssemblyError("grid needs ns, nu >= 4")
        if self.trunc_bc not in TRUNC_BCS:
            raise AssemblyError(f"trunc_bc must be one of {TRUNC_BCS}, got {self.trunc_bc!r}")
        if not self.L > 0:
            raise AssemblyError("L must be > 0")

    @property
    def hs(self):
        return 2.0 * self.L / self.ns

    def s_nodes(self):
        return np.linspace(-self.L, self.L, self.ns + 1)

    def u_nodes(self, d):
        return np.linspace(0.0, d, self.nu + 1)

    def refined(self, factor=2):
        return replace(self, ns=self.ns * factor, nu=self.nu * factor)

    def with_bc(self, bc):
        return replace(self, trunc_bc=bc)

    def with_L(self, L):
        """Same longitudinal spacing on [-L, L]."""
        ns = int(round(self.ns * L / self.L))
        return replace(self, L=float(L), ns=ns)


@dataclass
class FormPencil:
    A: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray  # free dof -> global node index i * (nu + 1) + j
    grid: Grid
    d: float
    threshold: float

    @property
    def n(self):
        return self.A.shape[0]

    def node_shape(self):
        return (self.grid.ns + 1, self.grid.nu + 1)

    def expand(self, v):
        """Free-dof vector -> (ns+1, nu+1) node array with zeros on Dirichlet nodes."""
        full = np.zeros(np.prod(self.node_shape()))
        full[self.dof_map] = v
        return full.reshape(self.node_shape())

    def restrict(self, nodal):
        """(ns+1, nu+1) node array -> free-dof vector."""
        return np.asarray(nodal, dtype=float).reshape(-1)[self.dof_map]

    def interpolate(self, fn):
        """Nodal interpolant of fn(s, u) as a free-dof vector."""
        S, U = np.meshgrid(self.grid.s_nodes(), self.grid.u_nodes(self.d), indexing="ij")
        return self.restrict(fn(S, U))

    def coordinates(self):
        S, U = np.meshgrid(self.grid.s_nodes(), self.grid.u_nodes(self.d), indexing="ij")
        return S.reshape(-1)[self.dof_map], U.reshape(-1)[self.dof_map]


def _reference_basis():
    xi, eta = np.meshgrid(_GP, _GP, indexing="ij")
    xi, eta = xi.ravel(), eta.ravel()
    w = np.outer(_GW, _GW).ravel()
    # local node order: (i, j), (i+1, j), (i+1, j+1), (i, j+1)
    sx = np.array([-1.0, 1.0, 1.0, -1.0])
    sy = np.array([-1.0, -1.0, 1.0, 1.0])
    phi = 0.25 * (1 + np.outer(xi, sx)) * (1 + np.outer(eta, sy))
    dxi = 0.25 * sx[None, :] * (1 + np.outer(eta, sy))
    deta = 0.25 * (1 + np.outer(xi, sx)) * sy[None, :]
    return xi, eta, w, phi, dxi, deta


def _check_resolution(g: StripGeometry, grid: Grid):
    prof = g.profile
    if prof.kind == "zero":
        return
    if prof.kind == "two_bump":
        b = prof.params["breaks"]
        widths = [b[1] - b[0], b[3] - b[2]]
    elif prof.kind == "gaussian_bump":
        widths = [2.0 * prof.params["width"]]
    elif prof.compact:
        widths = [prof.support[1] - prof.support[0]]
    else:
        return
    if min(widths) < 8 * grid.hs - 1e-12:
        raise AssemblyError(
            f"grid spacing {grid.hs:.4g} gives fewer than 8 cells across a curvature bump "
            f"of width {min(widths):.4g}"
        )


def assemble(g: StripGeometry, grid: Grid, check_resolution: bool = True) -> FormPencil:
    """Assemble stiffness A and weighted mass M with 3x3 Gauss quadrature per cell."""
    if check_resolution:
        _check_resolution(g, grid)
    d = g.d
    ns, nu = grid.ns, grid.nu
    hs, hu = grid.hs, d / nu
    xi, eta, w, phi, dxi, deta = _reference_basis()
    s_nodes = grid.s_nodes()
    u_nodes = grid.u_nodes(d)

    # quadrature coordinates, shape (ns, 9) and (nu, 9)
    sq = s_nodes[:-1, None] + 0.5 * hs * (xi[None, :] + 1.0)
    uq = u_nodes[:-1, None] + 0.5 * hu * (eta[None, :] + 1.0)
    gam = g.profile.gamma(sq)
    metric = 1.0 - uq[None, :, :] * gam[:, None, :]  # (ns, nu, 9)
    if np.any(metric <= 0):
        raise AssemblyError("metric factor 1 - u*gamma <= 0 at a quadrature point")
    jac = 0.25 * hs * hu
    wm = (jac * w)[None, None, :] * metric
    ws = (jac * w)[None, None, :] / metric
    ds = dxi * (2.0 / hs)
    du = deta * (2.0 / hu)

    Ke = (np.einsum("xyq,qa,qb->xyab", ws, ds, ds)
          + np.einsum("xyq,qa,qb->xyab", wm, du, du))
    Me = np.einsum("xyq,qa,qb->xyab", wm, phi, phi)
    Ke = 0.5 * (Ke + Ke.transpose(0, 1, 3, 2))
    Me = 0.5 * (Me + Me.transpose(0, 1, 3, 2))

    i = np.arange(ns)[:, None]
    j = np.arange(nu)[None, :]
    stride = nu + 1
    conn = np.stack([i * stride + j, (i + 1) * stride + j,
                     (i + 1) * stride + j + 1, i * stride + j + 1], axis=-1).reshape(-1, 4)
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    nn = (ns + 1) * stride
    A = sp.coo_matrix((Ke.reshape(-1), (rows, cols)), shape=(nn, nn)).tocsr()
    M = sp.coo_matrix((Me.reshape(-1), (rows, cols)), shape=(nn, nn)).tocsr()

    fixed = np.zeros((ns + 1, nu + 1), dtype=bool)
    fixed[:, 0] = True
    if grid.trunc_bc == "dirichlet":
        fixed[0, :] = True
        fixed[-1, :] = True
    free = np.flatnonzero(~fixed.ravel())
    A = A[free][:, free]
    M = M[free][:, free]
    # exact symmetry regardless of duplicate-summation order
    A = ((A + A.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    A.sort_indices()
    M.sort_indices()
    return FormPencil(A, M, free, grid, d, threshold(d))


def dump_triplets(matrix, path):
    """Write a sparse matrix as ``row col value`` lines (0-based indices)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")


def load_triplets(path):
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
        nr, nc, nnz = map(int, header)
        data = np.loadtxt(fh, ndmin=2) if nnz else np.empty((0, 3))
    if data.size == 0:
        return sp.csr_matrix((nr, nc))
    return sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                         shape=(nr, nc)).tocsr()
