"""Coupling of element operators into one global mesh solve.

The global unknowns are the stacked per-element coefficient vectors plus
an interface vector holding solution values at the Chebyshev points of
every interior edge (n values per edge, blocks ordered by
:func:`ultrasem.mesh.order_interfaces`).  Element boundary rows tie each
element's trace to the interface values at the edge points the element
owns (all but the counterclockwise corner of each edge); interface rows
match normal derivatives across each edge, with the two endpoint rows
replaced by value continuity except where the mesh vertex list marks the
edge, which keeps the coupled system square and nonsingular.

Eliminating the element blocks yields the interface complement

    Sigma = - sum_j  A_gamma_j  inv(A_jj)  A_j_gamma

(the interface/interface block is zero), a banded matrix once interfaces
are ordered well.  Solving it gives the interface values; every element
solve then decouples and reuses its cached factorization.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import ultra
from ._linalg import BandedLU
from .element import (
    CoeffVector2D,
    assemble_element_operator,
    boundary_point_traversal,
    boundary_slots,
    element_rhs,
    element_rhs_operator,
    interior_slot_map,
    point_derivative_rows,
    point_value_row,
    outward_normal,
)
from .errors import BookkeepingError, SingularOperatorError
from .mesh import order_interfaces
from .quadmap import bilinear_coeffs, reference_corner
import scipy.sparse as sp


@dataclass
class InterfaceEdgeGeometry:
    """Geometry of one interior edge: endpoints ordered lower vertex
    number first, direction cosines of the edge, and the n interface
    Chebyshev points along it."""

    edge: int
    lo: np.ndarray
    hi: np.ndarray
    alpha: float
    beta: float
    params: np.ndarray
    points: np.ndarray

    @classmethod
    def build(cls, mesh, e, n):
        vlo, vhi = mesh.edges[e]
        p_lo, p_hi = mesh.vertices[vlo], mesh.vertices[vhi]
        d = p_hi - p_lo
        length = float(np.hypot(d[0], d[1]))
        t = ultra.cheb_points(n)
        pts = 0.5 * (p_lo + p_hi) + 0.5 * np.outer(t, d)
        return cls(edge=int(e), lo=p_lo, hi=p_hi,
                   alpha=float(d[0] / length), beta=float(d[1] / length),
                   params=t, points=pts)


def _edge_reference_point(local_edge, aligned, t):
    """Reference coordinates of the interface point with edge parameter
    ``t`` (measured from the lower-numbered endpoint) on a quad's local
    edge."""
    ca = reference_corner(local_edge)
    cb = reference_corner((local_edge + 1) % 4)
    tau = t if aligned else -t
    ref = 0.5 * (1 - tau) * ca + 0.5 * (1 + tau) * cb
    return float(ref[0]), float(ref[1])


def _normal_derivative_row(bm, n, r, s, alpha, beta):
    ux, uy = point_derivative_rows(bm, n, r, s)
    return beta * ux - alpha * uy


class SchurSystem:
    """Factored global solver for one mesh, operator and resolution."""

    def __init__(self, mesh, pde, n, bc=None, pin_value_point=False):
        self.mesh = mesh
        self.pde = pde
        self.n = int(n)
        n_int = mesh.n_interior_edges
        self.block_pos = order_interfaces(mesh)
        self.n_gamma = self.n * n_int
        self._iedge_index = {int(e): k for k, e in enumerate(mesh.interior_edges)}
        self.geometry = [InterfaceEdgeGeometry.build(mesh, e, self.n)
                         for e in mesh.interior_edges]

        bc = dict(bc or {})
        for e in range(mesh.n_edges):
            if mesh.boundary_edge[e]:
                bc.setdefault(e, "dirichlet")
            elif e in bc:
                raise BookkeepingError(f"edge {e} is interior, not a boundary edge")
        self.bc = bc
        self._pin = pin_value_point and not any(
            v == "dirichlet" for k, v in bc.items() if mesh.boundary_edge[k])

        self._build_elements()
        self._build_gamma_rows()
        self._check_counts()
        self._build_sigma()

    # -- element operators and coupling --------------------------------

    def gamma_col(self, e, m):
        """Interface unknown index of point ``m`` on interior edge ``e``."""
        return self.n * int(self.block_pos[self._iedge_index[int(e)]]) + int(m)

    def _build_elements(self):
        mesh, n = self.mesh, self.n
        self.maps = [bilinear_coeffs(mesh.element_quad(f)) for f in range(mesh.n_quads)]
        self.rhs_ops = [element_rhs_operator(mesh.element_quad(f), n)
                        for f in range(mesh.n_quads)]
        self.ops = []
        self.coupling = []   # per element: (slots, gamma cols) arrays
        self.data_points = []  # per element: list of (slot, kind, edge, x, y)
        slots_all = boundary_slots(n)
        trav = boundary_point_traversal(n)
        pinned = False
        coupling_count = np.zeros(self.n_gamma, dtype=int)

        for f in range(mesh.n_quads):
            quad = mesh.element_quad(f)
            bm = self.maps[f]
            rows = np.empty((4 * n - 4, n * n))
            c_slots, c_cols = [], []
            dpts = []
            for k, (l, a, r, s) in enumerate(trav):
                e = mesh.local_edge(f, l)
                slot = slots_all[k]
                if not mesh.boundary_edge[e]:
                    aligned = mesh.quad_edge_aligned[f, l]
                    m = a if aligned else n - 1 - a
                    rows[k] = point_value_row(n, r, s)
                    c_slots.append(slot)
                    c_cols.append(self.gamma_col(e, m))
                elif self.bc[e] == "neumann" and not (self._pin and not pinned):
                    nx, ny = outward_normal(quad, l)
                    ux, uy = point_derivative_rows(bm, n, r, s)
                    rows[k] = nx * ux + ny * uy
                    x, y = bm(r, s)
                    dpts.append((slot, "neumann", e, float(x), float(y)))
                else:
                    rows[k] = point_value_row(n, r, s)
                    x, y = bm(r, s)
                    kind = "dirichlet"
                    if self.bc[e] == "neumann":  # pinned point of an all-Neumann solve
                        kind = "pin"
                        pinned = True
                    dpts.append((slot, kind, e, float(x), float(y)))
            op = assemble_element_operator(self.pde, quad, n, rows=rows)
            self.ops.append(op)
            c_slots = np.asarray(c_slots, dtype=int)
            c_cols = np.asarray(c_cols, dtype=int)
            coupling_count[c_cols] += 1
            self.coupling.append((c_slots, c_cols))
            self.data_points.append(dpts)

        if self.n_gamma:
            interior_pts = np.ones(self.n_gamma, dtype=bool)
            ends = []
            for k in range(len(self.mesh.interior_edges)):
                base = self.n * self.block_pos[k]
                ends += [base, base + self.n - 1]
            interior_pts[ends] = False
            if not (np.all(coupling_count[interior_pts] == 2)
                    and np.all(coupling_count[~interior_pts] == 1)):
                raise BookkeepingError(
                    "corner-exclusion rule failed to cover the interface points")

    def element_interface_columns(self, f, e=None):
        """Coupling of element ``f`` into the interface vector: arrays
        ``(slots, gamma_cols, values)``; restricted to interior edge ``e``
        when given."""
        slots, cols = self.coupling[f]
        vals = -self.ops[f].scale[slots] if slots.size else np.zeros(0)
        if e is not None:
            base = self.gamma_col(e, 0)
            mask = (cols >= base) & (cols < base + self.n)
            return slots[mask], cols[mask], vals[mask]
        return slots, cols, vals

    # -- interface matching rows ----------------------------------------

    def _build_gamma_rows(self):
        mesh, n = self.mesh, self.n
        # per element: list of (first gamma row, sign, dense (n, n^2) block)
        self.gamma_blocks = [[] for _ in range(mesh.n_quads)]
        for k, e in enumerate(mesh.interior_edges):
            geom = self.geometry[k]
            base = n * self.block_pos[k]
            sides = mesh.edge_quads[e]  # two (quad, local edge, aligned), quad ascending
            blocks = [np.empty((n, n * n)), np.empty((n, n * n))]
            vlo, vhi = mesh.edges[e]
            for m in range(n):
                t = geom.params[m]
                endpoint = None
                if m == 0:
                    endpoint = vlo
                elif m == n - 1:
                    endpoint = vhi
                use_derivative = endpoint is None or (
                    not mesh.boundary_vertex[endpoint]
                    and mesh.vertex_edge[endpoint] == e)
                for side, (f, l, aligned) in enumerate(sides):
                    r, s = _edge_reference_point(l, aligned, t)
                    if use_derivative:
                        row = _normal_derivative_row(self.maps[f], n, r, s,
                                                     geom.alpha, geom.beta)
                    else:
                        row = point_value_row(n, r, s)
                    blocks[side][m] = row if side == 0 else -row
                # one shared scale per matching row keeps it one equation
                sup = max(np.abs(blocks[0][m]).max(), np.abs(blocks[1][m]).max())
                blocks[0][m] /= sup
                blocks[1][m] /= sup
            for side, (f, l, aligned) in enumerate(sides):
                self.gamma_blocks[f].append((base, blocks[side]))

    def interface_matching_rows(self, e):
        """The two dense row blocks (for the lower- and higher-numbered
        incident element) matching derivatives/values across edge ``e``."""
        k = self._iedge_index[int(e)]
        base = self.n * self.block_pos[k]
        out = []
        for f, blocks in enumerate(self.gamma_blocks):
            for b, rows in blocks:
                if b == base:
                    out.append((f, rows))
        return out

    # -- bookkeeping assertions ------------------------------------------

    def _check_counts(self):
        # every element contributes n^2 rows, every interior edge n rows;
        # matching blocks must come in pairs covering each edge once
        n, mesh = self.n, self.mesh
        n_blocks = sum(len(blocks) for blocks in self.gamma_blocks)
        if n_blocks * n != 2 * self.n_gamma:
            raise BookkeepingError("interface matching rows do not pair up")

    # -- Schur complement --------------------------------------------------

    def _build_sigma(self):
        n = self.n
        self.W = []
        if self.n_gamma == 0:
            self.sigma = None
            self._sigma_solve = None
            self.sigma_bandwidth = 0
            return
        sigma = np.zeros((self.n_gamma, self.n_gamma))
        for f, op in enumerate(self.ops):
            slots, cols = self.coupling[f]
            if slots.size == 0 and not self.gamma_blocks[f]:
                self.W.append(None)
                continue
            rhs = np.zeros((n * n, slots.size))
            rhs[slots, np.arange(slots.size)] = -op.scale[slots]
            W = op.solve_raw(rhs) if slots.size else np.zeros((n * n, 0))
            self.W.append(W)
            for base, rows in self.gamma_blocks[f]:
                contrib = rows @ W
                sigma[base:base + n][:, cols] -= contrib
        # Sigma = -sum A_gamma_j inv(A_jj) A_j_gamma; signs folded above
        self.sigma = sigma
        nz = np.nonzero(sigma)
        self.sigma_bandwidth = int(np.max(np.abs(nz[0] - nz[1]))) if nz[0].size else 0
        from .mesh import interface_bandwidth

        bound = (interface_bandwidth(self.mesh, self.block_pos) + 1) * n
        if self.sigma_bandwidth >= bound:
            raise BookkeepingError(
                f"interface complement bandwidth {self.sigma_bandwidth} "
                f"exceeds the ordering bound {bound}")
        try:
            if self.n_gamma <= 400:
                self._sigma_lu = lu_factor(sigma)
                self._sigma_solve = lambda b: lu_solve(self._sigma_lu, b)
            else:
                banded = BandedLU(sp.csr_matrix(sigma), name="interface complement")
                self._sigma_solve = banded.solve
        except SingularOperatorError as exc:
            raise SingularOperatorError(
                "interface complement is singular; likely redundant interface "
                "constraints or an all-Neumann problem without a pinned value"
            ) from exc

    # -- right-hand sides and solving --------------------------------------

    def _per_element_source(self, f):
        """Normalize the forcing argument to a per-element list (entries are
        callables of (x, y), n-by-n value grids, or None)."""
        if f is None or callable(f):
            return [f] * self.mesh.n_quads
        f = list(f)
        if len(f) != self.mesh.n_quads:
            raise ValueError("need one forcing grid per element")
        return f

    def _element_rhs_vector(self, f, fsrc, dirichlet, neumann):
        n, mesh = self.n, self.mesh
        b = np.zeros(n * n)
        if fsrc is not None:
            vals = element_rhs(mesh.element_quad(f), n, fsrc,
                               rhs_op=self.rhs_ops[f])
            src = (np.arange(n - 2)[:, None]
                   + n * np.arange(n - 2)[None, :]).ravel(order="F")
            b[interior_slot_map(n)] = vals[src]
        for slot, kind, e, x, y in self.data_points[f]:
            if kind == "pin":
                b[slot] = 0.0
            elif kind == "dirichlet":
                b[slot] = _bc_value(dirichlet, e, x, y)
            else:
                b[slot] = _bc_value(neumann, e, x, y)
        return b

    def solve(self, f=None, dirichlet=0.0, neumann=0.0, return_info=False):
        """Solve the PDE on the whole mesh.

        ``f`` is a callable of physical coordinates, a list of per-element
        n-by-n value grids, or None (zero).  ``dirichlet``/``neumann``
        supply boundary data as a constant, a callable ``(x, y)``, or a
        dict mapping global boundary edge numbers to either.
        Returns a list of per-element :class:`CoeffVector2D`.
        """
        n, mesh = self.n, self.mesh
        sources = self._per_element_source(f)
        bvecs, x0 = [], []
        rhs_gamma = np.zeros(self.n_gamma)
        for fidx, op in enumerate(self.ops):
            b = self._element_rhs_vector(fidx, sources[fidx], dirichlet, neumann)
            bvecs.append(b)
            xf = op.solve(b)
            x0.append(xf)
            for base, rows in self.gamma_blocks[fidx]:
                rhs_gamma[base:base + n] -= rows @ xf
        if self.n_gamma:
            u_gamma = self._sigma_solve(rhs_gamma)
        else:
            u_gamma = np.zeros(0)
        sols = []
        for fidx, op in enumerate(self.ops):
            slots, cols = self.coupling[fidx]
            x = x0[fidx]
            if slots.size:
                x = x - self.W[fidx] @ u_gamma[cols]
            sols.append(CoeffVector2D(n, x))
        if not return_info:
            return sols
        info = SolveInfo(u_gamma=u_gamma,
                         residual=self._residual(sols, u_gamma, bvecs))
        return sols, info

    def _residual(self, sols, u_gamma, bvecs):
        n = self.n
        top = 0.0
        scale_ref = 1.0
        for fidx, op in enumerate(self.ops):
            slots, cols = self.coupling[fidx]
            r = op.matvec(sols[fidx].data) - op.scale * bvecs[fidx]
            if slots.size:
                r[slots] -= op.scale[slots] * u_gamma[cols]
            top = max(top, np.abs(r).max())
            scale_ref = max(scale_ref, np.abs(op.scale * bvecs[fidx]).max())
        gam = np.zeros(self.n_gamma)
        for fidx in range(self.mesh.n_quads):
            for base, rows in self.gamma_blocks[fidx]:
                gam[base:base + n] += rows @ sols[fidx].data
        if self.n_gamma:
            top = max(top, np.abs(gam).max())
        return top / scale_ref

    # -- dense oracle -------------------------------------------------------

    def to_dense_global(self):
        """Dense monolithic matrix of the full coupled system, ordered as
        element blocks then interface unknowns.  Built from the same rows
        but solved without the Schur elimination; used as an oracle."""
        n, mesh = self.n, self.mesh
        N = mesh.n_quads * n * n + self.n_gamma
        G = np.zeros((N, N))
        for f, op in enumerate(self.ops):
            o = f * n * n
            G[o:o + n * n, o:o + n * n] = op.to_dense()
            slots, cols = self.coupling[f]
            if slots.size:
                G[o + slots, mesh.n_quads * n * n + cols] = -op.scale[slots]
            for base, rows in self.gamma_blocks[f]:
                G[mesh.n_quads * n * n + base: mesh.n_quads * n * n + base + n,
                  o:o + n * n] = rows
        return G

    def solve_dense(self, f=None, dirichlet=0.0, neumann=0.0):
        """Solve through the dense monolithic matrix (oracle path)."""
        n, mesh = self.n, self.mesh
        sources = self._per_element_source(f)
        G = self.to_dense_global()
        rhs = np.zeros(G.shape[0])
        for fidx, op in enumerate(self.ops):
            b = self._element_rhs_vector(fidx, sources[fidx], dirichlet, neumann)
            rhs[fidx * n * n:(fidx + 1) * n * n] = op.scale * b
        x = np.linalg.solve(G, rhs)
        return [CoeffVector2D(n, x[fidx * n * n:(fidx + 1) * n * n])
                for fidx in range(mesh.n_quads)]


@dataclass
class SolveInfo:
    u_gamma: np.ndarray
    residual: float


def _bc_value(src, e, x, y):
    if isinstance(src, dict):
        src = src.get(e, 0.0)
    if callable(src):
        return float(src(x, y))
    return float(src)


def assemble_schur(mesh, pde, n, bc=None, pin_value_point=False):
    """Assemble and factor the coupled mesh solver (element operators,
    coupling blocks and the banded interface complement)."""
    return SchurSystem(mesh, pde, n, bc=bc, pin_value_point=pin_value_point)


def solve_mesh(system, f=None, dirichlet=0.0, neumann=0.0, **kw):
    """Two-phase solve: interface values first, then the independent
    per-element back-substitutions."""
    return system.solve(f=f, dirichlet=dirichlet, neumann=neumann, **kw)
