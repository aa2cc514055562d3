"""Quadrilateral mesh bookkeeping.

Meshes are conforming collections of counterclockwise quadrilaterals.
Every quad, vertex and edge carries a global number; edges also have
local addresses (quad number, local edge 0..3, where local edge ``l``
runs from the quad's vertex ``l`` to vertex ``l+1``).  Each interior
vertex is assigned one incident interior edge; that assignment decides
which interface keeps a derivative-matching condition at the vertex
instead of a value-continuity condition, which keeps the coupled system
nonsingular where several elements meet.

The text format is line oriented::

    quadmesh 1
    # comment
    v x y
    q i1 i2 i3 i4      (1-based vertex numbers, counterclockwise)
    t i1 i2 i3         (triangle; split into 3 quads on read)
"""

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .errors import GeometryError, MeshError, MeshFormatError
from .quadmap import Quad


class QuadMesh:
    """Immutable mesh with full local/global edge bookkeeping."""

    def __init__(self, vertices, quads):
        self.vertices = np.asarray(vertices, dtype=float)
        self.quads = np.asarray(quads, dtype=int)
        self._build()

    # -- construction -------------------------------------------------

    def _build(self):
        V, F = len(self.vertices), len(self.quads)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (V, 2) array")
        if self.quads.ndim != 2 or self.quads.shape[1] != 4:
            raise MeshError("quads must be an (F, 4) array of vertex numbers")
        if F == 0:
            raise MeshError("mesh has no elements")
        if self.quads.min(initial=0) < 0 or self.quads.max(initial=-1) >= V:
            raise MeshError("quad vertex number out of range")

        for f, q in enumerate(self.quads):
            if len(set(q.tolist())) != 4:
                raise MeshError(f"quad {f} repeats a vertex")
            x, y = self.vertices[q, 0], self.vertices[q, 1]
            area2 = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
            if area2 <= 0.0:
                raise MeshError(f"quad {f} is clockwise or degenerate")

        edge_ids = {}
        edges = []
        edge_quads = []  # per edge: list of (quad, local_edge, aligned)
        self.quad_edge = np.empty((F, 4), dtype=int)
        self.quad_edge_aligned = np.empty((F, 4), dtype=bool)
        for f, q in enumerate(self.quads):
            seen = set()
            for l in range(4):
                a, b = int(q[l]), int(q[(l + 1) % 4])
                key = (min(a, b), max(a, b))
                if key in seen:
                    raise MeshError(f"quad {f} uses edge {key} twice")
                seen.add(key)
                e = edge_ids.get(key)
                if e is None:
                    e = len(edges)
                    edge_ids[key] = e
                    edges.append(key)
                    edge_quads.append([])
                if len(edge_quads[e]) == 2:
                    raise MeshError(
                        f"edge {key} is shared by more than two quads (nonconforming)")
                aligned = a == key[0]
                if edge_quads[e] and edge_quads[e][0][2] == aligned:
                    raise MeshError(
                        f"edge {key} is traversed twice in the same direction "
                        f"(orientation conflict between quads "
                        f"{edge_quads[e][0][0]} and {f})")
                edge_quads[e].append((f, l, aligned))
                self.quad_edge[f, l] = e
                self.quad_edge_aligned[f, l] = aligned

        self.edges = np.array(edges, dtype=int)
        self.edge_quads = edge_quads
        self.boundary_edge = np.array([len(eq) == 1 for eq in edge_quads])
        used = np.zeros(V, dtype=bool)
        used[self.quads.ravel()] = True
        if not used.all():
            raise MeshError(f"vertex {int(np.argmin(used))} is not used by any quad")

        self.boundary_vertex = np.zeros(V, dtype=bool)
        for e in np.nonzero(self.boundary_edge)[0]:
            self.boundary_vertex[self.edges[e]] = True

        self.interior_edges = np.nonzero(~self.boundary_edge)[0]
        # vertex list: each interior vertex gets its smallest-numbered
        # incident interior edge
        self.vertex_edge = np.full(V, -1, dtype=int)
        for e in self.interior_edges:
            for v in self.edges[e]:
                if not self.boundary_vertex[v] and (
                        self.vertex_edge[v] == -1 or e < self.vertex_edge[v]):
                    self.vertex_edge[v] = e

    # -- queries -------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_quads(self):
        return len(self.quads)

    @property
    def n_interior_edges(self):
        return len(self.interior_edges)

    def element_quad(self, f):
        """Geometry of element ``f`` as a :class:`Quad`."""
        return Quad(self.vertices[self.quads[f]])

    def local_edge(self, f, l):
        """Global edge number of local edge ``l`` of quad ``f``."""
        return int(self.quad_edge[f, l])

    def global_edge_location(self, e):
        """All local addresses ``(quad, local_edge)`` of global edge ``e``."""
        return [(f, l) for (f, l, _) in self.edge_quads[e]]

    def __repr__(self):
        return (f"QuadMesh(V={self.n_vertices}, E={self.n_edges}, "
                f"F={self.n_quads}, interior_edges={self.n_interior_edges})")


def build_mesh(vertices, quads):
    """Validate and index a mesh from vertex coordinates and quad lists."""
    return QuadMesh(vertices, quads)


# ----------------------------------------------------------------------
# triangle splitting


def split_triangle(v1, v2, v3):
    """Split a counterclockwise triangle into 3 quadrilaterals along the
    segments joining the edge midpoints to the centroid.  Quad ``k``
    contains triangle vertex ``k`` and is counterclockwise."""
    p = np.array([v1, v2, v3], dtype=float)
    area2 = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - \
            (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
    if area2 <= 0.0:
        raise GeometryError("triangle vertices are collinear or clockwise")
    centroid = (p[0] + p[1] + p[2]) / 3.0
    mids = {(a, b): (p[a] + p[b]) / 2.0 for a, b in ((0, 1), (1, 2), (2, 0))}
    quads = []
    for k in range(3):
        m_prev = mids[((k + 2) % 3, k) if ((k + 2) % 3, k) in mids else (k, (k + 2) % 3)]
        m_next = mids[(k, (k + 1) % 3) if (k, (k + 1) % 3) in mids else ((k + 1) % 3, k)]
        quads.append(Quad([p[k], m_next, centroid, m_prev]))
    return quads


# ----------------------------------------------------------------------
# interface ordering


def _edge_adjacency(mesh):
    pos = {int(e): k for k, e in enumerate(mesh.interior_edges)}
    m = len(pos)
    pairs = set()
    for f in range(mesh.n_quads):
        local = [pos[int(e)] for e in mesh.quad_edge[f] if int(e) in pos]
        for i in range(len(local)):
            for j in range(i + 1, len(local)):
                pairs.add((min(local[i], local[j]), max(local[i], local[j])))
    return m, sorted(pairs)


def _bandwidth_of(pairs, order_pos):
    return max((abs(order_pos[a] - order_pos[b]) for a, b in pairs), default=0)


def _exact_min_bandwidth(m, pairs, upper):
    """Smallest achievable bandwidth ordering by backtracking; feasible for
    small interface counts only.  Returns a position array or None."""
    adj = [set() for _ in range(m)]
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    best = None
    lo = max((len(a) + 1) // 2 for a in adj) if pairs else 0
    for k in range(lo, upper):
        placed = np.full(m, -1, dtype=int)
        chosen = []

        def feasible(p):
            if p == m:
                return True
            for v in range(m):
                if placed[v] >= 0:
                    continue
                if any(placed[w] >= 0 and p - placed[w] > k for w in adj[v]):
                    continue
                # a node placed at or before p-k may not have unplaced
                # neighbors left (other than v, placed at p right now)
                ok = True
                for u in chosen:
                    if placed[u] <= p - k and any(
                            placed[w] < 0 and w != v for w in adj[u]):
                        ok = False
                        break
                if not ok:
                    continue
                placed[v] = p
                chosen.append(v)
                if feasible(p + 1):
                    return True
                chosen.pop()
                placed[v] = -1
            return False

        if feasible(0):
            best = placed.copy()
            break
    return best


def order_interfaces(mesh, exact_limit=13):
    """Deterministic renumbering of interior edges that keeps interfaces
    sharing a quad close together, bounding the interface-complement
    bandwidth by ``(max |a - b| + 1) n``.

    Reverse Cuthill-McKee on the interface adjacency graph (interfaces are
    adjacent when a quad contains both); for meshes with at most
    ``exact_limit`` interior edges the ordering is refined to the exact
    minimum by backtracking search.

    Returns an array ``pos`` with the new block position of each interior
    edge (indexed like ``mesh.interior_edges``).
    """
    m, pairs = _edge_adjacency(mesh)
    if m == 0:
        return np.zeros(0, dtype=int)
    rows = [a for a, b in pairs] + [b for a, b in pairs]
    cols = [b for a, b in pairs] + [a for a, b in pairs]
    g = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    order = reverse_cuthill_mckee(g, symmetric_mode=True)
    pos = np.empty(m, dtype=int)
    pos[order] = np.arange(m)
    bw = _bandwidth_of(pairs, pos)
    if m <= exact_limit and bw > 0:
        better = _exact_min_bandwidth(m, pairs, bw)
        if better is not None:
            pos = better
    return pos


def interface_bandwidth(mesh, pos=None):
    """``max |a - b|`` over interface pairs sharing a quad for a given
    ordering (defaults to :func:`order_interfaces`)."""
    if pos is None:
        pos = order_interfaces(mesh)
    _, pairs = _edge_adjacency(mesh)
    return _bandwidth_of(pairs, pos)


# ----------------------------------------------------------------------
# quality metrics


def _inradius(quad):
    # Chebyshev center of the convex quad: maximize t subject to
    # n_i . c + t <= n_i . p_i with inward unit normals n_i
    v = quad.vertices
    A, b = [], []
    for k in range(4):
        p, q = v[k], v[(k + 1) % 4]
        t = q - p
        nrm = np.hypot(t[0], t[1])
        inward = np.array([-t[1], t[0]]) / nrm
        A.append([-inward[0], -inward[1], 1.0])
        b.append(-inward @ p)
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A, b_ub=b,
                  bounds=[(None, None), (None, None), (0, None)],
                  method="highs")
    if not res.success:
        raise GeometryError("inradius computation failed")
    return float(res.x[2])


def _circumradius(points):
    # min enclosing circle of <= 4 points: try pair diameters, then
    # circumcircles of triples; pick the smallest covering circle
    pts = np.asarray(points, dtype=float)
    best = None
    m = len(pts)
    eps = 1e-12

    def covers(c, r):
        return np.all(np.hypot(*(pts - c).T) <= r * (1 + 1e-12) + 1e-300)

    for i in range(m):
        for j in range(i + 1, m):
            c = 0.5 * (pts[i] + pts[j])
            r = 0.5 * np.hypot(*(pts[i] - pts[j]))
            if covers(c, r) and (best is None or r < best[1]):
                best = (c, r)
    if best is not None:
        return float(best[1])
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                ax, ay = pts[i]
                bx, by = pts[j]
                cx, cy = pts[k]
                d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
                if abs(d) < eps * max(1.0, abs(ax), abs(bx), abs(cx)):
                    continue
                ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2) * (cy - ay)
                      + (cx ** 2 + cy ** 2) * (ay - by)) / d
                uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2) * (ax - cx)
                      + (cx ** 2 + cy ** 2) * (bx - ax)) / d
                c = np.array([ux, uy])
                r = np.hypot(*(pts[i] - c))
                if covers(c, r) and (best is None or r < best[1]):
                    best = (c, r)
    if best is None:
        raise GeometryError("could not enclose the element in a circle")
    return float(best[1])


@dataclass
class MeshQuality:
    """Per-element inradius, min-containment radius and skinniness."""

    r_in: np.ndarray
    r_out: np.ndarray

    @property
    def skinniness(self):
        return self.r_in / self.r_out


def quality(mesh):
    """Inradius, min-containment radius and skinniness of every element."""
    r_in = np.empty(mesh.n_quads)
    r_out = np.empty(mesh.n_quads)
    for f in range(mesh.n_quads):
        q = mesh.element_quad(f)  # raises GeometryError if nonconvex
        r_in[f] = _inradius(q)
        r_out[f] = _circumradius(q.vertices)
    return MeshQuality(r_in=r_in, r_out=r_out)


# ----------------------------------------------------------------------
# text format


def mesh_from_string(text, name="<string>"):
    vertices = []
    elements = []  # ("q"|"t", indices, line_no)
    header_seen = False
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not header_seen:
            if parts != ["quadmesh", "1"]:
                raise MeshFormatError(f"expected header 'quadmesh 1' in {name}", ln)
            header_seen = True
            continue
        tag = parts[0]
        if tag == "v":
            if len(parts) != 3:
                raise MeshFormatError("vertex line needs 'v x y'", ln)
            try:
                vertices.append((float(parts[1]), float(parts[2])))
            except ValueError:
                raise MeshFormatError("vertex coordinates must be numbers", ln)
        elif tag in ("q", "t"):
            want = 5 if tag == "q" else 4
            if len(parts) != want:
                raise MeshFormatError(
                    f"'{tag}' line needs {want - 1} vertex numbers", ln)
            try:
                idx = [int(p) - 1 for p in parts[1:]]
            except ValueError:
                raise MeshFormatError("vertex numbers must be integers", ln)
            if any(i < 0 for i in idx):
                raise MeshFormatError("vertex numbers are 1-based", ln)
            elements.append((tag, idx, ln))
        else:
            raise MeshFormatError(f"unknown record '{tag}'", ln)
    if not header_seen:
        raise MeshFormatError(f"empty mesh file {name}", 1)

    vertices = [np.asarray(v, dtype=float) for v in vertices]
    n_declared = len(vertices)
    quads = []
    extra = {}  # exact-coordinate key -> new vertex index

    def add_vertex(p):
        key = (float(p[0]), float(p[1]))
        if key in extra:
            return extra[key]
        vertices.append(np.asarray(p, dtype=float))
        extra[key] = len(vertices) - 1
        return extra[key]

    for tag, idx, ln in elements:
        if max(idx) >= n_declared:
            raise MeshFormatError(f"vertex number {max(idx) + 1} undefined", ln)
        if tag == "q":
            quads.append(idx)
        else:
            i1, i2, i3 = idx
            p = [vertices[i1], vertices[i2], vertices[i3]]
            try:
                split_triangle(*p)
            except GeometryError as exc:
                raise MeshFormatError(str(exc), ln)
            # shared midpoints must dedupe exactly: compute from the sorted
            # vertex pair so both neighbors produce bit-identical points
            def midpoint(a, b):
                lo, hi = (a, b) if a < b else (b, a)
                return add_vertex((vertices[lo] + vertices[hi]) / 2.0)

            m12 = midpoint(i1, i2)
            m23 = midpoint(i2, i3)
            m31 = midpoint(i3, i1)
            g = add_vertex((vertices[i1] + vertices[i2] + vertices[i3]) / 3.0)
            quads.append([i1, m12, g, m31])
            quads.append([i2, m23, g, m12])
            quads.append([i3, m31, g, m23])

    try:
        return build_mesh(np.array(vertices), np.array(quads, dtype=int))
    except MeshError as exc:
        raise MeshFormatError(str(exc), None) from exc


def read_mesh(path):
    """Read a mesh file (see the module docstring for the format)."""
    with open(path, "r", encoding="utf-8") as fh:
        return mesh_from_string(fh.read(), name=str(path))


def mesh_to_string(mesh):
    """Canonical text form: header, vertices in order, then quads."""
    out = io.StringIO()
    out.write("quadmesh 1\n")
    for x, y in mesh.vertices:
        out.write(f"v {x:.17g} {y:.17g}\n")
    for q in mesh.quads:
        out.write("q " + " ".join(str(int(i) + 1) for i in q) + "\n")
    return out.getvalue()


def write_mesh(mesh, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(mesh_to_string(mesh))


# ----------------------------------------------------------------------
# structured helpers used by demos and tests


def grid_mesh(nx, ny, x0=0.0, y0=0.0, width=1.0, height=1.0, skip=()):
    """Mesh of ``nx * ny`` axis-aligned rectangles; ``skip`` removes cells
    by ``(col, row)`` index (leaving a hole)."""
    xs = x0 + width * np.arange(nx + 1) / nx
    ys = y0 + height * np.arange(ny + 1) / ny
    vid = {}
    vertices = []

    def v(i, j):
        if (i, j) not in vid:
            vid[(i, j)] = len(vertices)
            vertices.append((xs[i], ys[j]))
        return vid[(i, j)]

    quads = []
    for j in range(ny):
        for i in range(nx):
            if (i, j) in skip:
                continue
            quads.append([v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)])
    return build_mesh(np.array(vertices), np.array(quads, dtype=int))
