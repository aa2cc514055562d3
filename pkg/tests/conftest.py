import numpy as np
import pytest

from ultrasem.mesh import build_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_convex_quad(rng, scale=1.0, center=(0.0, 0.0)):
    """Four points in convex position, counterclockwise, via rejection."""
    while True:
        pts = rng.uniform(-1.0, 1.0, size=(4, 2))
        hull = _hull(pts)
        if len(hull) == 4:
            v = pts[hull] * scale + np.asarray(center)
            # require some thickness so tests stay well scaled
            area = _area(v)
            if area > 0.05 * scale * scale:
                return v


def _area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _hull(pts):
    """Indices of the convex hull in counterclockwise order (gift wrap)."""
    idx = sorted(range(len(pts)), key=lambda k: (pts[k][0], pts[k][1]))
    start = idx[0]
    hull = [start]
    while True:
        cur = hull[-1]
        cand = None
        for k in range(len(pts)):
            if k == cur:
                continue
            if cand is None:
                cand = k
                continue
            a = pts[cand] - pts[cur]
            b = pts[k] - pts[cur]
            cr = a[0] * b[1] - a[1] * b[0]
            if cr < 0 or (cr == 0 and np.linalg.norm(pts[k] - pts[cur]) >
                          np.linalg.norm(pts[cand] - pts[cur])):
                cand = k
        if cand == start:
            break
        hull.append(cand)
        if len(hull) > len(pts):
            break
    return hull


def skinny_pair_mesh(eps):
    """Square [-1,1]^2 with a convex sliver of skinniness ~eps attached to
    its right edge (the overlapping figure configuration made planar)."""
    verts = [(-1, -1), (1, -1), (1, 1), (-1, 1),
             (1 + 2 * eps, -0.9), (1 + eps, 0.9)]
    quads = [(0, 1, 2, 3), (2, 1, 4, 5)]
    return build_mesh(verts, quads)


def eval_on_grid(system, sols, fn, m=25):
    """Max abs difference between a mesh solution and fn on sampled grids."""
    t = np.linspace(-1, 1, m)
    R, S = np.meshgrid(t, t)
    err = 0.0
    for k, s in enumerate(sols):
        X, Y = system.maps[k](R, S)
        err = max(err, np.max(np.abs(s.eval(R, S) - fn(X, Y))))
    return err
