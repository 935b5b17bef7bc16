"""Triangle meshes of qubit confidence regions (polytope clipped to the Bloch ball)."""

from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import EmptyRegion, NonQubit

TOL = 1e-9
ANGLE_STEP = np.deg2rad(5.0)


def _feasible(A, b, pts, tol=TOL):
    if len(A) == 0:
        return np.ones(len(pts), dtype=bool)
    return np.all(pts @ A.T <= b + tol, axis=1)


def polytope_vertices(A, b):
    """Vertices of ``{r : A r <= b}`` in 3-D by intersecting triples of planes."""
    verts = []
    for i, j, k in combinations(range(len(A)), 3):
        M = A[[i, j, k]]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b[[i, j, k]])
        if _feasible(A, b, v[None, :])[0]:
            verts.append(v)
    if not verts:
        return np.zeros((0, 3))
    return _dedupe(np.array(verts))


def _dedupe(pts, tol=1e-9):
    keep = np.ones(len(pts), dtype=bool)
    for i, j in sorted(cKDTree(pts).query_pairs(tol)):
        if keep[i]:
            keep[j] = False
    return pts[keep]


def _sphere_grid():
    pts = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
    for theta in np.arange(ANGLE_STEP, np.pi - ANGLE_STEP / 2, ANGLE_STEP):
        for phi in np.arange(0.0, 2 * np.pi - ANGLE_STEP / 2, ANGLE_STEP):
            pts.append([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    return np.array(pts)


def _plane_circle(a, b):
    """Points where the plane ``a . r = b`` meets the unit sphere."""
    na = np.linalg.norm(a)
    dist = b / na
    if abs(dist) >= 1.0:
        return np.zeros((0, 3))
    n = a / na
    rad = np.sqrt(1.0 - dist**2)
    helper = np.eye(3)[np.argmin(np.abs(n))]
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    w = np.cross(n, u)
    phis = np.arange(0.0, 2 * np.pi - ANGLE_STEP / 2, ANGLE_STEP)
    return dist * n + rad * (np.outer(np.cos(phis), u) + np.outer(np.sin(phis), w))


def mesh_qubit_polytope(poly):
    """Outward-oriented triangle mesh of ``poly`` intersected with the Bloch ball.

    Returns ``{"vertices": [[x, y, z], ...], "triangles": [[i, j, k], ...]}``.
    Curved parts of the boundary are sampled on a 5 degree grid, including
    the circles where facet planes leave the ball.
    """
    if poly.dim != 2:
        raise NonQubit(f"mesh export needs a qubit polytope, got d={poly.dim}")
    A, b = poly.active()
    verts = polytope_vertices(A, b)
    if len(verts):
        verts = verts[np.linalg.norm(verts, axis=1) <= 1.0 + TOL]
    sphere = _sphere_grid()
    extra = [sphere[_feasible(A, b, sphere)]]
    for a, off in zip(A, b):
        circ = _plane_circle(a, off)
        if len(circ):
            extra.append(circ[_feasible(A, b, circ)])
    pts = np.vstack([verts.reshape(-1, 3)] + extra)
    if len(pts) < 4:
        raise EmptyRegion("region is empty or degenerate; nothing to mesh")
    pts = _dedupe(pts)
    hull = ConvexHull(pts)
    used = np.unique(hull.simplices)
    remap = {int(old): new for new, old in enumerate(used)}
    out_pts = pts[used]
    centroid = out_pts.mean(axis=0)
    tris = []
    for simplex in hull.simplices:
        i, j, k = (remap[int(s)] for s in simplex)
        p0, p1, p2 = out_pts[i], out_pts[j], out_pts[k]
        if np.dot(np.cross(p1 - p0, p2 - p0), p0 - centroid) < 0:
            j, k = k, j
        tris.append([i, j, k])
    return {
        "vertices": [[float(v) for v in p] for p in out_pts],
        "triangles": tris,
    }
