"""Lowest-order VEM projector onto affine fields and its centroid fan extension.

Element dofs are vertex-major, ``u = [u0x, u0y, u1x, u1y, ...]``. A 2x2
gradient ``H[a, b] = d u_a / d x_b`` is flattened row-major to length 4, so
``grad_map @ u`` returns ``H.ravel()``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import CellMetrics, MeshError, polygon_metrics

KERNEL_RTOL = 1e-10


@dataclass(frozen=True)
class ProjectorOps:
    n_vertices: int
    xy: np.ndarray
    metrics: CellMetrics
    grad_map: np.ndarray  # (4, 2N)
    proj_matrix: np.ndarray  # (2N, 2N)
    kernel_basis: np.ndarray  # (2N, 2N - 6)
    fan_areas: np.ndarray  # (N,)
    fan_maps: np.ndarray  # (N, 4, 2N)

    @property
    def ndof(self) -> int:
        return 2 * self.n_vertices

    @property
    def area(self) -> float:
        return self.metrics.area

    @property
    def diameter(self) -> float:
        return self.metrics.diameter

    @property
    def residual_matrix(self) -> np.ndarray:
        return np.eye(self.ndof) - self.proj_matrix


def _triangle_gradients(p0, p1, p2):
    """Gradients of the three barycentric coordinates and the signed area."""
    area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
    g0 = np.array([p1[1] - p2[1], p2[0] - p1[0]]) / area2
    g1 = np.array([p2[1] - p0[1], p0[0] - p2[0]]) / area2
    g2 = np.array([p0[1] - p1[1], p1[0] - p0[0]]) / area2
    return (g0, g1, g2), 0.5 * area2


def _scalar_to_vector_map(w: np.ndarray) -> np.ndarray:
    """Lift per-vertex gradient weights ``w`` (N, 2) to a (4, 2N) gradient map."""
    n = len(w)
    G = np.zeros((4, 2 * n))
    for a in range(2):
        for b in range(2):
            G[2 * a + b, a::2] = w[:, b]
    return G


def build_projector(xy, metrics: CellMetrics | None = None) -> ProjectorOps:
    xy = np.asarray(xy, dtype=float)
    m = polygon_metrics(xy) if metrics is None else metrics
    n = len(xy)

    # edge-midpoint rule on linear traces: vertex j collects half of the scaled
    # normals of the two edges meeting at it
    ln = m.edge_lengths[:, None] * m.outward_normals
    w = 0.5 * (ln + np.roll(ln, 1, axis=0)) / m.area
    G = _scalar_to_vector_map(w)

    # translation fixed by matching the vertex mean
    dx = xy - xy.mean(axis=0)
    P = np.zeros((2 * n, 2 * n))
    for a in range(2):
        P[a::2, a::2] += 1.0 / n
        for b in range(2):
            P[a::2, :] += np.outer(dx[:, b], G[2 * a + b])

    if n == 3:
        # a triangle has no kernel: P is the identity up to rounding, made exact
        P = np.eye(6)
    U, s, Vt = np.linalg.svd(P)
    rank = int(np.sum(s > KERNEL_RTOL * s[0]))
    Z = Vt[rank:].T.copy()
    if Z.shape[1] != 2 * n - 6:
        raise MeshError(f"projector rank {rank} != 6; degenerate cell")

    # fan apex at the vertex mean: the only point where the mean-of-dofs value
    # interpolates affine fields exactly
    c = xy.mean(axis=0)
    areas = np.empty(n)
    maps = np.zeros((n, 4, 2 * n))
    for i in range(n):
        j = (i + 1) % n
        (g0, g1, gc), area = _triangle_gradients(xy[i], xy[j], c)
        if area <= 0.0:
            raise MeshError("cell is not star-shaped with respect to its vertex centroid")
        areas[i] = area
        wt = np.tile(gc / n, (n, 1))
        wt[i] += g0
        wt[j] += g1
        maps[i] = _scalar_to_vector_map(wt)
    if n == 3:
        maps[:] = G
    return ProjectorOps(n, xy, m, G, P, Z, areas, maps)


def _check(ops: ProjectorOps, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (ops.ndof,):
        raise ValueError(f"expected {ops.ndof} element dofs, got shape {u.shape}")
    return u


def residual(ops: ProjectorOps, u) -> np.ndarray:
    u = _check(ops, u)
    return u - ops.proj_matrix @ u


def projected_gradient(ops: ProjectorOps, u) -> np.ndarray:
    return (ops.grad_map @ _check(ops, u)).reshape(2, 2)


def projected_deformation_gradient(ops: ProjectorOps, u) -> np.ndarray:
    return np.eye(2) + projected_gradient(ops, u)


def fan_gradients(ops: ProjectorOps, u) -> list[tuple[np.ndarray, float]]:
    u = _check(ops, u)
    H = ops.fan_maps @ u
    return [(np.eye(2) + h.reshape(2, 2), float(a)) for h, a in zip(H, ops.fan_areas)]


def affine_dofs(xy, H, b=(0.0, 0.0)) -> np.ndarray:
    """Vertex values of u(x) = H x + b in element dof ordering."""
    xy = np.asarray(xy, dtype=float)
    return (xy @ np.asarray(H, dtype=float).T + np.asarray(b, dtype=float)).ravel()
