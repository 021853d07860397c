"""Cook's membrane geometry and its four mesh families (quad, dist1, dist2, voronoi)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Voronoi

from .assembly import DirichletBC, SolveTrace, discretize, external_load, newton_solve
from .config import NewtonConfig, StabilizationConfig
from .material import MaterialParams, from_mu_poisson
from .mesh import MeshError, PolyMesh, polygon_metrics

CORNERS = np.array([[0.0, 0.0], [48.0, 44.0], [48.0, 60.0], [0.0, 44.0]])
TIP = np.array([48.0, 60.0])
WIDTH = 48.0
AREA = 1440.0
FAMILIES = ("quad", "dist1", "dist2", "voronoi")
VORONOI_SEEDS = {0.5: 10, 0.25: 10, 0.125: 40, 0.0625: 160}


def to_physical(xi, eta):
    """Bilinear map of the unit square onto the Cook trapezoid."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    x = WIDTH * xi
    y = (1.0 - eta) * 44.0 * xi + eta * (44.0 + 16.0 * xi)
    return np.stack([x, y], axis=-1)


def grid_size(h: float) -> int:
    n = 1.0 / h
    if h <= 0 or abs(n - round(n)) > 1e-9:
        raise ValueError(f"h={h} does not give an integer number of cells per side")
    return int(round(n))


def _tag_boundary(vertices: np.ndarray, cells) -> dict:
    counts: dict = {}
    for cell in cells:
        for a, b in zip(cell, cell[1:] + cell[:1]):
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    tol = 1e-9 * WIDTH
    tags = {}
    for (a, b), c in counts.items():
        if c != 1:
            continue
        xa, xb = vertices[a, 0], vertices[b, 0]
        if abs(xa) < tol and abs(xb) < tol:
            tags[(a, b)] = "dirichlet"
        elif abs(xa - WIDTH) < tol and abs(xb - WIDTH) < tol:
            tags[(a, b)] = "neumann"
    return tags


def _structured(n: int, offset=None) -> PolyMesh:
    s = np.linspace(0.0, 1.0, n + 1)
    xi, eta = np.meshgrid(s, s, indexing="xy")
    xi, eta = xi.ravel(), eta.ravel()
    if offset is not None:
        dxi, deta = offset(xi, eta)
        interior = (xi > 0) & (xi < 1) & (eta > 0) & (eta < 1)
        xi = np.where(interior, xi + dxi, xi)
        eta = np.where(interior, eta + deta, eta)
    verts = to_physical(xi, eta)
    cells = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            cells.append((a, a + 1, a + n + 2, a + n + 1))
    return PolyMesh(verts, cells, _tag_boundary(verts, cells))


def gen_quad(h: float) -> PolyMesh:
    return _structured(grid_size(h))


def gen_dist1(h: float, amplitude: float = 0.15) -> PolyMesh:
    """Smooth sinusoidal perturbation of interior nodes, ``amplitude`` cells wide."""
    n = grid_size(h)
    a = amplitude / n

    def offset(xi, eta):
        return (a * np.sin(np.pi * (2.0 * xi + eta)) * np.sin(np.pi * eta),
                a * np.sin(np.pi * (xi + 2.0 * eta)) * np.sin(np.pi * xi))

    return _structured(n, offset)


def gen_dist2(h: float, seed: int = 0, amplitude: float = 0.3) -> PolyMesh:
    """Uniform random jitter of interior nodes, up to ``amplitude`` cells per direction."""
    n = grid_size(h)
    rng = np.random.default_rng(seed)
    m = (n + 1) ** 2
    jitter = rng.uniform(-amplitude / n, amplitude / n, size=(2, m))
    return _structured(n, lambda xi, eta: (jitter[0], jitter[1]))


def _clip_convex(poly: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clipping of ``poly`` by the CCW convex polygon ``clip``."""
    out = poly
    for k in range(len(clip)):
        a, b = clip[k], clip[(k + 1) % len(clip)]
        edge = b - a
        side = lambda p: edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])  # noqa: E731
        src, out = out, []
        if len(src) == 0:
            break
        for i in range(len(src)):
            p, q = src[i], src[(i + 1) % len(src)]
            sp_, sq = side(p), side(q)
            if sp_ >= 0:
                out.append(p)
            if (sp_ >= 0) != (sq >= 0):
                t = sp_ / (sp_ - sq)
                out.append(p + t * (q - p))
        out = np.array(out)
    return out


def _reflect(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = (b - a) / np.linalg.norm(b - a)
    rel = points - a
    return a + 2.0 * np.outer(rel @ d, d) - rel


def _voronoi_cells(seeds: np.ndarray) -> list[np.ndarray]:
    mirrors = [seeds]
    for k in range(4):
        mirrors.append(_reflect(seeds, CORNERS[k], CORNERS[(k + 1) % 4]))
    vor = Voronoi(np.vstack(mirrors))
    cells = []
    for i in range(len(seeds)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or not region:
            raise MeshError("unbounded Voronoi region for an interior seed")
        poly = vor.vertices[region]
        c = poly.mean(axis=0)
        order = np.argsort(np.arctan2(poly[:, 1] - c[1], poly[:, 0] - c[0]))
        cells.append(_dedupe(_clip_convex(poly[order], CORNERS)))
    return cells


def _dedupe(poly: np.ndarray, tol: float = 1e-9 * WIDTH) -> np.ndarray:
    keep = [p for i, p in enumerate(poly) if np.linalg.norm(p - poly[i - 1]) > tol]
    return np.array(keep)


def _factor_grid(n: int, ratio: float = 1.6) -> tuple[int, int]:
    pairs = [(n // k, k) for k in range(1, n + 1) if n % k == 0]
    return min(pairs, key=lambda p: abs(np.log(p[0] / p[1] / ratio)))


def voronoi_seed_count(h: float) -> int:
    for key, count in VORONOI_SEEDS.items():
        if abs(h - key) < 1e-12:
            return count
    if h <= 0:
        raise ValueError("h must be positive")
    return max(4, int(round(VORONOI_SEEDS[0.0625] * (0.0625 / h) ** 2)))


def gen_voronoi(h: float, seed: int = 0, lloyd_iters: int = 20, n_seeds: int | None = None) -> PolyMesh:
    """Lloyd-relaxed Voronoi tessellation clipped to the trapezoid."""
    n_seeds = voronoi_seed_count(h) if n_seeds is None else n_seeds
    nx, ny = _factor_grid(n_seeds)
    rng = np.random.default_rng(seed)
    gx, gy = np.meshgrid((np.arange(nx) + 0.5) / nx, (np.arange(ny) + 0.5) / ny, indexing="xy")
    xi = gx.ravel() + rng.uniform(-0.25, 0.25, gx.size) / nx
    eta = gy.ravel() + rng.uniform(-0.25, 0.25, gy.size) / ny
    seeds = to_physical(xi, eta)
    for _ in range(lloyd_iters):
        seeds = np.array([polygon_metrics(c).centroid for c in _voronoi_cells(seeds)])
    return _merge_polygons(_voronoi_cells(seeds))


def _merge_polygons(polys, tol: float = 1e-8 * WIDTH) -> PolyMesh:
    verts: list[np.ndarray] = []
    index: dict[tuple[int, int], int] = {}

    def vid(p):
        key = (int(round(p[0] / tol)), int(round(p[1] / tol)))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                hit = index.get((key[0] + dx, key[1] + dy))
                if hit is not None:
                    return hit
        index[key] = len(verts)
        verts.append(np.asarray(p, dtype=float))
        return index[key]

    # snap exact trapezoid corners first so they keep their exact coordinates
    for c in CORNERS:
        vid(c)
    cells = []
    for poly in polys:
        ids = []
        for p in poly:
            i = vid(p)
            if not ids or ids[-1] != i:
                ids.append(i)
        if len(ids) > 1 and ids[0] == ids[-1]:
            ids.pop()
        cells.append(tuple(ids))
    V = np.array(verts)
    used = sorted({i for c in cells for i in c})
    remap = {old: new for new, old in enumerate(used)}
    V = V[used]
    cells = [tuple(remap[i] for i in c) for c in cells]
    return PolyMesh(V, cells, _tag_boundary(V, cells))


def gen_cook(family: str, h: float, seed: int = 0, **options) -> PolyMesh:
    if family == "quad":
        return gen_quad(h)
    if family == "dist1":
        return gen_dist1(h, **options)
    if family == "dist2":
        return gen_dist2(h, seed=seed, **options)
    if family == "voronoi":
        return gen_voronoi(h, seed=seed, **options)
    raise ValueError(f"unknown mesh family {family!r}; expected one of {FAMILIES}")


def tip_vertex(mesh: PolyMesh) -> int:
    return int(np.argmin(np.linalg.norm(mesh.vertices - TIP, axis=1)))


def on_trapezoid_boundary(p, tol: float = 1e-9) -> bool:
    for k in range(4):
        a, b = CORNERS[k], CORNERS[(k + 1) % 4]
        d = b - a
        t = np.dot(p - a, d) / np.dot(d, d)
        if -tol <= t <= 1 + tol and abs(d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0])) / np.linalg.norm(d) < tol * WIDTH:
            return True
    return False


@dataclass
class CookResult:
    mesh: PolyMesh
    u: np.ndarray
    trace: SolveTrace
    tip: int

    @property
    def tip_uy(self) -> float:
        return float(self.u[2 * self.tip + 1])


def run_cook(family: str = "quad", h: float = 0.25, stab_cfg: StabilizationConfig | None = None,
             params: MaterialParams | None = None, newton: NewtonConfig | None = None,
             q0: float = 4.0, seed: int = 0, mesh: PolyMesh | None = None) -> CookResult:
    """Clamp the left edge, apply a vertical traction q0 on the right edge, solve.

    Defaults follow the benchmark: mu=40, nu=0.499, 10 load steps.
    """
    mesh = gen_cook(family, h, seed) if mesh is None else mesh
    params = from_mu_poisson(40.0, 0.499) if params is None else params
    disc = discretize(mesh, params, stab_cfg or StabilizationConfig())
    tip = tip_vertex(mesh)
    u, trace = newton_solve(disc, DirichletBC.clamp(mesh), external_load(mesh, (0.0, q0)),
                            newton or NewtonConfig(), tip_vertex=tip)
    return CookResult(mesh, u, trace, tip)
