"""Polygonal mesh data model, cell geometry, regularity audit and JSON I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BOUNDARY_TAGS = ("dirichlet", "neumann", "free")


class MeshError(ValueError):
    """Invalid mesh geometry or topology."""


class MeshSchemaError(MeshError):
    """Mesh file does not follow the JSON schema."""


@dataclass(frozen=True)
class CellMetrics:
    area: float
    diameter: float
    centroid: np.ndarray
    edge_lengths: np.ndarray
    outward_normals: np.ndarray  # (N, 2), edge i joins vertex i -> i+1


@dataclass(frozen=True)
class RegularityReport:
    min_inscribed_ratio: float
    min_edge_ratio: float
    max_vertices: int
    area_scaling_range: tuple[float, float]


def signed_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_metrics(xy: np.ndarray) -> CellMetrics:
    """Area, diameter, centroid, edge lengths and outward normals of a CCW polygon.

    Parameters
    ----------
    xy : ndarray, shape (N, 2)
        Vertex coordinates in counter-clockwise order.
    """
    xy = np.asarray(xy, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2 or xy.shape[0] < 3:
        raise MeshError("a polygon needs at least 3 vertices given as (N, 2)")
    diff = xy[:, None, :] - xy[None, :, :]
    diameter = float(np.sqrt((diff**2).sum(axis=-1)).max())
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(cross.sum())
    if area <= 1e-14 * diameter**2:
        raise MeshError(f"degenerate or clockwise polygon (signed area {area:.3e})")
    cx = float(((x + xn) * cross).sum()) / (6.0 * area)
    cy = float(((y + yn) * cross).sum()) / (6.0 * area)
    edges = np.roll(xy, -1, axis=0) - xy
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    if lengths.min() <= 0.0:
        raise MeshError("polygon has a zero-length edge")
    normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    return CellMetrics(area, diameter, np.array([cx, cy]), lengths, normals)


def _edge_key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass
class PolyMesh:
    """Vertices, CCW polygonal cells and tagged boundary edges.

    Boundary edges are stored as a mapping from the sorted vertex pair to its
    tag. Cells given clockwise are reversed on construction.
    """

    vertices: np.ndarray
    cells: list[tuple[int, ...]]
    boundary: dict[tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex coordinates")
        nv = len(self.vertices)
        cells = []
        for k, cell in enumerate(self.cells):
            cell = tuple(int(i) for i in cell)
            if len(cell) < 3:
                raise MeshError(f"cell {k} has fewer than 3 vertices")
            if min(cell) < 0 or max(cell) >= nv:
                raise IndexError(f"cell {k} references a vertex outside 0..{nv - 1}")
            if len(set(cell)) != len(cell):
                raise MeshError(f"cell {k} repeats a vertex")
            if signed_area(self.vertices[list(cell)]) < 0:
                cell = cell[::-1]
            cells.append(cell)
        self.cells = cells

        counts: dict[tuple[int, int], int] = {}
        for cell in self.cells:
            for a, b in zip(cell, cell[1:] + cell[:1]):
                key = _edge_key(a, b)
                counts[key] = counts.get(key, 0) + 1
        if any(c > 2 for c in counts.values()):
            raise MeshError("an edge is shared by more than two cells")
        outer = {e for e, c in counts.items() if c == 1}
        tags = {}
        for (i, j), tag in dict(self.boundary).items():
            key = _edge_key(int(i), int(j))
            if tag not in BOUNDARY_TAGS:
                raise MeshError(f"unknown boundary tag {tag!r}")
            if key not in outer:
                raise MeshError(f"tagged edge {key} is not a boundary edge")
            tags[key] = tag
        for key in outer:
            tags.setdefault(key, "free")
        self.boundary = dict(sorted(tags.items()))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_xy(self, k: int) -> np.ndarray:
        return self.vertices[list(self.cells[k])]

    def metrics(self, k: int) -> CellMetrics:
        return polygon_metrics(self.cell_xy(k))

    def edges_tagged(self, tag: str) -> list[tuple[int, int]]:
        return [e for e, t in self.boundary.items() if t == tag]

    def vertices_tagged(self, tag: str) -> np.ndarray:
        ids = {i for e in self.edges_tagged(tag) for i in e}
        return np.array(sorted(ids), dtype=int)

    def cell_dofs(self, k: int) -> np.ndarray:
        """Global dof indices of cell ``k`` in vertex-major (x, y) order."""
        ids = np.asarray(self.cells[k])
        return np.column_stack([2 * ids, 2 * ids + 1]).ravel()

    def total_area(self) -> float:
        return sum(self.metrics(k).area for k in range(self.n_cells))


def _centroid_inradius(xy: np.ndarray, centroid: np.ndarray) -> float:
    """Radius of the largest centroid-centred disc inside the polygon."""
    a = xy
    b = np.roll(xy, -1, axis=0)
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", centroid - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(centroid - (a + t[:, None] * ab), axis=1).min())


def regularity_report(mesh: PolyMesh) -> RegularityReport:
    inscribed, edge_ratio, area_ratio = [], [], []
    nmax = 0
    for k in range(mesh.n_cells):
        xy = mesh.cell_xy(k)
        m = polygon_metrics(xy)
        inscribed.append(_centroid_inradius(xy, m.centroid) / m.diameter)
        edge_ratio.append(m.edge_lengths.min() / m.diameter)
        area_ratio.append(m.area / m.diameter**2)
        nmax = max(nmax, len(xy))
    return RegularityReport(
        min_inscribed_ratio=float(min(inscribed)),
        min_edge_ratio=float(min(edge_ratio)),
        max_vertices=int(nmax),
        area_scaling_range=(float(min(area_ratio)), float(max(area_ratio))),
    )


def mesh_to_dict(mesh: PolyMesh) -> dict:
    return {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "cells": [list(c) for c in mesh.cells],
        "boundary": [{"edge": list(e), "tag": t} for e, t in mesh.boundary.items()],
    }


def mesh_from_dict(data: dict) -> PolyMesh:
    if not isinstance(data, dict):
        raise MeshSchemaError("mesh document must be a JSON object")
    for key in ("vertices", "cells"):
        if key not in data:
            raise MeshSchemaError(f"missing {key!r} key")
    unknown = set(data) - {"vertices", "cells", "boundary"}
    if unknown:
        raise MeshSchemaError(f"unknown keys {sorted(unknown)}")
    verts = data["vertices"]
    if not isinstance(verts, list) or not all(
        isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v)
        for v in verts
    ):
        raise MeshSchemaError("'vertices' must be a list of [x, y] pairs")
    cells = data["cells"]
    if not isinstance(cells, list) or not all(
        isinstance(c, list) and all(isinstance(i, int) for i in c) for c in cells
    ):
        raise MeshSchemaError("'cells' must be a list of integer index lists")
    boundary = {}
    for item in data.get("boundary", []):
        if not isinstance(item, dict) or set(item) != {"edge", "tag"}:
            raise MeshSchemaError("boundary entries need exactly 'edge' and 'tag'")
        edge = item["edge"]
        if not (isinstance(edge, list) and len(edge) == 2 and all(isinstance(i, int) for i in edge)):
            raise MeshSchemaError("boundary 'edge' must be two vertex indices")
        if max(edge) >= len(verts) or min(edge) < 0:
            raise IndexError(f"boundary edge {edge} references a missing vertex")
        boundary[tuple(edge)] = item["tag"]
    return PolyMesh(np.array(verts, dtype=float).reshape(-1, 2), cells, boundary)


def mesh_io_write(mesh: PolyMesh, path) -> None:
    # json emits repr() floats, which round-trip exactly
    Path(path).write_text(json.dumps(mesh_to_dict(mesh), indent=1))


def mesh_io_read(path) -> PolyMesh:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MeshSchemaError(f"not valid JSON: {exc}") from exc
    return mesh_from_dict(data)
