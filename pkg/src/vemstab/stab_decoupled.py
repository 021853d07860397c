"""Kernel-only deviatoric/volumetric stabilization built from vertex residuals.

Both channels act on r = (I - P_E) u only:

* deviatoric: mu_E |E| / h_E^2 * sum_i r_i^T W_E r_i, with W_E aligned to the
  principal axes of the vertex second-moment matrix;
* volumetric: kappa_E / h_E * sum_e |e| (n_e . (r_i + r_{i+1}) / 2)^2.

The energy is 1/2 u^T (S_dev + S_vol) u, so the tangent is state independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .material import MaterialParams
from .mesh import CellMetrics, MeshError
from .projector import ProjectorOps


@dataclass(frozen=True)
class FrameData:
    second_moment: np.ndarray
    frame: np.ndarray
    moments: tuple[float, float]
    aspect: float


@dataclass(frozen=True)
class KappaPolicy:
    """How kappa_E is chosen.

    ``kind`` is one of ``"zero"``, ``"constant"`` (use ``value``), ``"capped"``
    (bulk modulus limited to ``value``) or ``"auto"`` (bulk modulus below
    ``nu_switch``, zero above it).
    """

    kind: str = "auto"
    value: float = 0.0
    nu_switch: float = 0.49

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "capped", "auto"):
            raise ValueError(f"unknown kappa policy {self.kind!r}")
        if self.value < 0:
            raise ValueError("kappa value must be non-negative")

    def kappa(self, params: MaterialParams) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.value
        if self.kind == "capped":
            return min(params.bulk, self.value)
        return 0.0 if params.poisson >= self.nu_switch else params.bulk


@dataclass(frozen=True)
class DecoupledConfig:
    beta: float = 1.0
    g_max: float = 4.0
    kappa: KappaPolicy = field(default_factory=KappaPolicy)

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.g_max > 1.0:
            raise ValueError(f"g_max must exceed 1, got {self.g_max}")


@dataclass(frozen=True)
class StabMatrices:
    s_dev: np.ndarray
    s_vol: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.s_dev + self.s_vol


def frame_data(xy, metrics: CellMetrics) -> FrameData:
    d = np.asarray(xy, dtype=float) - metrics.centroid
    M = d.T @ d
    ev, vec = np.linalg.eigh(M)
    ev, vec = ev[::-1], vec[:, ::-1]
    if ev[1] <= 1e-14 * ev[0]:
        raise MeshError("collinear cell: vanishing second moment")
    for k in range(2):
        q = vec[:, k]
        lead = q[np.flatnonzero(np.abs(q) > 1e-14)[0]]
        if lead < 0:
            vec[:, k] = -q
    return FrameData(M, vec, (float(ev[0]), float(ev[1])), float(np.sqrt(ev[0] / ev[1])))


def anisotropy_weights(r_E: float, cfg: DecoupledConfig) -> tuple[float, float]:
    g = min(r_E**cfg.beta, cfg.g_max)
    return g, 1.0 / g


def build_s_dev(ops: ProjectorOps, fd: FrameData, mu_E: float, cfg: DecoupledConfig) -> np.ndarray:
    if mu_E <= 0:
        raise ValueError("mu_E must be positive")
    t1, t2 = anisotropy_weights(fd.aspect, cfg)
    W = fd.frame @ np.diag([t1, t2]) @ fd.frame.T
    R = ops.residual_matrix
    S = mu_E * ops.area / ops.diameter**2 * (R.T @ np.kron(np.eye(ops.n_vertices), W) @ R)
    return 0.5 * (S + S.T)


def build_s_vol(ops: ProjectorOps, kappa_E: float) -> np.ndarray:
    if kappa_E < 0:
        raise ValueError("kappa_E must be non-negative")
    n = ops.n_vertices
    if kappa_E == 0.0:
        return np.zeros((2 * n, 2 * n))
    R = ops.residual_matrix
    m = ops.metrics
    rows = np.zeros((n, 2 * n))
    for e in range(n):
        j = (e + 1) % n
        rows[e, 2 * e : 2 * e + 2] += 0.5 * m.outward_normals[e]
        rows[e, 2 * j : 2 * j + 2] += 0.5 * m.outward_normals[e]
    B = rows @ R
    S = kappa_E / ops.diameter * (B.T * m.edge_lengths) @ B
    return 0.5 * (S + S.T)


def build_matrices(ops: ProjectorOps, params: MaterialParams, cfg: DecoupledConfig,
                   mu_E: float | None = None, kappa_E: float | None = None) -> StabMatrices:
    fd = frame_data(ops.xy, ops.metrics)
    mu_E = params.mu if mu_E is None else mu_E
    kappa_E = cfg.kappa.kappa(params) if kappa_E is None else kappa_E
    return StabMatrices(build_s_dev(ops, fd, mu_E, cfg), build_s_vol(ops, kappa_E))


def decoupled_energy(ops: ProjectorOps, u, mats: StabMatrices) -> float:
    """1/2 u^T S u, computed from the residual so affine states give exact zeros."""
    r = np.asarray(u, dtype=float)
    if r.shape != (ops.ndof,):
        raise ValueError(f"expected {ops.ndof} element dofs, got shape {r.shape}")
    r = r - ops.proj_matrix @ r
    return 0.5 * float(r @ mats.total @ r)


def decoupled_residual(ops: ProjectorOps, u, mats: StabMatrices) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (ops.ndof,):
        raise ValueError(f"expected {ops.ndof} element dofs, got shape {u.shape}")
    return mats.total @ u


def decoupled_tangent(ops: ProjectorOps, u, mats: StabMatrices) -> np.ndarray:
    return mats.total
