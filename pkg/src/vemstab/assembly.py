"""Element and global assembly, loads, and the load-stepped Newton solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import NewtonConfig, StabilizationConfig
from .material import InvertedElementError, MaterialParams, energy_density, stress_and_tangent
from .mesh import PolyMesh
from .projector import ProjectorOps, build_projector
from . import stab_classic, stab_decoupled

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Newton iteration did not converge within the iteration limit."""


class NumericalFailure(RuntimeError):
    """Element inversion or singular factorization during a solve."""


@dataclass
class Element:
    index: int
    dofs: np.ndarray
    ops: ProjectorOps
    classic: stab_classic.ClassicParams | None = None
    stab: stab_decoupled.StabMatrices | None = None


@dataclass
class Discretization:
    """Mesh plus all state-independent element data for one material/stabilization."""

    mesh: PolyMesh
    params: MaterialParams
    stab_cfg: StabilizationConfig
    elements: list[Element] = field(default_factory=list)

    @property
    def ndof(self) -> int:
        return 2 * self.mesh.n_vertices


def discretize(mesh: PolyMesh, params: MaterialParams, stab_cfg: StabilizationConfig) -> Discretization:
    elements = []
    for k in range(mesh.n_cells):
        ops = build_projector(mesh.cell_xy(k))
        el = Element(k, mesh.cell_dofs(k), ops)
        if stab_cfg.mode == "classical":
            el.classic = stab_classic.classic_params(ops.xy, params, stab_cfg.nu0)
        else:
            el.stab = stab_decoupled.build_matrices(ops, params, stab_cfg.decoupled)
        elements.append(el)
    return Discretization(mesh, params, stab_cfg, elements)


def element_consistency(ops: ProjectorOps, u, params: MaterialParams):
    """(|E| psi(F_E), |E| G^T P(F_E), |E| G^T A(F_E) G)."""
    G = ops.grad_map
    FE = np.eye(2) + (G @ np.asarray(u, dtype=float)).reshape(2, 2)
    psi, P, A = stress_and_tangent(FE, params.mu, params.lam)
    return ops.area * psi, ops.area * (G.T @ P.ravel()), ops.area * (G.T @ A.reshape(4, 4) @ G)


def element_stabilization(el: Element, u):
    if el.classic is not None:
        return stab_classic.classic_residual_tangent(el.ops, u, el.classic)
    return el.stab.total @ u, el.stab.total


def element_stab_energy(el: Element, u) -> float:
    if el.classic is not None:
        return stab_classic.classic_energy(el.ops, u, el.classic)
    return stab_decoupled.decoupled_energy(el.ops, u, el.stab)


def external_load(mesh: PolyMesh, traction=(0.0, 0.0), body_force=(0.0, 0.0), tag: str = "neumann") -> np.ndarray:
    """Nodal forces for a constant traction on ``tag`` edges and a constant body force.

    Each loaded edge of length L passes L * t / 2 to both endpoints; the body
    force is tested against the vertex average of the displacement.
    """
    f = np.zeros(2 * mesh.n_vertices)
    t = np.asarray(traction, dtype=float)
    for i, j in mesh.edges_tagged(tag):
        L = float(np.linalg.norm(mesh.vertices[j] - mesh.vertices[i]))
        f[2 * i : 2 * i + 2] += 0.5 * L * t
        f[2 * j : 2 * j + 2] += 0.5 * L * t
    b = np.asarray(body_force, dtype=float)
    if np.any(b != 0):
        for k, cell in enumerate(mesh.cells):
            share = mesh.metrics(k).area * b / len(cell)
            for i in cell:
                f[2 * i : 2 * i + 2] += share
    return f


def assemble(disc: Discretization, u, f_ext=None, load_factor: float = 1.0, with_tangent: bool = True):
    """Global residual and (optionally) sparse tangent at state ``u``.

    The residual is internal force minus ``load_factor * f_ext``. Elements are
    summed in index order, so results are bitwise reproducible.
    """
    u = np.asarray(u, dtype=float)
    R = np.zeros(disc.ndof)
    rows, cols, vals = [], [], []
    for el in disc.elements:
        ue = u[el.dofs]
        try:
            _, rc, kc = element_consistency(el.ops, ue, disc.params)
            rs, ks = element_stabilization(el, ue)
        except InvertedElementError as exc:
            raise InvertedElementError(exc.det, f"element {el.index}, {exc.where or 'projected state'}") from None
        np.add.at(R, el.dofs, rc + rs)
        if with_tangent:
            n = len(el.dofs)
            rows.append(np.repeat(el.dofs, n))
            cols.append(np.tile(el.dofs, n))
            vals.append((kc + ks).ravel())
    if f_ext is not None:
        R -= load_factor * np.asarray(f_ext)
    if not with_tangent:
        return R, None
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(disc.ndof, disc.ndof)).tocsc()
    return R, K


def total_energy(disc: Discretization, u, f_ext=None, load_factor: float = 1.0) -> float:
    u = np.asarray(u, dtype=float)
    W = 0.0
    for el in disc.elements:
        ue = u[el.dofs]
        FE = np.eye(2) + (el.ops.grad_map @ ue).reshape(2, 2)
        W += el.ops.area * energy_density(FE, disc.params.mu, disc.params.lam)
        W += element_stab_energy(el, ue)
    if f_ext is not None:
        W -= load_factor * float(np.dot(f_ext, u))
    return W


def stabilization_energy(disc: Discretization, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(sum(element_stab_energy(el, u[el.dofs]) for el in disc.elements))


@dataclass
class DirichletBC:
    """Prescribed dof values at full load; scaled by the load factor."""

    dofs: np.ndarray
    values: np.ndarray

    @classmethod
    def clamp(cls, mesh: PolyMesh, tag: str = "dirichlet") -> "DirichletBC":
        ids = mesh.vertices_tagged(tag)
        dofs = np.column_stack([2 * ids, 2 * ids + 1]).ravel()
        return cls(dofs, np.zeros(len(dofs)))

    @classmethod
    def affine(cls, mesh: PolyMesh, vertex_ids, H, b=(0.0, 0.0)) -> "DirichletBC":
        ids = np.asarray(vertex_ids, dtype=int)
        vals = mesh.vertices[ids] @ np.asarray(H, dtype=float).T + np.asarray(b, dtype=float)
        return cls(np.column_stack([2 * ids, 2 * ids + 1]).ravel(), vals.ravel())


@dataclass
class StepRecord:
    step: int
    load_factor: float
    iterations: int
    residual_norms: list[float]
    increment_norms: list[float]
    tip_uy: float | None
    converged: bool


@dataclass
class SolveTrace:
    steps: list[StepRecord] = field(default_factory=list)
    converged: bool = True
    message: str = ""


def newton_solve(disc: Discretization, bc: DirichletBC, f_ext=None, cfg: NewtonConfig = NewtonConfig(),
                 tip_vertex: int | None = None, u0=None):
    """Load-stepped Newton-Raphson with Dirichlet dofs eliminated.

    Returns ``(u, trace)``. Non-convergence and numerical failure are recorded
    in the trace and raised as :class:`ConvergenceError` or
    :class:`NumericalFailure`; the partial trace travels on the exception as
    ``exc.trace`` and the last state as ``exc.state``.
    """
    if len(bc.dofs) == 0:
        raise ValueError("a nonempty Dirichlet set is required")
    u = np.zeros(disc.ndof) if u0 is None else np.array(u0, dtype=float)
    free = np.setdiff1d(np.arange(disc.ndof), bc.dofs)
    trace = SolveTrace()

    def fail(exc_type, msg):
        trace.converged = False
        trace.message = msg
        err = exc_type(msg)
        err.trace, err.state = trace, u
        return err

    for s in range(1, cfg.n_load_steps + 1):
        lf = s / cfg.n_load_steps
        du_d = lf * bc.values - u[bc.dofs]
        if np.any(du_d != 0.0):
            # carry the prescribed increment into the free dofs through the tangent
            try:
                _, K = assemble(disc, u, f_ext, lf)
                u[free] -= spla.spsolve(K[free][:, free], K[free][:, bc.dofs] @ du_d)
            except InvertedElementError as exc:
                raise fail(NumericalFailure, f"load step {s}: {exc}") from exc
        u[bc.dofs] = lf * bc.values
        res_norms, inc_norms = [], []
        converged = False
        it = 0
        while True:
            try:
                R, K = assemble(disc, u, f_ext, lf)
            except InvertedElementError as exc:
                raise fail(NumericalFailure, f"load step {s}: {exc}") from exc
            rnorm = float(np.linalg.norm(R[free]))
            res_norms.append(rnorm)
            if rnorm < cfg.tol_residual or (inc_norms and inc_norms[-1] < cfg.tol_increment):
                converged = True
                break
            if it == cfg.max_iters:
                break
            Kff = K[free][:, free]
            try:
                du = spla.spsolve(Kff, -R[free])
            except RuntimeError as exc:
                raise fail(NumericalFailure, f"load step {s}: factorization failed ({exc})") from exc
            if not np.all(np.isfinite(du)):
                raise fail(NumericalFailure, f"load step {s}: singular tangent")
            step = 1.0
            if cfg.line_search:
                step = _backtrack(disc, u, free, du, f_ext, lf)
            u[free] += step * du
            inc_norms.append(float(np.linalg.norm(step * du)))
            it += 1
        tip = float(u[2 * tip_vertex + 1]) if tip_vertex is not None else None
        trace.steps.append(StepRecord(s, lf, it, res_norms, inc_norms, tip, converged))
        log.info("step %d lf=%.2f iters=%d |R|=%.3e", s, lf, it, res_norms[-1])
        if not converged:
            raise fail(ConvergenceError, f"load step {s} did not converge in {cfg.max_iters} iterations "
                                         f"(|R|={res_norms[-1]:.3e})")
    trace.message = "converged"
    return u, trace


def _backtrack(disc, u, free, du, f_ext, lf, max_halvings: int = 10) -> float:
    step = 1.0
    for _ in range(max_halvings):
        trial = u.copy()
        trial[free] += step * du
        try:
            assemble(disc, trial, f_ext, lf, with_tangent=False)
            return step
        except InvertedElementError:
            step *= 0.5
    return step
