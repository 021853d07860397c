"""Element-level spectral diagnostics of the stabilization on ker(P_E).

Everything here works on a single polygon given by its CCW vertex array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import StabilizationConfig
from .material import MaterialParams, lame_from, material_tangent
from .projector import ProjectorOps, build_projector
from . import stab_classic, stab_decoupled

ZERO_RTOL = 1e-10
KERNEL_MODE_NUS = (0.3, 0.4, 0.45, 0.49, 0.499, 0.4999)
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def regular_polygon(n: int, radius: float = 1.0, phase: float = 0.0) -> np.ndarray:
    t = phase + 2.0 * np.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(t), np.sin(t)])


def rectangle(width: float, height: float) -> np.ndarray:
    return np.array([[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]])


@dataclass
class SpectralReport:
    full_eigenvalues: np.ndarray
    kernel_eigenvalues: np.ndarray
    zero_count: int
    condition_number: float
    generalized_eigenvalues: np.ndarray | None = None
    bounds: tuple[float, float] | None = None


@dataclass
class KernelModeDiag:
    mode: np.ndarray
    projector_residual_ratio: float
    max_volume_deviation: float
    amplitude: float
    seed: int
    sweep: list[dict] = field(default_factory=list)


def stabilization_matrix(ops: ProjectorOps, stab_cfg: StabilizationConfig, params: MaterialParams,
                         u_state=None, kappa_E: float | None = None) -> np.ndarray:
    """Stabilization Hessian at ``u_state`` (zero by default)."""
    u = np.zeros(ops.ndof) if u_state is None else np.asarray(u_state, dtype=float)
    if stab_cfg.mode == "decoupled":
        return stab_decoupled.build_matrices(ops, params, stab_cfg.decoupled, kappa_E=kappa_E).total
    cp = stab_classic.classic_params(ops.xy, params, stab_cfg.nu0)
    return stab_classic.classic_tangent(ops, u, cp)


def surrogate_tangent(ops: ProjectorOps, u_state, params: MaterialParams, target: str = "tangent") -> np.ndarray:
    """Fan-extension tangent on the full element space.

    ``target="tangent"`` uses the material tangent A(F_T) on every fan
    triangle; ``target="shear"`` uses mu |grad w|^2, the shear-scaled H1
    seminorm of the fan extension.
    """
    u = np.zeros(ops.ndof) if u_state is None else np.asarray(u_state, dtype=float)
    K = np.zeros((ops.ndof, ops.ndof))
    for area, B in zip(ops.fan_areas, ops.fan_maps):
        if target == "shear":
            K += area * params.mu * (B.T @ B)
        elif target == "tangent":
            FT = np.eye(2) + (B @ u).reshape(2, 2)
            K += area * (B.T @ material_tangent(FT, params.mu, params.lam).reshape(4, 4) @ B)
        else:
            raise ValueError(f"unknown target {target!r}")
    return 0.5 * (K + K.T)


def surrogate_tangent_kernel(ops: ProjectorOps, u_state, params: MaterialParams, target: str = "tangent") -> np.ndarray:
    Z = ops.kernel_basis
    return Z.T @ surrogate_tangent(ops, u_state, params, target) @ Z


def whitened_eigenvalues(S: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Eigenvalues of K^{-1/2} S K^{-1/2} for SPD ``K``."""
    kv, kV = np.linalg.eigh(K)
    if kv.min() <= ZERO_RTOL * abs(kv).max():
        raise np.linalg.LinAlgError(f"reference matrix is not SPD (min eigenvalue {kv.min():.3e})")
    Kmh = (kV / np.sqrt(kv)) @ kV.T
    return np.linalg.eigvalsh(Kmh @ S @ Kmh)


def kernel_spectrum(xy, stab_cfg: StabilizationConfig, params: MaterialParams, u_state=None,
                    kappa_E: float | None = None, target: str | None = None) -> SpectralReport:
    ops = build_projector(xy)
    S = stabilization_matrix(ops, stab_cfg, params, u_state, kappa_E)
    full = np.linalg.eigvalsh(S)
    zero_count = int(np.sum(np.abs(full) < ZERO_RTOL * np.abs(full).max()))
    Z = ops.kernel_basis
    kern = np.linalg.eigvalsh(Z.T @ S @ Z)
    report = SpectralReport(full, kern, zero_count, float(kern.max() / kern.min()))
    if target is not None:
        gen = whitened_eigenvalues(Z.T @ S @ Z, surrogate_tangent_kernel(ops, u_state, params, target))
        report.generalized_eigenvalues = gen
        report.bounds = (float(gen.min()), float(gen.max()))
    return report


def edge_length_rescale(xy) -> float:
    """Factor (diameter / longest edge)^2 that restates |E|/h^2 scaled eigenvalues with h = longest edge.

    The decoupled deviatoric block carries |E|/h^2 with h the diameter; on the unit square the
    edge-length convention gives |E|/h^2 = 1 and the kernel eigenvalue equals mu.
    """
    xy = np.asarray(xy, dtype=float)
    edges = np.linalg.norm(np.roll(xy, -1, axis=0) - xy, axis=1)
    return build_projector(xy).diameter ** 2 / edges.max() ** 2


def equivalence_bounds(xy, stab_cfg: StabilizationConfig, params: MaterialParams, u_state=None,
                       target: str = "tangent") -> tuple[float, float]:
    """Measured (C0, C1): extreme generalized eigenvalues of (Z^T S Z, K*)."""
    report = kernel_spectrum(xy, stab_cfg, params, u_state, target=target)
    return report.bounds


def volume_deviation(ops: ProjectorOps, u) -> float:
    return max(abs(np.linalg.det(np.eye(2) + (B @ u).reshape(2, 2)) - 1.0) for B in ops.fan_maps)


def isochoric_kernel_mode(xy=UNIT_SQUARE, seed: int = 0, nus=KERNEL_MODE_NUS, young: float = 200.0,
                          amplitude: float = 1e-2, stab_cfg: StabilizationConfig | None = None,
                          threshold: float = 5e-2, max_retries: int = 20) -> KernelModeDiag:
    """Sample a unit kernel mode and sweep both stabilization energies over ``nus``.

    Each row of the sweep holds the raw energies and their normalisations by
    mu alpha^2 (both methods) and by mu_hat alpha^2 (classical).
    """
    ops = build_projector(xy)
    P = ops.proj_matrix
    dec_cfg = (stab_cfg or StabilizationConfig("decoupled")).decoupled
    for attempt in range(max_retries):
        rng = np.random.default_rng(seed + attempt)
        v = rng.standard_normal(ops.ndof)
        mode = v - P @ v
        mode /= np.linalg.norm(mode)
        dev = volume_deviation(ops, amplitude * mode)
        if dev < threshold:
            break
    else:
        raise RuntimeError(f"no isochoric kernel mode found in {max_retries} draws")
    ratio = float(np.linalg.norm(P @ mode) / np.linalg.norm(mode))
    diag = KernelModeDiag(mode, ratio, float(dev), amplitude, seed + attempt)
    u = amplitude * mode
    for nu in nus:
        params = lame_from(young, nu)
        cp = stab_classic.classic_params(xy, params)
        e_cl = stab_classic.classic_energy(ops, u, cp)
        mats = stab_decoupled.build_matrices(ops, params, dec_cfg)
        e_dec = stab_decoupled.decoupled_energy(ops, u, mats)
        a2 = amplitude**2
        diag.sweep.append({
            "nu": nu,
            "mu": params.mu,
            "mu_hat": cp.mu_hat,
            "E_raw_classic": e_cl,
            "E_raw_dec": e_dec,
            "E_over_mu_classic": e_cl / (params.mu * a2),
            "E_over_mu_dec": e_dec / (params.mu * a2),
            "E_over_muhat_classic": e_cl / (cp.mu_hat * a2),
        })
    return diag


# -- boundary H^{1/2} seminorm ------------------------------------------------

def gagliardo_seminorm_sq(xy, g, n_gauss: int = 16) -> float:
    """Double-integral H^{1/2}(dE) seminorm squared of a piecewise-linear trace.

    Same-edge blocks use the exact value |g_{i+1} - g_i|^2; all other edge
    pairs use tensor Gauss-Legendre quadrature.
    """
    xy = np.asarray(xy, dtype=float)
    g = np.asarray(g, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    n = len(xy)
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    pts, vals, wts = [], [], []
    for i in range(n):
        j = (i + 1) % n
        L = np.linalg.norm(xy[j] - xy[i])
        pts.append(xy[i] + t[:, None] * (xy[j] - xy[i]))
        vals.append(g[i] + t[:, None] * (g[j] - g[i]))
        wts.append(w * L)
    total = 0.0
    for i in range(n):
        total += float(np.sum((g[(i + 1) % n] - g[i]) ** 2))
        for j in range(n):
            if i == j:
                continue
            d2 = ((pts[i][:, None, :] - pts[j][None, :, :]) ** 2).sum(-1)
            dg2 = ((vals[i][:, None, :] - vals[j][None, :, :]) ** 2).sum(-1)
            total += float(wts[i] @ (dg2 / d2) @ wts[j])
    return total


def nodal_difference_sum(xy, g) -> float:
    xy = np.asarray(xy, dtype=float)
    g = np.asarray(g, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    L = np.linalg.norm(np.roll(xy, -1, axis=0) - xy, axis=1)
    return float(np.sum(((np.roll(g, -1, axis=0) - g) ** 2).sum(-1) / L))


def h12_equivalence_check(xy, n_samples: int = 50, seed: int = 0, n_gauss: int = 16) -> tuple[float, float]:
    """Range of |g|^2_{H^1/2} / (h_E * sum |g_{i+1} - g_i|^2 / |e_i|) over random traces."""
    xy = np.asarray(xy, dtype=float)
    h = build_projector(xy).diameter
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n_samples):
        g = rng.standard_normal(len(xy))
        denom = h * nodal_difference_sum(xy, g)
        if denom <= 1e-14:
            continue
        ratios.append(gagliardo_seminorm_sq(xy, g, n_gauss) / denom)
    return float(min(ratios)), float(max(ratios))


# -- discrete harmonic extension -----------------------------------------------

def _refined_fan(xy: np.ndarray, levels: int):
    """Uniformly refined centroid fan; returns nodes, triangles, boundary flags, boundary weights.

    ``weights`` (n_nodes, N) interpolates vertex values linearly along the
    polygon edges onto the boundary nodes.
    """
    n = len(xy)
    nodes = [p for p in xy] + [xy.mean(axis=0)]
    weights = [np.eye(n)[i] for i in range(n)] + [None]
    tris = [(i, (i + 1) % n, n) for i in range(n)]
    boundary_edges = {(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)}
    for _ in range(levels):
        mid: dict = {}
        new_tris = []
        new_bd = set()

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                mid[key] = len(nodes)
                nodes.append(0.5 * (nodes[a] + nodes[b]))
                on_bd = key in boundary_edges
                weights.append(0.5 * (weights[a] + weights[b]) if on_bd else None)
                if on_bd:
                    new_bd.add((min(a, mid[key]), max(a, mid[key])))
                    new_bd.add((min(b, mid[key]), max(b, mid[key])))
            return mid[key]

        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        tris = new_tris
        boundary_edges = new_bd
    is_bd = np.array([w is not None for w in weights])
    W = np.array([w if w is not None else np.zeros(n) for w in weights])
    return np.array(nodes), np.array(tris), is_bd, W


def harmonic_energy_matrix(xy, levels: int = 3) -> np.ndarray:
    """(2N, 2N) matrix of the Dirichlet energy |w|_1^2 of the discrete harmonic extension."""
    xy = np.asarray(xy, dtype=float)
    nodes, tris, is_bd, W = _refined_fan(xy, levels)
    m = len(nodes)
    rows, cols, vals = [], [], []
    for t in tris:
        p = nodes[t]
        d = np.array([[p[1, 1] - p[2, 1], p[2, 0] - p[1, 0]],
                      [p[2, 1] - p[0, 1], p[0, 0] - p[2, 0]],
                      [p[0, 1] - p[1, 1], p[1, 0] - p[0, 0]]])
        area2 = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
        k = d @ d.T / (2.0 * area2)
        rows.append(np.repeat(t, 3))
        cols.append(np.tile(t, 3))
        vals.append(k.ravel())
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)).tocsc()
    b = np.flatnonzero(is_bd)
    i = np.flatnonzero(~is_bd)
    Kbb = K[b][:, b].toarray()
    Kbi = K[b][:, i]
    Kii = K[i][:, i]
    schur = Kbb - Kbi @ spla.splu(Kii).solve(Kbi.T.toarray())
    scalar = W[b].T @ schur @ W[b]
    scalar = 0.5 * (scalar + scalar.T)
    return np.kron(scalar, np.eye(2))


def fan_energy_matrix(ops: ProjectorOps) -> np.ndarray:
    """(2N, 2N) matrix of |w|_1^2 for the unrefined fan extension."""
    return sum(a * (B.T @ B) for a, B in zip(ops.fan_areas, ops.fan_maps))


def poincare_korn_check(xy, refinement_levels: int = 3) -> tuple[float, float]:
    """Extreme values over ker(P_E) of (|E|/h^2) sum |w(x_i)|^2 / |w|_1^2.

    ``|w|_1`` is the seminorm of the discrete harmonic extension. The vertex
    sum carries the area factor so that both sides are dimensionless in 2D.
    """
    xy = np.asarray(xy, dtype=float)
    ops = build_projector(xy)
    Z = ops.kernel_basis
    A = Z.T @ harmonic_energy_matrix(xy, refinement_levels) @ Z
    ev = whitened_eigenvalues(np.eye(Z.shape[1]) * ops.area / ops.diameter**2, A)
    return float(ev.min()), float(ev.max())


def mu_scaling_interval(xy, cfg: stab_decoupled.DecoupledConfig, params: MaterialParams,
                        levels: int | None = None) -> tuple[float, float]:
    """Extreme values over ker(P_E) of w^T S_dev w / (mu |w|_1^2).

    The seminorm uses the fan extension, or the refined harmonic extension
    when ``levels`` is given.
    """
    ops = build_projector(xy)
    Z = ops.kernel_basis
    fd = stab_decoupled.frame_data(ops.xy, ops.metrics)
    S = stab_decoupled.build_s_dev(ops, fd, params.mu, cfg)
    H = fan_energy_matrix(ops) if levels is None else harmonic_energy_matrix(xy, levels)
    ev = whitened_eigenvalues(Z.T @ S @ Z, params.mu * (Z.T @ H @ Z))
    return float(ev.min()), float(ev.max())


def match_modes(reference: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Permutation p such that vectors[:, p[k]] best overlaps reference[:, k]."""
    overlap = np.abs(reference.T @ vectors)
    order = np.full(reference.shape[1], -1)
    taken = set()
    for k in np.argsort(-overlap.max(axis=1)):
        for j in np.argsort(-overlap[k]):
            if j not in taken:
                order[k] = j
                taken.add(j)
                break
    return order


def kappa_sweep(xy, params: MaterialParams, kappas=(0.0, 1.0, 10.0, 100.0),
                cfg: stab_decoupled.DecoupledConfig | None = None) -> np.ndarray:
    """Kernel eigenvalues (rows: kappa) with modes tracked by eigenvector overlap.

    Columns follow the eigenvectors at the largest kappa, where the volumetric
    term splits any degeneracy of the deviatoric part.
    """
    cfg = cfg or stab_decoupled.DecoupledConfig()
    ops = build_projector(xy)
    Z = ops.kernel_basis
    spectra = []
    for kappa in kappas:
        S = stab_decoupled.build_matrices(ops, params, cfg, kappa_E=kappa).total
        spectra.append(np.linalg.eigh(Z.T @ S @ Z))
    ref = spectra[int(np.argmax(kappas))][1]
    return np.array([ev[match_modes(ref, V)] for ev, V in spectra])
