"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import time
from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, fd_gradient, fd_jacobian, jittered_polygon, rel_err
from vemstab import diagnostics as dg
from vemstab.assembly import (
    DirichletBC,
    assemble,
    discretize,
    newton_solve,
    stabilization_energy,
    total_energy,
)
from vemstab.config import NewtonConfig, StabilizationConfig
from vemstab.cook import FAMILIES, gen_cook, run_cook
from vemstab.material import energy_density, first_pk, from_mu_poisson, lame_from, material_tangent
from vemstab.mesh import PolyMesh
from vemstab.projector import affine_dofs, build_projector
from vemstab.stab_classic import classic_energy, classic_params, classic_residual_tangent
from vemstab.stab_decoupled import DecoupledConfig

H_LEVELS = (0.5, 0.25, 0.125, 0.0625)
MODES = ("classical", "decoupled")


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


@lru_cache(maxsize=None)
def cook_run(mode: str, h: float):
    with Timer() as t:
        res = run_cook("quad", h, StabilizationConfig(mode))
    return res, t.elapsed


def test_c01_patch_test():
    F = np.array([[1.1, 0.05], [0.0, 0.95]])
    H = F - np.eye(2)
    worst_err, worst_energy = 0.0, 0.0
    with Timer() as t:
        for family in FAMILIES:
            mesh = gen_cook(family, 0.25)
            bd = np.array(sorted({i for e in mesh.boundary for i in e}))
            inner = np.setdiff1d(np.arange(mesh.n_vertices), bd)
            exact = (mesh.vertices @ H.T).ravel()
            for mode in MODES:
                disc = discretize(mesh, from_mu_poisson(40.0, 0.499), StabilizationConfig(mode))
                u, _ = newton_solve(disc, DirichletBC.affine(mesh, bd, H), None,
                                    NewtonConfig(tol_residual=1e-9, tol_increment=1e-12))
                worst_err = max(worst_err, np.abs((u - exact).reshape(-1, 2)[inner]).max())
                worst_energy = max(worst_energy, abs(stabilization_energy(disc, u)))
    ok = worst_err < 1e-9 and worst_energy < 1e-18 and t.elapsed < 5.0
    record(1, "patch test", ok, f"max err {worst_err:.2e}, max stab energy {worst_energy:.2e}, {t.elapsed:.2f}s")


def test_c02_kernel_only():
    rng = np.random.default_rng(2)
    worst = 0.0
    params = lame_from(200.0, 0.3)
    with Timer() as t:
        for _ in range(100):
            xy = jittered_polygon(int(rng.integers(3, 10)), rng, scale=rng.uniform(0.1, 10.0))
            ops = build_projector(xy)
            for mode in MODES:
                S = dg.stabilization_matrix(ops, StabilizationConfig(mode), params)
                A = np.array([affine_dofs(xy, rng.standard_normal((2, 2)), rng.standard_normal(2))
                              for _ in range(100)]).T
                Snorm = np.linalg.norm(S, 2)
                if Snorm == 0.0:
                    continue  # triangles: no kernel, S vanishes identically
                ratio = np.linalg.norm(S @ A, axis=0) / (Snorm * np.linalg.norm(A, axis=0))
                worst = max(worst, float(ratio.max()))
    ok = worst < 1e-12 and t.elapsed < 10.0
    record(2, "kernel-only stabilization", ok, f"max |S a|/(|S||a|) {worst:.2e}, {t.elapsed:.2f}s")


def test_c03_square_modal():
    with Timer() as t:
        rep = dg.kernel_spectrum(dg.UNIT_SQUARE, StabilizationConfig("decoupled"), lame_from(200.0, 0.3))
    k = rep.kernel_eigenvalues
    spread = (k.max() - k.min()) / k.max()
    ok = rep.zero_count == 6 and len(k) == 2 and spread < 1e-10 and t.elapsed < 1.0
    record(3, "square modal analysis", ok, f"zeros {rep.zero_count}, kernel spread {spread:.1e}, {t.elapsed:.3f}s")


def test_c04_anisotropy_tracking():
    cfg = StabilizationConfig("decoupled", DecoupledConfig(beta=1.0, g_max=10.0))
    errs = []
    with Timer() as t:
        for r in (1.0, 1.5, 2.0, 3.0):
            k = dg.kernel_spectrum(dg.rectangle(r, 1.0), cfg, lame_from(200.0, 0.3)).kernel_eigenvalues
            g = min(r, 10.0)
            errs.append(abs(k.max() / k.min() - g**2) / g**2)
    ok = max(errs) < 1e-8 and t.elapsed < 1.0
    record(4, "anisotropy ratio tracks g(r)^2", ok, f"max rel err {max(errs):.1e}, {t.elapsed:.3f}s")


def test_c05_dev_vol_separation():
    with Timer() as t:
        table = dg.kappa_sweep(dg.regular_polygon(6), lame_from(200.0, 0.3), (0.0, 1.0, 10.0, 100.0))
    scale = np.abs(table).max()
    invariant = np.all(np.abs(table - table[0]) < 1e-10 * scale, axis=0)
    increasing = np.all(np.diff(table, axis=0) > 0, axis=0)
    ok = invariant.any() and increasing.any() and t.elapsed < 1.0
    record(5, "hexagon dev/vol separation", ok,
           f"{invariant.sum()} kappa-invariant, {increasing.sum()} increasing, {t.elapsed:.3f}s")


def test_c06_isochoric_sweep():
    with Timer() as t:
        diag = dg.isochoric_kernel_mode(dg.UNIT_SQUARE, seed=0)
    dec = np.array([r["E_over_mu_dec"] for r in diag.sweep])
    cl = np.array([r["E_over_mu_classic"] for r in diag.sweep])
    clh = np.array([r["E_over_muhat_classic"] for r in diag.sweep])
    dec_var = (dec.max() - dec.min()) / dec.min()
    clh_var = (clh.max() - clh.min()) / clh.min()
    growth = cl[-1] / cl[0]
    ok = (dec_var < 0.02 and np.all(np.diff(cl) > 0) and growth > 2 and clh_var < 0.05
          and diag.projector_residual_ratio < 1e-10 and t.elapsed < 5.0)
    record(6, "isochoric kernel-mode sweep", ok,
           f"dec var {dec_var:.1e}, classical growth {growth:.2f}, classical/mu_hat var {clh_var:.3f}, "
           f"{t.elapsed:.3f}s")


def test_c07_cook_decoupled():
    tips, times = [], []
    for h in H_LEVELS:
        res, dt = cook_run("decoupled", h)
        tips.append(res.tip_uy)
        times.append(dt)
    ok = (abs(tips[0] / 8.012 - 1) <= 0.05 and abs(tips[-1] / 8.481 - 1) <= 0.05
          and np.all(np.diff(tips) > 0) and times[-1] < 60.0)
    record(7, "Cook quad decoupled", ok, f"tip u_y {np.round(tips, 4).tolist()}, finest {times[-1]:.1f}s")


def test_c08_cook_classical():
    tips, total = [], 0.0
    below = True
    for h in H_LEVELS:
        res, dt = cook_run("classical", h)
        tips.append(res.tip_uy)
        total += dt
        below &= res.tip_uy < cook_run("decoupled", h)[0].tip_uy
    ok = (abs(tips[0] / 3.181 - 1) <= 0.10 and abs(tips[-1] / 7.472 - 1) <= 0.10 and below and total < 90.0)
    record(8, "Cook quad classical", ok, f"tip u_y {np.round(tips, 4).tolist()}, total {total:.1f}s")


def test_c09_newton_robustness():
    iters = []
    for mode in MODES:
        for h in H_LEVELS:
            res, _ = cook_run(mode, h)
            iters += [s.iterations for s in res.trace.steps if s.converged]
    med = float(np.median(iters))
    ok = max(iters) <= 10 and 3 <= med <= 8
    record(9, "Newton iterations per load step", ok, f"max {max(iters)}, median {med}")


def test_c10_derivative_oracles():
    rng = np.random.default_rng(10)
    mu, lam = 40.0, 400.0
    errs = {}
    with Timer() as t:
        F = np.eye(2) + 0.2 * rng.standard_normal((2, 2))
        errs["P"] = rel_err(first_pk(F, mu, lam), fd_gradient(lambda X: energy_density(X, mu, lam), F))
        errs["A"] = rel_err(material_tangent(F, mu, lam).reshape(4, 4),
                            fd_jacobian(lambda X: first_pk(X.reshape(2, 2), mu, lam), F.ravel()))
        xy = jittered_polygon(6, rng)
        ops = build_projector(xy)
        cp = classic_params(xy, lame_from(200.0, 0.45))
        u = 0.05 * rng.standard_normal(ops.ndof)
        r, K = classic_residual_tangent(ops, u, cp)
        errs["classic_r"] = rel_err(r, fd_gradient(lambda v: classic_energy(ops, v, cp), u))
        errs["classic_K"] = rel_err(K, fd_jacobian(lambda v: classic_residual_tangent(ops, v, cp)[0], u))
        mesh = PolyMesh([[0, 0], [1, 0], [2, 0], [0, 1], [1, 1.1], [2, 1], [0, 2], [1, 2], [2, 2]],
                        [(0, 1, 4, 3), (1, 2, 5, 4), (3, 4, 7, 6), (4, 5, 8, 7)])
        uglob = 0.03 * rng.standard_normal(2 * mesh.n_vertices)
        for mode in MODES:
            disc = discretize(mesh, lame_from(200.0, 0.45), StabilizationConfig(mode))
            R, _ = assemble(disc, uglob, with_tangent=False)
            errs[f"global_{mode}"] = rel_err(R, fd_gradient(lambda v: total_energy(disc, v), uglob))
    limits = {"P": 1e-6, "A": 1e-5, "classic_r": 1e-6, "classic_K": 1e-5,
              "global_classical": 1e-6, "global_decoupled": 1e-6}
    ok = all(errs[k] < limits[k] for k in limits) and t.elapsed < 30.0
    record(10, "derivative oracles", ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f", {t.elapsed:.2f}s")


def test_c11_spectral_equivalence():
    with Timer() as t:
        params = lame_from(200.0, 0.3)
        ops = build_projector(dg.UNIT_SQUARE)
        K = dg.surrogate_tangent_kernel(ops, None, params)
        self_ev = dg.whitened_eigenvalues(K, K)
        self_err = float(np.abs(self_ev - 1.0).max())
        dec, cl = [], []
        for nu in dg.KERNEL_MODE_NUS:
            p = lame_from(200.0, nu)
            dec.append(dg.equivalence_bounds(dg.UNIT_SQUARE, StabilizationConfig("decoupled"), p, target="shear"))
            cl.append(dg.equivalence_bounds(dg.UNIT_SQUARE, StabilizationConfig("classical"), p, target="shear"))
    dec = np.array(dec)
    dec_var = float(((dec.max(axis=0) - dec.min(axis=0)) / dec.min(axis=0)).max())
    c1 = np.array(cl)[:, 1]
    ok = self_err < 1e-10 and dec_var < 0.10 and np.all(np.diff(c1) > 0) and t.elapsed < 5.0
    record(11, "spectral equivalence bounds", ok,
           f"self-comparison err {self_err:.1e}, decoupled var {dec_var:.1e}, classical C1 "
           f"{c1[0]:.3f}->{c1[-1]:.3f}, {t.elapsed:.2f}s")


def test_c12_appendix_checks():
    cells = {"square": dg.UNIT_SQUARE, "pentagon": dg.regular_polygon(5), "hexagon": dg.regular_polygon(6),
             "irregular": jittered_polygon(7, np.random.default_rng(12))}
    worst = 0.0
    positive = True
    with Timer() as t:
        for xy in cells.values():
            for check in (dg.h12_equivalence_check, dg.poincare_korn_check):
                ref = np.array(check(xy))
                positive &= bool(np.all(np.isfinite(ref)) and np.all(ref > 0))
                for s in (1e-2, 7.3, 1e2):
                    worst = max(worst, float(np.abs(np.array(check(s * xy)) / ref - 1).max()))
    ok = positive and worst < 0.01 and t.elapsed < 60.0
    record(12, "H^1/2 and Poincare-Korn checks", ok, f"max rescaling drift {worst:.1e}, {t.elapsed:.2f}s")


@pytest.mark.parametrize("mode", MODES)
def test_cook_runs_converged(mode):
    for h in H_LEVELS:
        assert cook_run(mode, h)[0].trace.converged
