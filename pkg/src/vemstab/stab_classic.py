"""Surrogate-energy stabilization on the centroid fan with effective Lame parameters.

The stabilization energy is

    U_s(u) = sum_T |T| (psi_hat(F_T) - psi_hat(F_E))

where psi_hat is the neo-Hookean density evaluated with (mu_hat, lam_hat).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .material import InvertedElementError, MaterialParams, stress_and_tangent
from .projector import ProjectorOps

NU0 = -0.25


@dataclass(frozen=True)
class ClassicParams:
    nu0: float
    t5_lambda: float
    aspect_R: float
    theta: float
    phi: float
    alpha: float
    mu_hat: float
    lambda_hat: float


def lambda_derivative(young: float, nu: float, k: int) -> float:
    """k-th derivative of lam(nu) = E [-1/(3(1+nu)) + 1/(3(1-2nu))]."""
    f = factorial(k)
    return young / 3.0 * (-((-1.0) ** k) * f / (1.0 + nu) ** (k + 1) + f * 2.0**k / (1.0 - 2.0 * nu) ** (k + 1))


def taylor_lambda5(young: float, poisson: float, nu0: float = NU0) -> float:
    d = poisson - nu0
    return sum(lambda_derivative(young, nu0, k) * d**k / factorial(k) for k in range(6))


def min_enclosing_ellipse(points, tol: float = 1e-9, max_iter: int = 100_000):
    """Minimum-area enclosing ellipse of a 2D point set.

    Khachiyan's barycentric iteration with Todd-Yildirim away steps.

    Returns
    -------
    center : ndarray (2,)
    shape : ndarray (2, 2)
        Ellipse is {x : (x - c)^T shape (x - c) <= 1}.
    (R_o, R_i) : tuple of float
        Major and minor semi-axes.
    """
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-12 * np.abs(centered).max()) < d:
        raise ValueError("collinear point set has no enclosing ellipse")
    Q = np.vstack([pts.T, np.ones(n)])
    m = d + 1
    u = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        X = (Q * u) @ Q.T
        M = np.einsum("ij,ji->i", Q.T, np.linalg.solve(X, Q))
        j = int(np.argmax(M))
        active = u > 0
        i = int(np.flatnonzero(active)[np.argmin(M[active])])
        eps_plus = M[j] / m - 1.0
        eps_minus = 1.0 - M[i] / m
        if max(eps_plus, eps_minus) < tol:
            break
        if eps_plus >= eps_minus:
            step = (M[j] - m) / (m * (M[j] - 1.0))
            u *= 1.0 - step
            u[j] += step
        else:
            step = min((m - M[i]) / (m * (M[i] - 1.0)), u[i] / (1.0 - u[i]))
            u *= 1.0 + step
            u[i] -= step
            u[i] = max(u[i], 0.0)
    c = pts.T @ u
    cov = (pts.T * u) @ pts - np.outer(c, c)
    shape = np.linalg.inv(cov) / d
    ev = np.linalg.eigvalsh(shape)
    semi = 1.0 / np.sqrt(ev)
    return c, shape, (float(semi.max()), float(semi.min()))


def classic_params(xy, params: MaterialParams, nu0: float = NU0) -> ClassicParams:
    _, _, (r_o, r_i) = min_enclosing_ellipse(xy)
    R = r_o / r_i
    t5 = taylor_lambda5(params.young, params.poisson, nu0)
    theta = 2.0 * (1.0 + params.poisson) / R
    phi = theta / (theta + 1.0)
    alpha = t5 / params.young
    return ClassicParams(
        nu0=nu0,
        t5_lambda=t5,
        aspect_R=R,
        theta=theta,
        phi=phi,
        alpha=alpha,
        mu_hat=(1.0 + alpha) ** 2 * phi * params.mu,
        lambda_hat=phi * t5,
    )


def _det2(M):
    return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]


def classic_energy(ops: ProjectorOps, u, cp: ClassicParams) -> float:
    """Stabilization energy, evaluated without cancellation.

    The terms linear in D_T = F_T - F_E sum to zero over the fan (divergence
    theorem), so they are dropped; what is left is second order in D_T and
    vanishes to rounding on affine fields.
    """
    u = np.asarray(u, dtype=float)
    FE = np.eye(2) + (ops.grad_map @ u).reshape(2, 2)
    JE = _det2(FE)
    if not JE > 0:
        raise InvertedElementError(JE, "projected state")
    A = np.array([[FE[1, 1], -FE[0, 1]], [-FE[1, 0], FE[0, 0]]]) / JE
    lnJE = np.log(JE)
    D = (ops.fan_maps - ops.grad_map) @ u
    mu, lam = cp.mu_hat, cp.lambda_hat
    total = 0.0
    for area, d in zip(ops.fan_areas, D):
        d = d.reshape(2, 2)
        X = A @ d
        t = X[0, 0] + X[1, 1]
        ratio = 1.0 + t + _det2(X)
        if not ratio > 0:
            raise InvertedElementError(JE * ratio, "fan sub-triangle")
        ell = np.log1p(t + _det2(X))
        ell_minus_t = ell - t
        e = 0.5 * mu * np.sum(d * d) - mu * ell_minus_t + 0.5 * lam * ell**2 + lam * lnJE * ell_minus_t
        total += area * e
    return float(total)


def classic_energy_direct(ops: ProjectorOps, u, cp: ClassicParams) -> float:
    """Straight per-triangle sum of psi_hat differences (reference evaluation)."""
    from .material import energy_density

    u = np.asarray(u, dtype=float)
    FE = np.eye(2) + (ops.grad_map @ u).reshape(2, 2)
    psiE = energy_density(FE, cp.mu_hat, cp.lambda_hat)
    total = 0.0
    for area, h in zip(ops.fan_areas, ops.fan_maps @ u):
        FT = np.eye(2) + h.reshape(2, 2)
        total += area * (energy_density(FT, cp.mu_hat, cp.lambda_hat) - psiE)
    return float(total)


def classic_residual_tangent(ops: ProjectorOps, u, cp: ClassicParams):
    """Exact gradient and Hessian of :func:`classic_energy`."""
    u = np.asarray(u, dtype=float)
    if ops.kernel_basis.shape[1] == 0:
        # every fan gradient equals the projected one
        return np.zeros(ops.ndof), np.zeros((ops.ndof, ops.ndof))
    mu, lam = cp.mu_hat, cp.lambda_hat
    G = ops.grad_map
    FE = np.eye(2) + (G @ u).reshape(2, 2)
    try:
        _, PE, AE = stress_and_tangent(FE, mu, lam)
    except InvertedElementError as exc:
        raise InvertedElementError(exc.det, "projected state") from None
    AE = AE.reshape(4, 4)
    r = -ops.area * (G.T @ PE.ravel())
    K = -ops.area * (G.T @ AE @ G)
    for area, B in zip(ops.fan_areas, ops.fan_maps):
        FT = np.eye(2) + (B @ u).reshape(2, 2)
        try:
            _, PT, AT = stress_and_tangent(FT, mu, lam)
        except InvertedElementError as exc:
            raise InvertedElementError(exc.det, "fan sub-triangle") from None
        r += area * (B.T @ PT.ravel())
        K += area * (B.T @ AT.reshape(4, 4) @ B)
    return r, 0.5 * (K + K.T)


def classic_residual(ops: ProjectorOps, u, cp: ClassicParams) -> np.ndarray:
    return classic_residual_tangent(ops, u, cp)[0]


def classic_tangent(ops: ProjectorOps, u, cp: ClassicParams) -> np.ndarray:
    return classic_residual_tangent(ops, u, cp)[1]
