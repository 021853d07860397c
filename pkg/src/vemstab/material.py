"""Compressible neo-Hookean law in plane strain, written directly in F.

    psi(F) = mu/2 (tr(F^T F) - 2 ln J - 2) + lam/2 (ln J)^2

Fourth-order tangents are stored as arrays ``A[i, J, k, L]`` so that
``dP[i, J] = A[i, J, k, L] dF[k, L]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvertedElementError(ArithmeticError):
    """Raised when a deformation gradient has det F <= 0."""

    def __init__(self, det, where=None):
        self.det = float(det)
        self.where = where
        msg = f"non-positive Jacobian det F = {self.det:.6g}"
        if where is not None:
            msg += f" ({where})"
        super().__init__(msg)


@dataclass(frozen=True)
class MaterialParams:
    young: float
    poisson: float
    mu: float
    lam: float

    @property
    def bulk(self) -> float:
        """Three-dimensional bulk modulus, E / (3 (1 - 2 nu))."""
        return self.lam + 2.0 * self.mu / 3.0


def lame_from(young: float, poisson: float) -> MaterialParams:
    if young <= 0:
        raise ValueError(f"Young modulus must be positive, got {young}")
    if not -1.0 < poisson < 0.5:
        raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {poisson}")
    mu = young / (2.0 * (1.0 + poisson))
    lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
    return MaterialParams(young, poisson, mu, lam)


def from_mu_poisson(mu: float, poisson: float) -> MaterialParams:
    """Material with prescribed shear modulus, e.g. mu=40, nu=0.499 for Cook."""
    return lame_from(2.0 * mu * (1.0 + poisson), poisson)


def from_lame(mu: float, lam: float) -> MaterialParams:
    poisson = lam / (2.0 * (lam + mu))
    young = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
    return MaterialParams(young, poisson, mu, lam)


def _det_inv(F):
    J = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    if not J > 0.0:
        raise InvertedElementError(J)
    Finv = np.array([[F[1, 1], -F[0, 1]], [-F[1, 0], F[0, 0]]]) / J
    return J, Finv


def energy_density(F, mu: float, lam: float) -> float:
    F = np.asarray(F, dtype=float)
    J, _ = _det_inv(F)
    lnJ = np.log(J)
    return 0.5 * mu * (np.sum(F * F) - 2.0 * lnJ - 2.0) + 0.5 * lam * lnJ**2


def first_pk(F, mu: float, lam: float) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    J, Finv = _det_inv(F)
    FinvT = Finv.T
    return mu * (F - FinvT) + lam * np.log(J) * FinvT


def material_tangent(F, mu: float, lam: float) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    J, Finv = _det_inv(F)
    eye = np.eye(2)
    A = mu * np.einsum("ik,JL->iJkL", eye, eye)
    A += (mu - lam * np.log(J)) * np.einsum("Li,Jk->iJkL", Finv, Finv)
    A += lam * np.einsum("Ji,Lk->iJkL", Finv, Finv)
    return A


def stress_and_tangent(F, mu: float, lam: float):
    """(psi, P, A) in one pass; the assembly hot path."""
    F = np.asarray(F, dtype=float)
    J, Finv = _det_inv(F)
    lnJ = np.log(J)
    FinvT = Finv.T
    psi = 0.5 * mu * (np.sum(F * F) - 2.0 * lnJ - 2.0) + 0.5 * lam * lnJ**2
    P = mu * (F - FinvT) + lam * lnJ * FinvT
    eye = np.eye(2)
    A = mu * np.einsum("ik,JL->iJkL", eye, eye)
    A += (mu - lam * lnJ) * np.einsum("Li,Jk->iJkL", Finv, Finv)
    A += lam * np.einsum("Ji,Lk->iJkL", Finv, Finv)
    return psi, P, A


def tangent_matrix(A: np.ndarray) -> np.ndarray:
    """Flatten a 2x2x2x2 tangent to the 4x4 matrix acting on row-major F."""
    return A.reshape(4, 4)
