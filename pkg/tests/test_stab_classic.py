import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fd_gradient, fd_jacobian, polygons, rel_err
from vemstab.material import InvertedElementError, lame_from
from vemstab.projector import affine_dofs, build_projector
from vemstab.stab_classic import (
    NU0,
    classic_energy,
    classic_energy_direct,
    classic_params,
    classic_residual_tangent,
    lambda_derivative,
    min_enclosing_ellipse,
    taylor_lambda5,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def lam_of_nu(young, nu):
    return young * nu / ((1 + nu) * (1 - 2 * nu))


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_lambda_derivatives_by_finite_differences(k):
    E, nu = 7.0, 0.1
    h = 1e-4
    if k == 0:
        assert lambda_derivative(E, nu, 0) == pytest.approx(lam_of_nu(E, nu), rel=1e-13)
        return
    # central differences of the (k-1)-th derivative
    fd = (lambda_derivative(E, nu + h, k - 1) - lambda_derivative(E, nu - h, k - 1)) / (2 * h)
    assert lambda_derivative(E, nu, k) == pytest.approx(fd, rel=1e-6)


@given(st.floats(-0.3, -0.2))
def test_taylor_error_is_sixth_order(nu):
    E = 1.0
    err = abs(taylor_lambda5(E, nu) - lam_of_nu(E, nu))
    # remainder bound with the sixth derivative on the interval
    bound = max(abs(lambda_derivative(E, x, 6)) for x in (-0.3, -0.2)) * abs(nu - NU0) ** 6 / 720
    assert err <= 1.5 * bound + 1e-15


def test_taylor_saturates_near_incompressibility():
    assert np.isfinite(taylor_lambda5(200.0, 0.4999))
    assert taylor_lambda5(200.0, 0.4999) < lam_of_nu(200.0, 0.4999) / 100


def test_ellipse_of_circle_points():
    t = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    c, _, (ro, ri) = min_enclosing_ellipse(np.column_stack([3 + 2 * np.cos(t), -1 + 2 * np.sin(t)]))
    np.testing.assert_allclose(c, [3, -1], atol=1e-6)
    assert ro == pytest.approx(2.0, rel=1e-6) and ri == pytest.approx(2.0, rel=1e-6)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.0, 1.0), (3.0, 0.5)])
def test_ellipse_of_rectangle(a, b):
    # the minimum-area ellipse through a rectangle's corners has semi-axes a/sqrt2, b/sqrt2
    rect = np.array([[0, 0], [a, 0], [a, b], [0, b]])
    _, _, (ro, ri) = min_enclosing_ellipse(rect)
    assert ro == pytest.approx(max(a, b) / np.sqrt(2), rel=1e-6)
    assert ri == pytest.approx(min(a, b) / np.sqrt(2), rel=1e-6)


@given(polygons())
def test_ellipse_encloses_points(xy):
    c, M, _ = min_enclosing_ellipse(xy)
    d = xy - c
    assert np.einsum("ij,jk,ik->i", d, M, d).max() <= 1 + 1e-6


def test_ellipse_rejects_collinear():
    with pytest.raises(ValueError):
        min_enclosing_ellipse(np.array([[0, 0], [1, 1], [2, 2]]))


def test_square_parameters():
    p = lame_from(200.0, 0.3)
    cp = classic_params(SQUARE, p)
    assert cp.aspect_R == pytest.approx(1.0, rel=1e-6)
    assert cp.theta == pytest.approx(2.6, rel=1e-6)
    assert cp.phi == pytest.approx(2.6 / 3.6, rel=1e-6)
    assert cp.mu_hat == pytest.approx((1 + cp.t5_lambda / 200) ** 2 * cp.phi * p.mu)
    assert cp.lambda_hat == pytest.approx(cp.phi * cp.t5_lambda)


def test_mu_hat_grows_with_poisson_ratio():
    mu_hat = [classic_params(SQUARE, lame_from(200.0, nu)).mu_hat / lame_from(200.0, nu).mu
              for nu in (0.3, 0.4, 0.45, 0.49, 0.499, 0.4999)]
    assert np.all(np.diff(mu_hat) > 0)


@given(polygons(min_vertices=4), st.integers(0, 1000))
def test_energy_forms_agree(xy, seed):
    ops = build_projector(xy)
    cp = classic_params(xy, lame_from(10.0, 0.3))
    u = 0.03 * ops.diameter * np.random.default_rng(seed).standard_normal(ops.ndof)
    direct = classic_energy_direct(ops, u, cp)
    assert classic_energy(ops, u, cp) == pytest.approx(direct, rel=1e-7, abs=1e-12 * ops.area * cp.mu_hat)


@given(polygons(min_vertices=4), st.integers(0, 1000))
def test_residual_and_tangent_by_finite_differences(xy, seed):
    ops = build_projector(xy)
    cp = classic_params(xy, lame_from(10.0, 0.45))
    u = 0.03 * ops.diameter * np.random.default_rng(seed).standard_normal(ops.ndof)
    r, K = classic_residual_tangent(ops, u, cp)
    eps = 1e-6 * ops.diameter
    assert rel_err(r, fd_gradient(lambda v: classic_energy(ops, v, cp), u, eps)) < 1e-6
    assert rel_err(K, fd_jacobian(lambda v: classic_residual_tangent(ops, v, cp)[0], u, eps)) < 1e-5
    np.testing.assert_allclose(K, K.T, atol=1e-12 * np.abs(K).max())


@given(polygons(), st.lists(st.floats(-0.2, 0.2), min_size=4, max_size=4))
def test_affine_states_carry_no_stabilization(xy, h):
    ops = build_projector(xy)
    cp = classic_params(xy, lame_from(200.0, 0.499))
    a = affine_dofs(xy, np.reshape(h, (2, 2)), [1.0, 2.0])
    assert abs(classic_energy(ops, a, cp)) < 1e-18 * max(1.0, cp.mu_hat * ops.area)
    r, _ = classic_residual_tangent(ops, a, cp)
    assert np.linalg.norm(r) < 1e-10 * cp.mu_hat * ops.diameter


def test_inverted_fan_triangle_raises():
    ops = build_projector(SQUARE)
    cp = classic_params(SQUARE, lame_from(200.0, 0.3))
    u = 2.0 * np.array([1, 0, -1, 0, 1, 0, -1, 0], dtype=float)
    with pytest.raises(InvertedElementError):
        classic_energy(ops, u, cp)
    with pytest.raises(InvertedElementError):
        classic_residual_tangent(ops, u, cp)
