"""Tests for the dipole-plus-gravity potential and its Hessian blocks."""

import math

import numpy as np
import pytest

from orbitron.core import BodyParams
from orbitron.errors import AxisDegeneracy
from orbitron.fields import (
    Composite,
    DipolePair,
    Linear,
    cartesian_field,
    cartesian_hessian,
    cartesian_jacobian,
    eval_jet,
)
from orbitron.potential import (
    DipolePotential,
    FiniteDifferencePotential,
    hessian_blocks,
    make_rotated_basis,
)

E1, E2, E3 = np.eye(3)


def _body(g=0.0):
    return BodyParams(M=1.0, I_perp=0.1, I3=0.05, mu=1.0, g=g)


def test_rotated_basis_examples():
    rb = make_rotated_basis(np.array([0.0, 0.0]))
    np.testing.assert_allclose(rb.E1, [1.0, 0.0], atol=0)
    np.testing.assert_allclose(rb.E2, [0.0, 1.0], atol=0)
    rb = make_rotated_basis(np.array([1.0, 0.0]))
    np.testing.assert_allclose(rb.E1, [1.0, 0.0], atol=0)
    np.testing.assert_allclose(rb.E2, [0.0, 1.0], atol=0)
    rb = make_rotated_basis(np.array([0.0, 2.0]))
    np.testing.assert_allclose(rb.E1, [0.0, 1.0], atol=0)
    np.testing.assert_allclose(rb.E2, [-1.0, 0.0], atol=0)


def test_rotated_basis_properties():
    rng = np.random.default_rng(30)
    for _ in range(20):
        v = rng.normal(0.0, 1.0, 2)
        rb = make_rotated_basis(v)
        assert math.isclose(float(rb.E1 @ rb.E1), 1.0, abs_tol=1e-14)
        assert math.isclose(float(rb.E2 @ rb.E2), 1.0, abs_tol=1e-14)
        assert abs(float(rb.E1 @ rb.E2)) <= 1e-14
        # proper orientation: the planar cross product points along +e3
        assert math.isclose(rb.E1[0] * rb.E2[1] - rb.E1[1] * rb.E2[0], 1.0, abs_tol=1e-14)
        np.testing.assert_allclose(rb.alpha.T @ rb.alpha, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(rb.alpha[:, 0], rb.E1, atol=0)
        np.testing.assert_allclose(rb.alpha[:, 1], rb.E2, atol=0)


def test_rotated_basis_accepts_three_vector():
    rb2 = make_rotated_basis(np.array([0.3, -0.4]))
    rb3 = make_rotated_basis(np.array([0.3, -0.4, 0.9]))
    np.testing.assert_array_equal(rb2.E1, rb3.E1)
    np.testing.assert_array_equal(rb2.E2, rb3.E2)


def test_potential_value_cases():
    b = _body(g=0.0)
    V = DipolePotential(DipolePair(1.0, 1.0), b)
    # nu perpendicular to B on the axis plane: B at (r,0,0) has no y component
    x = np.array([0.8, 0.0, 0.0])
    assert V.value(x, np.array([0.0, 1.0, 0.0])) == 0.0
    # nu along e3 against a purely axial field
    j = eval_jet(DipolePair(1.0, 1.0), 0.0, 0.0)
    assert math.isclose(
        V.value(np.array([0.0, 0.0, 0.0]), E3), -b.mu * j.Bz, rel_tol=1e-15
    )


def test_zero_field_reduces_to_gravity():
    # with an identically zero field only the M g x3 term remains
    b = _body(g=9.81)
    V = DipolePotential(Linear(0.0, 0.0), b)
    x = np.array([0.4, -0.2, 2.0])
    nu = np.array([0.3, 0.5, 0.8])
    assert V.value(x, nu) == 2.0 * b.M * b.g
    np.testing.assert_array_equal(V.grad_x(x, nu), np.array([0.0, 0.0, b.M * b.g]))
    np.testing.assert_array_equal(V.grad_nu(x, nu), np.zeros(3))
    blocks = hessian_blocks(np.array([0.7, 0.0, 0.0]), np.array([0.6, 0.0, 0.8]), Linear(0.0, 0.0), b)
    np.testing.assert_array_equal(blocks.Vxx, np.zeros((3, 3)))
    np.testing.assert_array_equal(blocks.VxN, np.zeros((3, 2)))
    np.testing.assert_array_equal(blocks.Vx3, np.zeros(3))


def test_linear_field_axial_gradient():
    b = _body(g=2.5)
    Bp = 3.0
    V = DipolePotential(Linear(1.0, Bp), b)
    x = np.array([0.5, 0.0, 0.2])
    g = V.grad_x(x, E3)
    # radial magnetic pull for nu = e3 vanishes; axial slope is -mu B' + M g
    assert abs(g[0]) <= 1e-14 and abs(g[1]) <= 1e-14
    assert math.isclose(g[2], -b.mu * Bp + b.M * b.g, rel_tol=1e-14)


def test_grad_nu_is_exactly_minus_mu_B():
    b = _body()
    model = Composite((Linear(0.5, 1.2), DipolePair(1.0, 1.0)))
    V = DipolePotential(model, b)
    rng = np.random.default_rng(31)
    for _ in range(10):
        x = np.array([rng.uniform(0.3, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)])
        r = math.hypot(x[0], x[1])
        j = eval_jet(model, r, x[2])
        np.testing.assert_array_equal(V.grad_nu(x, E3), -b.mu * cartesian_field(j, x))


def test_grad_x_matches_finite_differences():
    b = _body(g=1.7)
    model = Composite((Linear(0.5, 1.2), DipolePair(1.0, 1.0)))
    V = DipolePotential(model, b)
    rng = np.random.default_rng(32)
    for _ in range(10):
        x = np.array([rng.uniform(0.4, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)])
        nu = rng.normal(0.0, 1.0, 3)
        nu /= np.linalg.norm(nu)
        g = V.grad_x(x, nu)
        h = 1e-6 * max(1.0, float(np.max(np.abs(x))))
        for c in range(3):
            e = np.zeros(3)
            e[c] = h
            fd = (V.value(x + e, nu) - V.value(x - e, nu)) / (2.0 * h)
            assert abs(g[c] - fd) <= 1e-6 * max(1.0, abs(g[c]))


def test_finite_difference_potential_wrapper():
    def fn(x, nu):
        return float(x @ x + 2.0 * (nu @ nu) + x[0] * nu[2])

    V = FiniteDifferencePotential(fn)
    rng = np.random.default_rng(33)
    for _ in range(5):
        x = rng.normal(0.0, 1.0, 3)
        nu = rng.normal(0.0, 1.0, 3)
        assert V.value(x, nu) == fn(x, nu)
        gx = V.grad_x(x, nu)
        gn = V.grad_nu(x, nu)
        np.testing.assert_allclose(gx, 2.0 * x + np.array([nu[2], 0.0, 0.0]), atol=1e-8)
        np.testing.assert_allclose(gn, 4.0 * nu + np.array([0.0, 0.0, x[0]]), atol=1e-8)


def test_hessian_blocks_nu_blocks_vanish():
    b = _body(g=1.0)
    model = DipolePair(1.0, 1.0)
    rng = np.random.default_rng(34)
    for _ in range(5):
        nu = rng.normal(0.0, 1.0, 3)
        nu /= np.linalg.norm(nu)
        blocks = hessian_blocks(np.array([0.8, 0.0, 0.0]), nu, model, b)
        np.testing.assert_array_equal(blocks.VNN, np.zeros((2, 2)))
        np.testing.assert_array_equal(blocks.VN3, np.zeros(2))
        assert blocks.V33 == 0.0


def test_hessian_blocks_explicit_formulas():
    # in-plane second derivatives written out in terms of the field jet
    b = _body()
    model = DipolePair(1.0, 1.0)
    r = 0.8
    for nu in (np.array([0.0, 0.0, 1.0]), np.array([0.6, 0.0, 0.8]), np.array([-0.28, 0.0, 0.96])):
        j = eval_jet(model, r, 0.0)
        blocks = hessian_blocks(np.array([r, 0.0, 0.0]), nu, model, b)
        nr, nz = nu[0], nu[2]
        v11 = -b.mu * nz * j.Bz_rr + b.mu * nr * j.Bz_rz - b.mu * nr * (j.Bz_z + 2.0 * j.Br / r) / r
        v13 = -b.mu * nz * j.Bz_rz - b.mu * nr * j.Bz_rr
        v33 = -b.mu * nz * j.Bz_zz - b.mu * nr * j.Bz_rz
        assert math.isclose(blocks.Vxx[0, 0], v11, rel_tol=1e-12, abs_tol=1e-14)
        assert math.isclose(blocks.Vxx[0, 2], v13, rel_tol=1e-12, abs_tol=1e-14)
        assert math.isclose(blocks.Vxx[2, 2], v33, rel_tol=1e-12, abs_tol=1e-14)


def test_hessian_blocks_orbitron_case():
    b = _body()
    model = DipolePair(1.0, 1.0)
    r = 0.8
    j = eval_jet(model, r, 0.0)
    blocks = hessian_blocks(np.array([r, 0.0, 0.0]), E3, model, b)
    assert math.isclose(blocks.Vxx[0, 0], -b.mu * j.Bz_rr, rel_tol=1e-13)
    assert math.isclose(blocks.Vxx[2, 2], -b.mu * j.Bz_zz, rel_tol=1e-13)
    assert abs(blocks.Vxx[0, 2]) <= 1e-14


def test_hessian_blocks_match_finite_differences():
    b = _body(g=1.3)
    model = Composite((Linear(0.5, 1.2), DipolePair(1.0, 1.0)))
    V = DipolePotential(model, b)
    rng = np.random.default_rng(35)
    r0 = 0.8
    x0 = np.array([r0, 0.0, 0.0])
    for _ in range(5):
        nu = rng.normal(0.0, 1.0, 3)
        nu /= np.linalg.norm(nu)
        blocks = hessian_blocks(x0, nu, model, b)
        h = 1e-6
        # x-x block
        fd_xx = np.zeros((3, 3))
        for c in range(3):
            e = np.zeros(3)
            e[c] = h
            fd_xx[:, c] = (V.grad_x(x0 + e, nu) - V.grad_x(x0 - e, nu)) / (2.0 * h)
        np.testing.assert_allclose(blocks.Vxx, 0.5 * (fd_xx + fd_xx.T), rtol=0,
                                   atol=1e-5 * max(1.0, float(np.max(np.abs(blocks.Vxx)))))
        # mixed x-nu block in the rotated basis
        fd_xnu = np.zeros((3, 3))
        for c in range(3):
            e = np.zeros(3)
            e[c] = h
            fd_xnu[:, c] = (V.grad_x(x0, nu + e) - V.grad_x(x0, nu - e)) / (2.0 * h)
        rb = blocks.basis
        mixed_rot = fd_xnu[:, :2] @ rb.alpha
        np.testing.assert_allclose(blocks.VxN, mixed_rot, rtol=0,
                                   atol=1e-5 * max(1.0, float(np.max(np.abs(blocks.VxN)))))
        np.testing.assert_allclose(blocks.Vx3, fd_xnu[:, 2], rtol=0,
                                   atol=1e-5 * max(1.0, float(np.max(np.abs(blocks.Vx3)))))


def test_mixed_blocks_follow_jacobian():
    # VxN and Vx3 are columns of -mu J rotated into the in-plane basis
    b = _body()
    model = DipolePair(1.0, 1.0)
    r0 = 0.8
    x0 = np.array([r0, 0.0, 0.0])
    rng = np.random.default_rng(36)
    J = cartesian_jacobian(eval_jet(model, r0, 0.0), x0)
    for _ in range(10):
        nu = rng.normal(0.0, 1.0, 3)
        nu /= np.linalg.norm(nu)
        blocks = hessian_blocks(x0, nu, model, b)
        mixed = -b.mu * J
        rb = blocks.basis
        np.testing.assert_allclose(blocks.VxN, mixed[:, :2] @ rb.alpha, rtol=0, atol=1e-12)
        np.testing.assert_allclose(blocks.Vx3, mixed[:, 2], rtol=0, atol=1e-12)


def test_hessian_blocks_requires_support_form():
    b = _body()
    model = DipolePair(1.0, 1.0)
    with pytest.raises(ValueError):
        hessian_blocks(np.array([0.8, 0.1, 0.0]), E3, model, b)
    with pytest.raises(ValueError):
        hessian_blocks(np.array([0.8, 0.0, 0.2]), E3, model, b)
    with pytest.raises(AxisDegeneracy):
        hessian_blocks(np.array([0.0, 0.0, 0.0]), E3, model, b)
    with pytest.raises(AxisDegeneracy):
        hessian_blocks(np.array([-0.5, 0.0, 0.0]), E3, model, b)


def test_vxx_from_cartesian_hessian_contraction():
    b = _body()
    model = DipolePair(1.0, 1.0)
    r0 = 0.8
    x0 = np.array([r0, 0.0, 0.0])
    H = cartesian_hessian(eval_jet(model, r0, 0.0), x0)
    rng = np.random.default_rng(37)
    for _ in range(5):
        nu = rng.normal(0.0, 1.0, 3)
        nu /= np.linalg.norm(nu)
        blocks = hessian_blocks(x0, nu, model, b)
        expected = -b.mu * np.einsum("k,kij->ij", nu, H)
        np.testing.assert_allclose(blocks.Vxx, expected, rtol=0, atol=1e-13)
