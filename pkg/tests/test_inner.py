import numpy as np
import pytest

from genewton.errors import DegeneracyError, NonConvergence, NotPositiveError
from genewton.inner import (AffineGE, enumerate_oracle, forward_backward, random_affine_box,
                            semismooth_newton, solve_affine_ge)
from genewton.monotone import BoxOperator, L1Subdifferential, ZeroOperator

QP_M = np.array([[2.0, 1.0], [1.0, 2.0]])
QP_Q = np.array([-1.5, 1.0])


@pytest.mark.parametrize("method", ["ssn", "fb", "enumeration"])
def test_qp_kkt_solution(method):
    # hand-solved: z2 = 0 at its lower bound, 2 z1 = 1.5
    ge = AffineGE(QP_M, QP_Q, BoxOperator(0.0, 1.0))
    sol = solve_affine_ge(ge, tol=1e-13, method=method)
    np.testing.assert_allclose(sol.z, [0.75, 0.0], atol=1e-12)
    assert sol.residual <= 1e-12


def test_zero_operator_is_linear_solve(rng):
    M = np.eye(4) + 0.4 * rng.standard_normal((4, 4))
    M = M + M.T + 4 * np.eye(4)
    q = rng.standard_normal(4)
    ge = AffineGE(M, q, ZeroOperator())
    for method in ("ssn", "fb", "enumeration"):
        np.testing.assert_allclose(solve_affine_ge(ge, method=method).z, np.linalg.solve(M, -q),
                                   atol=1e-10)


def test_l1_instance_uses_forward_backward():
    ge = AffineGE([[2.0, 0.5], [-0.5, 1.0]], [-3.0, 0.2], L1Subdifferential(1.0))
    sol = solve_affine_ge(ge, tol=1e-13)
    assert sol.method == "forward_backward"
    np.testing.assert_allclose(sol.z, [1.0, 0.0], atol=1e-12)


def test_nonpositive_matrix_rejected():
    ge = AffineGE(np.diag([1.0, -1.0]), [0.0, 0.0], BoxOperator(0.0, 1.0))
    for fn in (forward_backward, semismooth_newton, enumerate_oracle):
        with pytest.raises(NotPositiveError):
            fn(ge)


def test_weakly_complementary_point_is_degenerate():
    # z = 0, w = 0: both the "lower" and the "free" pattern are consistent
    ge = AffineGE(np.eye(1), [0.0], BoxOperator(0.0, np.inf))
    with pytest.raises(DegeneracyError) as exc:
        enumerate_oracle(ge)
    assert len(exc.value.patterns) == 2
    assert semismooth_newton(ge).z[0] == 0.0


def test_forward_backward_budget():
    ge = AffineGE([[1.0, 10.0], [-10.0, 1.0]], [1.0, 1.0], ZeroOperator())
    with pytest.raises(NonConvergence) as exc:
        forward_backward(ge, tol=1e-14, max_iter=5)
    assert 0 < exc.value.rho < 1


def test_enumeration_size_limit():
    ge = AffineGE(np.eye(13), np.zeros(13), BoxOperator(0.0, 1.0))
    with pytest.raises(ValueError):
        enumerate_oracle(ge)


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_affine_ge(AffineGE(np.eye(1), [1.0], ZeroOperator()), method="simplex")


def test_random_instances_agree():
    rng = np.random.default_rng(99)
    for _ in range(60):
        ge = random_affine_box(int(rng.integers(1, 7)), rng)
        assert ge.positivity.is_positive
        ref = enumerate_oracle(ge).z
        for fn in (semismooth_newton, forward_backward):
            sol = fn(ge, tol=1e-12)
            assert sol.residual <= 1e-12
            np.testing.assert_allclose(sol.z, ref, atol=1e-9)


def test_warm_start_converges_immediately():
    ge = AffineGE(QP_M, QP_Q, BoxOperator(0.0, 1.0))
    sol = semismooth_newton(ge, z0=[0.75, 0.0])
    assert sol.iterations == 0
