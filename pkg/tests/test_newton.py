import numpy as np
import pytest

from genewton.errors import CertificateInfeasible, NotPositiveError
from genewton.majorant import MajorantSpec
from genewton.monotone import BoxOperator, ZeroOperator
from genewton.newton import (GEProblem, OuterConfig, build_certificate, linearization_error,
                             newton_step, solve, uniqueness_probe, verify_error_bound)
from genewton.problems import catalog_problem


def _ncp(x0=2.0, R=2.5):
    return GEProblem(lambda x: x * x - 1.0, lambda x: np.diag(2.0 * x), BoxOperator(0.0, np.inf),
                     np.array([x0]), R)


def test_ncp_newton_step_exact():
    p = _ncp()
    assert newton_step(p, p.x0)[0] == 1.25
    assert newton_step(p, np.array([1.25]))[0] == 1.025


def test_ncp_step_respects_box():
    # F > 0 on the orthant, so the solution sits on the bound
    p = GEProblem(lambda x: x + 3.0, lambda x: np.eye(1), BoxOperator(0.0, np.inf),
                  np.array([1.0]), 2.0)
    assert newton_step(p, p.x0)[0] == 0.0
    trace = solve(p)
    assert trace.status == "converged"
    assert trace.x_star[0] == 0.0


def test_start_point_must_be_positive():
    with pytest.raises(NotPositiveError):
        GEProblem(lambda x: x * x - 1.0, lambda x: np.diag(2.0 * x), ZeroOperator(),
                  np.array([-1.0]), 1.0)


def test_config_rejects_two_modes():
    with pytest.raises(ValueError):
        OuterConfig(lipschitz_L=1.0, smale_gamma=1.0)


def test_certificate_values():
    p = _ncp()
    cert = build_certificate(p, OuterConfig(lipschitz_L=2.0), newton_step(p, p.x0))
    assert cert.beta == 0.25
    assert cert.b == 0.75
    assert cert.spec.K == 0.5
    assert cert.t_star == 1.0


def test_certificate_infeasible_on_big_step():
    p = _ncp(x0=2.0)
    with pytest.raises(CertificateInfeasible):
        build_certificate(p, OuterConfig(lipschitz_L=20.0), newton_step(p, p.x0))


def test_radius_exceeding_R_is_infeasible():
    p = _ncp(R=0.5)
    with pytest.raises(CertificateInfeasible, match="exceeds"):
        build_certificate(p, OuterConfig(lipschitz_L=2.0), newton_step(p, p.x0))


def test_uncertified_solve():
    p = _ncp()
    trace = solve(p, OuterConfig(tol_outer=1e-14))
    assert trace.status == "converged"
    assert trace.certificate is None
    assert trace.x_star[0] == pytest.approx(1.0, abs=1e-14)
    assert all(r.t_k is None for r in trace.records)


def test_wrong_lipschitz_is_flagged():
    # L = 0.5 understates the true constant 2; sampling must find out
    p = _ncp(R=10.0)
    trace = solve(p, OuterConfig(lipschitz_L=0.5))
    assert trace.status == "certificate_infeasible"
    assert any("Lipschitz" in w for w in trace.warnings)
    assert trace.x_star[0] == pytest.approx(1.0)


def test_max_iter_status():
    p = GEProblem(lambda x: np.exp(x) - 1.1, lambda x: np.diag(np.exp(x)), ZeroOperator(),
                  np.array([2.0]), 3.0)
    trace = solve(p, OuterConfig(max_outer=2))
    assert trace.status == "max_iter"
    assert trace.x_star is None
    assert len(trace.records) == 3


@pytest.mark.parametrize("name", ["ncp-sqrt", "exp-root", "qp-kkt-2d", "l1-prox-ge"])
def test_catalog_majorant_domination(name):
    pf = catalog_problem(name)
    trace = solve(pf.to_problem(), pf.to_config())
    assert trace.status == "converged"
    np.testing.assert_allclose(trace.x_star, pf.solution, atol=1e-9)
    for r in trace.records:
        if r.gap is not None:
            assert r.gap >= -1e-8
            assert r.in_Kt


def test_affine_problem_converges_in_one_step():
    pf = catalog_problem("affine-box-nd", n=5, seed=2)
    trace = solve(pf.to_problem(), pf.to_config(tol_outer=1e-11))
    assert trace.status == "converged"
    assert len(trace.records) <= 3


def test_uniqueness_control_offender_is_other_root():
    p = GEProblem(lambda x: x * x - 1.0, lambda x: np.diag(2.0 * x), ZeroOperator(),
                  np.array([0.5]), 3.0)
    rep = uniqueness_probe(p, None, x_star=np.array([1.0]), radius=2.5, seed=1)
    assert not rep
    for _, x in rep.offenders:
        assert x[0] == pytest.approx(-1.0)


def test_uniqueness_needs_radius():
    with pytest.raises(ValueError):
        uniqueness_probe(_ncp(), None)


def test_linearization_error_of_quadratic():
    p = _ncp()
    x, y = np.array([1.5]), np.array([2.25])
    np.testing.assert_allclose(linearization_error(p, x, y), [(y - x)[0] ** 2])


def test_error_bound_detects_wrong_constant():
    p = _ncp(R=2.0)
    good = verify_error_bound(p, MajorantSpec.lipschitz(0.25 * 2.0, 0.1), samples=300)
    bad = verify_error_bound(p, MajorantSpec.lipschitz(0.25 * 1.0, 0.1), samples=300)
    assert good
    assert not bad
    assert bad.violations
