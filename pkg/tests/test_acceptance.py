"""Acceptance suite: one test per criterion, summarized at the end of the run.

Oracle values were computed independently (exact rational arithmetic for the
quadratic NCP, 50-digit mpmath for the exponential problem) and are frozen
here.
"""

import math

import numpy as np
import pytest

from genewton import cli
from genewton.derivatives import check_smale_bound
from genewton.inner import (enumerate_oracle, forward_backward, random_affine_box,
                            semismooth_newton)
from genewton.majorant import MajorantSpec, scalar_sequence, smallest_zero
from genewton.monotone import ZeroOperator
from genewton.newton import GEProblem, solve, uniqueness_probe, verify_error_bound
from genewton.problems import CATALOG, catalog_problem, loads_problem

# x_k for ncp-sqrt (x0 = 2): 2, 5/4, 41/40, 3281/3280, ...
NCP_ITERATES = [2.0, 1.25, 1.025, 1.000304878048780487804878, 1.000000046461147330156629819879]
NCP_T = [0.0, 0.75, 0.975, 0.999695121951219512195, 0.9999999535388526698433701801]
SMALE_T_STAR = 0.10592363464399474678885761108712
LN_1_1 = 0.095310179804324860043952123280765

SLACK = 1e-8


def _certified_run(name, tol=1e-14):
    pf = catalog_problem(name)
    p = pf.to_problem()
    trace = solve(p, pf.to_config(tol_outer=tol))
    assert trace.status == "converged", trace.warnings
    assert trace.certificate is not None
    return pf, p, trace


def test_criterion_1_tight_majorant_equality():
    _, _, trace = _certified_run("ncp-sqrt")
    cert = trace.certificate
    assert abs(cert.t_star - 1.0) <= 1e-12
    recs = trace.records
    for k in range(5):
        assert abs(recs[k].x[0] - NCP_ITERATES[k]) <= 1e-12
        assert abs(recs[k].t_k - NCP_T[k]) <= 1e-12
    for k in range(4):
        assert abs(recs[k].step_norm - (recs[k].t_next - recs[k].t_k)) <= 1e-10
        assert recs[k].in_Kt


@pytest.mark.parametrize("name", ["ncp-sqrt", "exp-root", "qp-kkt-2d"])
def test_criterion_2_bound_suite(name):
    pf, _, trace = _certified_run(name)
    cert = trace.certificate
    x_star = np.asarray(pf.solution)
    recs = trace.records
    errs = [float(np.linalg.norm(x_star - r.x)) for r in recs]
    for r, e in zip(recs, errs):
        if r.gap is not None:
            assert r.gap >= -SLACK
        assert e <= cert.t_star - r.t_k + SLACK
    for k in range(len(recs) - 1):
        assert errs[k + 1] <= 0.5 * errs[k] + 1e-15
        assert cert.t_star - recs[k + 1].t_k <= 0.5 * (cert.t_star - recs[k].t_k) + 1e-15
    assert cert.h4
    # ratios below ~1e-6 are dominated by rounding in e_{k+1}
    ratios = [errs[k + 1] / errs[k] ** 2 for k in range(len(errs) - 1) if errs[k] > 1e-6]
    assert ratios
    assert max(ratios) <= 1.05 * cert.rate_Q


def test_criterion_3_lipschitz_closed_form():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        K = 10.0 ** rng.uniform(-1.0, 1.0)
        b = rng.uniform(0.0, 1.0) / (2.0 * K)
        if b == 0.0:
            continue
        cert = smallest_zero(MajorantSpec.lipschitz(K, b))
        closed = (1.0 - math.sqrt(1.0 - 2.0 * b * K)) / K
        assert abs(closed - cert.t_star_bisect) <= 1e-12
        assert abs(cert.t_star - cert.t_star_bisect) <= 1e-12
        seq = scalar_sequence(cert.spec, tol=1e-13, max_iter=200, cert=cert)
        t = np.array(seq.t_values)
        assert seq.converged
        assert np.all(np.diff(t) > 0)
        assert np.all(t <= cert.t_star)
        assert cert.t_star - t[-1] <= 1e-12


def test_criterion_4_smale_case():
    pf, p, trace = _certified_run("exp-root", tol=1e-15)
    cert = trace.certificate
    assert cert.spec.kind == "smale"
    assert cert.spec.gamma == 0.5
    assert abs(cert.b - 0.1) <= 1e-15
    assert abs(cert.alpha - 0.05) <= 1e-15
    assert abs(cert.t_star - SMALE_T_STAR) <= 1e-12
    assert abs(cert.t_star_bisect - SMALE_T_STAR) <= 1e-12
    assert abs(trace.x_star[0] - LN_1_1) <= 1e-12
    for x in trace.iterates:
        assert np.linalg.norm(x - p.x0) <= cert.t_star + 1e-15
    assert check_smale_bound(p, 0.5, samples=1000, seed=0)
    control = check_smale_bound(p, 0.1, samples=1000, seed=0)
    assert not control
    assert control.witness is not None


def test_criterion_5_inner_solver_agreement():
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(500):
        n = int(rng.integers(1, 9))
        ge = random_affine_box(n, rng)
        sols = [semismooth_newton(ge, tol=1e-12), forward_backward(ge, tol=1e-12),
                enumerate_oracle(ge)]
        for s in sols:
            assert ge.residual(s.z) <= 1e-10, (i, s.method, ge.residual(s.z))
        for a in range(3):
            for c in range(a + 1, 3):
                worst = max(worst, float(np.max(np.abs(sols[a].z - sols[c].z))))
    assert worst <= 1e-8


@pytest.mark.parametrize("name", ["ncp-sqrt", "exp-root", "qp-kkt-2d", "l1-prox-ge"])
def test_criterion_6_uniqueness_probe(name):
    pf, p, trace = _certified_run(name)
    rep = uniqueness_probe(p, trace.certificate, trials=20, seed=0, x_star=trace.x_star)
    assert rep
    assert len(rep.inconclusive) < rep.trials


def test_criterion_6_non_unique_control():
    p = GEProblem(lambda x: x * x - 1.0, lambda x: np.diag(2.0 * x), ZeroOperator(),
                  np.array([0.5]), R=3.0)
    rep = uniqueness_probe(p, None, trials=20, seed=0, x_star=np.array([1.0]), radius=2.5)
    assert not rep
    assert any(abs(x[0] + 1.0) <= 1e-8 for _, x in rep.offenders)


def _quadratic_nonsymmetric():
    # F(x) = M x + q + c * x^2 with exact Lipschitz constant 2 max|c|
    M = np.array([[3.0, 1.0, 0.0], [-1.0, 3.0, 0.5], [0.0, -0.5, 2.5]])
    q = np.array([-1.0, 0.5, -2.0])
    c = np.array([0.5, -0.25, 0.4])
    p = GEProblem(lambda x: M @ x + q + c * x * x, lambda x: M + np.diag(2.0 * c * x),
                  ZeroOperator(), np.zeros(3), R=1.5)
    return p, 2.0 * float(np.max(np.abs(c)))


@pytest.mark.parametrize("case", ["ncp-sqrt", "square-3d", "nonsymmetric-3d"])
def test_criterion_7_error_bounds_sampled(case):
    if case == "ncp-sqrt":
        p, L = catalog_problem("ncp-sqrt").to_problem(), 2.0
    elif case == "square-3d":
        pf = loads_problem("""{"schema": 1, "n": 3,
            "F": {"builtin": {"name": "square", "params": {"a": 1.0}}},
            "T": {"type": "zero"}, "x0": [2.0, 2.5, 3.0], "R": 1.5}""")
        p, L = pf.to_problem(), 2.0
    else:
        p, L = _quadratic_nonsymmetric()
    beta = 1.0 / np.linalg.eigvalsh(0.5 * (p.jac(p.x0) + p.jac(p.x0).T)).min()
    spec = MajorantSpec.lipschitz(beta * L, 0.1)
    rep = verify_error_bound(p, spec, samples=1000, seed=7, slack=SLACK)
    assert rep.max_excess <= SLACK
    assert rep.inverse_checked > 0
    assert rep.max_inverse_excess <= SLACK
    assert rep.holds


def test_criterion_8_determinism_and_round_trip(tmp_path):
    for fmt in ("json", "csv"):
        for cmd in ("solve", "certify"):
            outs = []
            for run in range(2):
                path = tmp_path / f"{cmd}-{run}.{fmt}"
                code = cli.main([cmd, "--problem", "ncp-sqrt", "--report", fmt, "--out", str(path)])
                assert code == cli.EXIT_OK
                outs.append(path.read_bytes())
            assert outs[0] == outs[1]
    outs = []
    for run in range(2):
        path = tmp_path / f"oracle-{run}.json"
        assert cli.main(["oracle", "--problem", "affine-box-nd:n=7,seed=4", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]

    for name in CATALOG:
        pf = catalog_problem(name)
        again = loads_problem(pf.dumps())
        assert again.dumps() == pf.dumps()
        np.testing.assert_array_equal(again.x0, pf.x0)
        p1, p2 = pf.to_problem(), again.to_problem()
        x0 = np.asarray(pf.x0, dtype=float)
        for x in (x0, x0 + 0.125):
            np.testing.assert_array_equal(p1.fun(x), p2.fun(x))
            np.testing.assert_array_equal(p1.jac(x), p2.jac(x))
