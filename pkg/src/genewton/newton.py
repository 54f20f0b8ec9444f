"""Josephy-Newton iteration for ``0 in F(x) + T(x)`` with certificate tracking.

Each step solves the partially linearized inclusion

    0 in F(x_k) + J(x_k)(x_{k+1} - x_k) + T(x_{k+1}),

an affine generalized equation in ``z = x_{k+1}`` with matrix ``J(x_k)`` and
offset ``F(x_k) - J(x_k) x_k``.

In certified mode the user supplies either a Lipschitz constant ``L`` of
``J`` or a Smale ``gamma``.  After the first step the solver measures
``b = ||x_1 - x_0||`` and ``beta = ||inv(sym J(x0))||``, builds the induced
majorant and runs its scalar Newton sequence ``t_k`` alongside the vector
iterates.  Every step is then checked against

* majorant domination ``||x_{k+1} - x_k|| <= t_{k+1} - t_k``,
* membership ``x_k in K(t_k)``: ``||x_k - x0|| <= t_k`` and the Newton
  step length is at most ``-f(t_k)/f'(t_k)``,

and the a priori bound ``t* - t_k`` on the distance to the solution is
recorded.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .derivatives import check_smale_bound, estimate_lipschitz, sample_ball
from .errors import CertificateInfeasible, GEError, NonConvergence, NotPositiveError
from .inner import AffineGE, solve_affine_ge
from .linop import positivity_report
from .majorant import (Certificate, MajorantSpec, error_ef, eval_majorant, next_t,
                       smallest_zero, t_bar)
from .monotone import SetValuedOperator, ZeroOperator, natural_residual

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps
BOUND_SLACK = 1e-8


@dataclass(frozen=True)
class GEProblem:
    """``0 in F(x) + T(x)`` near ``x0``.

    ``R`` is the radius of a ball around ``x0`` on which ``F`` and ``J`` are
    defined and the user's constants are claimed to hold.  ``hess``
    optionally returns the stacked component Hessians (shape ``(n, n, n)``).
    """

    F: Callable
    J: Callable
    T: SetValuedOperator
    x0: np.ndarray
    R: float
    hess: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x0", x0)
        if not self.R > 0:
            raise ValueError("R must be positive")
        rep = positivity_report(self.jac(x0))
        if not rep.is_positive:
            raise NotPositiveError(
                f"symmetric part of J(x0) is not positive definite (lambda_min={rep.lambda_min:.6g})")

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    def fun(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.F(x), dtype=float))

    def jac(self, x) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.J(x), dtype=float))


@dataclass(frozen=True)
class OuterConfig:
    tol_outer: Optional[float] = None
    max_outer: int = 50
    method: str = "auto"
    bound_check: bool = True
    lipschitz_L: Optional[float] = None
    smale_gamma: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.lipschitz_L is not None and self.smale_gamma is not None:
            raise ValueError("give at most one of lipschitz_L and smale_gamma")

    @property
    def mode(self) -> str:
        if self.lipschitz_L is not None:
            return "lipschitz"
        if self.smale_gamma is not None:
            return "smale"
        return "none"


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    residual: float
    t_k: Optional[float] = None
    step_norm: Optional[float] = None
    t_next: Optional[float] = None
    gap: Optional[float] = None
    in_Kt: Optional[bool] = None
    apriori_bound: Optional[float] = None
    aposteriori_bound: Optional[float] = None


@dataclass
class SolveTrace:
    status: str
    records: List[IterationRecord]
    x_star: Optional[np.ndarray]
    certificate: Optional[Certificate]
    tol_outer: float
    margins: dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def converged(self) -> bool:
        return self.status in ("converged", "certificate_infeasible")

    @property
    def iterates(self) -> List[np.ndarray]:
        return [r.x for r in self.records]


def newton_step(p: GEProblem, x, tol_inner: float = 1e-12, method: str = "auto",
                strict: bool = True) -> np.ndarray:
    """One Josephy-Newton step ``N(x)``.

    With ``strict=False`` and ``T = 0`` an indefinite but nonsingular
    Jacobian is accepted (plain Newton for ``F(x) = 0``).
    """
    x = np.asarray(x, dtype=float)
    M = p.jac(x)
    q = p.fun(x) - M @ x
    tol_inner = max(tol_inner, 100.0 * EPS * float(np.linalg.norm(q)))
    rep = positivity_report(M)
    if not rep.is_positive:
        if not strict and isinstance(p.T, ZeroOperator):
            return np.linalg.solve(M, -q)
        raise NotPositiveError(
            f"symmetric part of J(x) is not positive definite at x={x.tolist()} "
            f"(lambda_min={rep.lambda_min:.6g}); the Newton step is not well defined")
    return solve_affine_ge(AffineGE(M, q, p.T), tol=tol_inner, method=method).z


def _inner_tol(tol_outer: float, prev_step: Optional[float]) -> float:
    if prev_step is None:
        return 0.1 * tol_outer
    return min(0.1 * tol_outer, 0.01 * prev_step ** 2)


def build_certificate(p: GEProblem, cfg: OuterConfig, x1) -> Certificate:
    """Certificate for the majorant induced by ``cfg`` and the first step ``x1``.

    Raises
    ------
    CertificateInfeasible
        When ``2bK > 1`` (Lipschitz), ``alpha > 3 - 2 sqrt 2`` (Smale), or the
        majorant's natural ball (radius ``1/K`` or ``1/gamma``) exceeds ``R``.
    """
    beta = positivity_report(p.jac(p.x0)).inv_norm
    b = float(np.linalg.norm(np.asarray(x1, dtype=float) - p.x0))
    if b == 0.0:
        raise CertificateInfeasible("x1 == x0: the start point already solves the problem", 0.0)
    if cfg.mode == "lipschitz":
        spec = MajorantSpec.lipschitz(beta * cfg.lipschitz_L, b)
        radius = 1.0 / spec.K
    elif cfg.mode == "smale":
        spec = MajorantSpec.smale(cfg.smale_gamma, b)
        radius = 1.0 / spec.gamma
    else:
        raise ValueError("build_certificate needs lipschitz_L or smale_gamma")
    cert = smallest_zero(spec)
    if radius > p.R:
        raise CertificateInfeasible(
            f"majorant ball radius {radius:.6g} exceeds the declared R={p.R:.6g}", radius - p.R)
    return replace(cert, beta=beta)


def feasibility_margins(p, cfg, x1) -> dict:
    beta = positivity_report(p.jac(p.x0)).inv_norm
    b = float(np.linalg.norm(np.asarray(x1) - p.x0))
    out = {"beta": beta, "b": b}
    if cfg.mode == "lipschitz":
        K = beta * cfg.lipschitz_L
        out.update(K=K, feasibility=2 * b * K - 1.0, ball=1.0 / K - p.R)
    elif cfg.mode == "smale":
        out.update(alpha=b * cfg.smale_gamma,
                   feasibility=b * cfg.smale_gamma - (3.0 - 2.0 * np.sqrt(2.0)),
                   ball=1.0 / cfg.smale_gamma - p.R)
    return out


def verify_constants(p: GEProblem, cfg: OuterConfig) -> List[str]:
    """Falsification checks of the user's L or gamma; returns warnings."""
    msgs = []
    if cfg.mode == "lipschitz":
        est = estimate_lipschitz(p, samples=500, seed=cfg.seed)
        if est > cfg.lipschitz_L * (1.0 + 1e-9) + 1e-12:
            msgs.append(f"Lipschitz violation: sampled L >= {est:.6g} exceeds the declared "
                        f"L = {cfg.lipschitz_L:.6g}; certificate unsound")
    elif cfg.mode == "smale" and p.hess is not None:
        rep = check_smale_bound(p, cfg.smale_gamma, samples=500, seed=cfg.seed)
        if not rep.holds:
            msgs.append(f"Smale bound violation at x={rep.witness.tolist()} "
                        f"(excess {rep.max_excess:.6g}); certificate unsound")
    return msgs


def solve(p: GEProblem, cfg: OuterConfig = OuterConfig()) -> SolveTrace:
    """Run the Newton iteration, co-running the majorant sequence when certified.

    Stops when the natural residual drops to ``tol_outer`` (default
    ``1e-10 (1 + ||F(x0)||)``) or a step shorter than ``1e-14 (1 + ||x0||)``
    is taken.  A failed certificate downgrades the run to uncertified mode;
    the final status is then ``certificate_infeasible`` if it converges.
    """
    x0 = p.x0
    tol = cfg.tol_outer if cfg.tol_outer is not None else 1e-10 * (1.0 + np.linalg.norm(p.fun(x0)))
    step_floor = 1e-14 * (1.0 + np.linalg.norm(x0))
    trace = SolveTrace("max_iter", [], None, None, tol)
    cert: Optional[Certificate] = None
    spec: Optional[MajorantSpec] = None
    certified = cfg.mode != "none"
    t = None
    x = x0
    prev_step = None
    x1 = None

    for k in range(cfg.max_outer + 1):
        res = natural_residual(p.T, x, p.fun(x)).natural_residual
        rec = IterationRecord(k, x, res, t_k=t)
        trace.records.append(rec)
        if res <= tol:
            trace.status = "converged"
            break
        if k == cfg.max_outer:
            break
        try:
            x_next = newton_step(p, x, _inner_tol(tol, prev_step), cfg.method,
                                 strict=cert is not None or not isinstance(p.T, ZeroOperator))
        except (NonConvergence, NotPositiveError) as exc:
            trace.status = "inner_failure"
            trace.error = str(exc)
            log.warning("inner failure at k=%d: %s", k, exc)
            break

        if k == 0 and certified:
            x1 = x_next
            trace.margins = feasibility_margins(p, cfg, x1)
            try:
                cert = build_certificate(p, cfg, x1)
            except CertificateInfeasible as exc:
                trace.warnings.append(f"certificate infeasible: {exc}")
            if cert is not None and cfg.bound_check:
                bad = verify_constants(p, cfg)
                if bad:
                    trace.warnings.extend(bad)
                    cert = None
            if cert is None:
                log.warning("continuing uncertified: %s", "; ".join(trace.warnings))
            else:
                spec = cert.spec
                t = 0.0
                rec.t_k = t

        step = float(np.linalg.norm(x_next - x))
        rec.step_norm = step
        if cert is not None:
            t_next = next_t(spec, cert, t)
            dt = t_next - t
            rec.t_next = t_next
            rec.gap = dt - step
            rec.in_Kt = bool(np.linalg.norm(x - x0) <= t + BOUND_SLACK and step <= dt + BOUND_SLACK)
            rec.apriori_bound = cert.t_star - t
            if cert.rate_Q is not None:
                rec.aposteriori_bound = cert.rate_Q * step * step
            t = t_next
        x = x_next
        prev_step = step
        if step <= step_floor:
            res = natural_residual(p.T, x, p.fun(x)).natural_residual
            trace.records.append(IterationRecord(k + 1, x, res, t_k=t))
            trace.status = "converged"
            break

    if trace.status == "converged":
        trace.x_star = x
        if certified and cert is None:
            trace.status = "certificate_infeasible"
    last = trace.records[-1]
    if cert is not None and last.t_k is not None:
        last.apriori_bound = cert.t_star - last.t_k
    trace.certificate = cert
    return trace


def iterate_from(p: GEProblem, start, tol: float, max_outer: int = 50,
                 method: str = "auto"):
    """Uncertified Newton iteration from an arbitrary start.

    Returns ``(x, converged)``; ``start`` need not satisfy the positivity
    requirement on ``x0``.
    """
    x = np.asarray(start, dtype=float)
    prev = None
    for _ in range(max_outer):
        if natural_residual(p.T, x, p.fun(x)).natural_residual <= tol:
            return x, True
        x_next = newton_step(p, x, _inner_tol(tol, prev), method, strict=False)
        prev = float(np.linalg.norm(x_next - x))
        x = x_next
        if not np.all(np.isfinite(x)):
            return x, False
    return x, natural_residual(p.T, x, p.fun(x)).natural_residual <= tol


@dataclass
class UniquenessReport:
    unique: bool
    radius: float
    trials: int
    offenders: list = field(default_factory=list)
    inconclusive: list = field(default_factory=list)

    def __bool__(self):
        return self.unique


def uniqueness_probe(p: GEProblem, cert: Optional[Certificate], trials: int = 20, seed: int = 0,
                     tol: float = 1e-8, x_star=None, radius: Optional[float] = None,
                     solve_tol: float = 1e-12) -> UniquenessReport:
    """Restart Newton from random points of ``B[x0, min(t*, R)]``.

    Every converged run must land within ``tol`` of ``x_star``.  Runs that
    fail (singular step, divergence) are inconclusive, not violations.
    ``radius`` overrides the certified radius, e.g. to probe outside it.
    """
    if radius is None:
        if cert is None:
            raise ValueError("need a certificate or an explicit radius")
        radius = min(cert.t_star, p.R)
    if x_star is None:
        x_star = solve(p, OuterConfig(tol_outer=solve_tol)).x_star
        if x_star is None:
            raise ValueError("reference solve did not converge")
    rng = np.random.default_rng(seed)
    rep = UniquenessReport(True, radius, trials)
    for _ in range(trials):
        start = sample_ball(rng, p.x0, radius)
        try:
            x, ok = iterate_from(p, start, solve_tol)
        except (GEError, np.linalg.LinAlgError):
            rep.inconclusive.append(start)
            continue
        if not ok:
            rep.inconclusive.append(start)
        elif np.linalg.norm(x - x_star) > tol:
            rep.unique = False
            rep.offenders.append((start, x))
    return rep


@dataclass
class ErrorBoundReport:
    samples: int
    max_excess: float
    inverse_checked: int
    max_inverse_excess: float
    violations: list = field(default_factory=list)
    inverse_violations: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations and not self.inverse_violations

    def __bool__(self):
        return self.holds


def linearization_error(p: GEProblem, x, y) -> np.ndarray:
    """``F(y) - F(x) - J(x)(y - x)``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return p.fun(y) - p.fun(x) - p.jac(x) @ (y - x)


def verify_error_bound(p: GEProblem, spec: MajorantSpec, samples: int = 1000, seed: int = 0,
                       slack: float = BOUND_SLACK) -> ErrorBoundReport:
    """Sample the linearization-error and inverse-Jacobian bounds.

    Draws ``t < v`` in ``[0, min(R_f, R))`` and points with
    ``||x - x0|| <= t``, ``||y - x|| <= v - t``, then checks

        beta ||E_F(x, y)|| <= e_f(t, v) ||y - x||^2 / (v - t)^2

    and, when ``f'(t) < 0``, ``||inv(sym J(x))|| <= -beta / f'(t)``.
    Witnesses of failure point at a wrong ``L`` or ``gamma``.
    """
    beta = positivity_report(p.jac(p.x0)).inv_norm
    rng = np.random.default_rng(seed)
    top = min(spec.R, p.R) * (1.0 - 1e-9)
    tb = t_bar(spec)
    rep = ErrorBoundReport(samples, -np.inf, 0, -np.inf)
    for _ in range(samples):
        t, v = np.sort(rng.random(2) * top)
        if v <= t:
            continue
        x = sample_ball(rng, p.x0, t)
        y = sample_ball(rng, x, v - t)
        dist = np.linalg.norm(y - x)
        lhs = beta * np.linalg.norm(linearization_error(p, x, y))
        rhs = error_ef(spec, t, v) * dist * dist / (v - t) ** 2
        excess = lhs - rhs
        rep.max_excess = max(rep.max_excess, excess)
        if excess > slack:
            rep.violations.append((x, y, t, v, lhs, rhs))
        if t < tb:
            dft = eval_majorant(spec, t)[1]
            pr = positivity_report(p.jac(x))
            rep.inverse_checked += 1
            if not pr.is_positive:
                rep.inverse_violations.append((x, t, np.inf, -beta / dft))
                continue
            ex = pr.inv_norm - (-beta / dft)
            rep.max_inverse_excess = max(rep.max_inverse_excess, ex)
            if ex > slack:
                rep.inverse_violations.append((x, t, pr.inv_norm, -beta / dft))
    return rep
