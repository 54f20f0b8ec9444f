"""Solvers for the affine generalized equation ``0 in q + M z + T(z)``.

This is the subproblem of every Newton step.  When the symmetric part of
``M`` is positive definite and ``T`` is maximal monotone the solution is
unique, so the three methods below must agree:

* :func:`semismooth_newton` -- active-set Newton on the natural map, boxes only;
* :func:`forward_backward` -- fixed-step splitting, any resolvent;
* :func:`enumerate_oracle` -- all ``3**n`` active-set patterns, a brute-force
  reference for small boxes.
"""

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DegeneracyError, NonConvergence, NotPositiveError
from .linop import as_matrix, op_norm, positivity_report
from .monotone import BoxOperator, SetValuedOperator, ZeroOperator, natural_residual, resolvent

METHODS = ("active_set_newton", "forward_backward", "enumeration")
ENUM_TIE_TOL = 1e-9
ENUM_MAX_N = 12


@dataclass(frozen=True)
class AffineGE:
    M: np.ndarray
    q: np.ndarray
    T: SetValuedOperator

    def __post_init__(self):
        object.__setattr__(self, "M", as_matrix(self.M))
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if q.shape != (self.M.shape[0],):
            raise ValueError(f"q has shape {q.shape}, expected ({self.M.shape[0]},)")
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @cached_property
    def positivity(self):
        return positivity_report(self.M)

    @cached_property
    def norm(self) -> float:
        return op_norm(self.M)

    def residual(self, z) -> float:
        return natural_residual(self.T, z, self.q + self.M @ z, 1.0).natural_residual

    def require_positive(self):
        rep = self.positivity
        if not rep.is_positive:
            raise NotPositiveError(
                f"symmetric part of M is not positive definite (lambda_min={rep.lambda_min:.6g}); "
                "the inner solution need not exist or be unique")
        return rep


@dataclass(frozen=True)
class InnerSolution:
    z: np.ndarray
    residual: float
    method: str
    iterations: int


def _box_bounds(T, n):
    if isinstance(T, ZeroOperator):
        return np.full(n, -np.inf), np.full(n, np.inf)
    return T.bounds(n)


def _fast_resolvent(T, n):
    # bounds broadcast once per solve instead of once per iteration
    if isinstance(T, BoxOperator):
        lo, up = T.bounds(n)
        return lambda x, lam: np.minimum(np.maximum(x, lo), up)
    return lambda x, lam: resolvent(T, lam, x)


def forward_backward(p: AffineGE, tol: float = 1e-12, max_iter: int = 200_000,
                     z0=None) -> InnerSolution:
    """Iterate ``z <- J_{lam T}(z - lam (q + M z))`` with ``lam = c/||M||^2``.

    ``c`` is the smallest eigenvalue of the symmetric part of ``M``; the map
    is then a contraction with factor ``sqrt(1 - c^2/||M||^2)``.
    """
    c = p.require_positive().lambda_min
    L = p.norm
    lam = c / (L * L)
    rho = np.sqrt(max(0.0, 1.0 - (c / L) ** 2))
    J = _fast_resolvent(p.T, p.n)
    M, q = p.M, p.q
    z = np.zeros(p.n) if z0 is None else np.array(z0, dtype=float)
    for it in range(max_iter + 1):
        w = q + M @ z
        res = float(np.linalg.norm(z - J(z - w, 1.0)))
        if res <= tol:
            return InnerSolution(z, res, "forward_backward", it)
        if it == max_iter:
            break
        z = J(z - lam * w, lam)
    raise NonConvergence(
        f"forward-backward reached {max_iter} iterations at residual {res:.3g} "
        f"(contraction factor {rho:.6f})", best=z, rho=rho)


def semismooth_newton(p: AffineGE, tol: float = 1e-12, max_iter: int = 50,
                      z0=None) -> InnerSolution:
    """Active-set Newton on ``z - P(z - (q + M z))`` for a box operator.

    Each step reads the active sets off ``y = z - (q + Mz)``, pins the active
    coordinates to their bounds and solves the reduced system on the free
    ones.  A repeated active set or an exhausted budget hands the best
    iterate to :func:`forward_backward`.
    """
    if not isinstance(p.T, (BoxOperator, ZeroOperator)):
        raise TypeError("semismooth_newton needs a box (or zero) operator")
    p.require_positive()
    lo, up = _box_bounds(p.T, p.n)
    M, q = p.M, p.q
    z = np.zeros(p.n) if z0 is None else np.array(z0, dtype=float)
    z = np.clip(z, lo, up)
    best, best_res = z, p.residual(z)
    seen = set()
    for it in range(max_iter):
        res = p.residual(z)
        if res < best_res:
            best, best_res = z, res
        if res <= tol:
            return InnerSolution(z, res, "active_set_newton", it)
        y = z - (q + M @ z)
        at_lo, at_up = y < lo, y > up
        key = (at_lo.tobytes(), at_up.tobytes())
        if key in seen:
            break
        seen.add(key)
        free = ~(at_lo | at_up)
        znew = np.where(at_lo, lo, np.where(at_up, up, 0.0))
        if free.any():
            act = ~free
            rhs = -q[free] - M[np.ix_(free, act)] @ znew[act]
            try:
                znew[free] = np.linalg.solve(M[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                break
        z = znew
    else:
        res = p.residual(z)
        if res <= tol:
            return InnerSolution(z, res, "active_set_newton", max_iter)
        if res < best_res:
            best = z
    try:
        return forward_backward(p, tol=tol, z0=best)
    except NonConvergence as exc:
        raise NonConvergence(f"semismooth Newton fallback failed: {exc}", best=exc.best,
                             rho=exc.rho) from exc


def enumerate_oracle(p: AffineGE, tol: float = ENUM_TIE_TOL) -> InnerSolution:
    """Solve a box instance by trying every active-set pattern.

    Each coordinate is at its lower bound, at its upper bound or free
    (infinite bounds drop out).  A pattern is consistent when the reduced
    linear solve keeps free coordinates inside the box and the multipliers
    have the right sign.  Exactly one pattern must be consistent.
    """
    if not isinstance(p.T, (BoxOperator, ZeroOperator)):
        raise TypeError("enumerate_oracle needs a box operator")
    if p.n > ENUM_MAX_N:
        raise ValueError(f"enumeration limited to n <= {ENUM_MAX_N}, got n={p.n}")
    p.require_positive()
    lo, up = _box_bounds(p.T, p.n)
    M, q = p.M, p.q
    options = []
    for i in range(p.n):
        opts = []
        if np.isfinite(lo[i]):
            opts.append("lower")
        if np.isfinite(up[i]) and up[i] != lo[i]:
            opts.append("upper")
        if lo[i] != up[i]:
            opts.append("free")
        options.append(opts)

    # group patterns by free set so each reduced matrix is factored once
    free_opts = [("free" in o) for o in options]
    act_opts = [[c for c in o if c != "free"] for o in options]
    found = []
    tried = 0
    for free_bits in itertools.product(*[(False, True) if f else (False,) for f in free_opts]):
        free = np.array(free_bits, dtype=bool)
        act = ~free
        act_idx = np.flatnonzero(act)
        choices = list(itertools.product(*[act_opts[i] for i in act_idx]))
        if not choices:
            continue
        tried += len(choices)
        codes = np.array(choices, dtype=object).reshape(len(choices), act_idx.size)
        is_lo = np.zeros((len(choices), p.n), dtype=bool)
        is_lo[:, act] = codes == "lower"
        is_up = np.zeros_like(is_lo)
        is_up[:, act] = codes == "upper"
        Z = np.where(is_lo, lo, np.where(is_up, up, 0.0))
        if free.any():
            rhs = -q[free][:, None] - M[np.ix_(free, act)] @ Z[:, act].T
            Z[:, free] = np.linalg.solve(M[np.ix_(free, free)], rhs).T
        W = Z @ M.T + q
        inside = (Z >= lo - tol) & (Z <= up + tol)
        ok = np.where(is_lo, W >= -tol, np.where(is_up, W <= tol, inside)).all(axis=1)
        for j in np.flatnonzero(ok):
            pattern = ["free"] * p.n
            for c, i in zip(choices[j], act_idx):
                pattern[i] = c
            found.append((tuple(pattern), np.clip(Z[j], lo, up)))

    found.sort(key=lambda item: item[0])
    if len(found) != 1:
        raise DegeneracyError(
            f"{len(found)} consistent active-set patterns (expected exactly one)",
            patterns=[f[0] for f in found])
    z = found[0][1]
    return InnerSolution(z, p.residual(z), "enumeration", tried)


def solve_affine_ge(p: AffineGE, tol: float = 1e-12, method: str = "auto",
                    z0=None, max_iter: Optional[int] = None) -> InnerSolution:
    """Dispatch to an inner method.

    ``method`` is ``"auto"``, ``"ssn"``/``"active_set_newton"``,
    ``"fb"``/``"forward_backward"`` or ``"enumeration"``.  ``auto`` uses
    semismooth Newton for box and zero operators, forward-backward otherwise.
    """
    p.require_positive()
    if method == "auto":
        method = "ssn" if isinstance(p.T, (BoxOperator, ZeroOperator)) else "fb"
    kw = {} if max_iter is None else {"max_iter": max_iter}
    if method in ("ssn", "active_set_newton"):
        return semismooth_newton(p, tol=tol, z0=z0, **kw)
    if method in ("fb", "forward_backward"):
        return forward_backward(p, tol=tol, z0=z0, **kw)
    if method == "enumeration":
        return enumerate_oracle(p)
    raise ValueError(f"unknown inner method {method!r}")


def random_affine_box(n: int, rng: np.random.Generator) -> AffineGE:
    """A random box instance whose ``M`` has positive-definite symmetric part.

    ``c/||M||`` stays moderate, keeping forward-backward affordable.
    """
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, n))
    M = A.T @ A / n + 0.5 * np.eye(n) + 0.3 * (B - B.T)
    q = 2.0 * rng.standard_normal(n)
    lo = np.where(rng.random(n) < 0.25, -np.inf, -rng.random(n))
    width = 0.2 + 1.8 * rng.random(n)
    up = np.where(rng.random(n) < 0.25, np.inf, np.where(np.isfinite(lo), lo, -0.5) + width)
    return AffineGE(M, q, BoxOperator(lo, up))
