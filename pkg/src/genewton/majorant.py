"""Scalar majorant functions and the Newton sequence they generate.

A majorant ``f: [0, R) -> R`` satisfies

* h1: ``f(0) > 0`` and ``f'(0) = -1``,
* h2: ``f'`` is convex and strictly increasing,
* h3: ``f`` has a zero in ``(0, R)``,
* h4 (optional): ``f'(t*) < 0`` at the smallest zero ``t*``.

Under h1-h3 the scalar Newton sequence ``t_{k+1} = t_k - f(t_k)/f'(t_k)``
started at ``t_0 = 0`` increases monotonically to ``t*``; it dominates the
steps of the vector iteration and yields the a priori bounds ``t* - t_k``.

Two closed-form families are built in:

* Lipschitz, ``f(t) = (K/2) t^2 - t + b``, feasible when ``2bK <= 1``;
* Smale, ``f(t) = t/(1 - gamma t) - 2t + b`` on ``[0, 1/gamma)``, feasible
  when ``alpha = b*gamma <= 3 - 2*sqrt(2)``.

Arbitrary C^2 majorants are accepted through :meth:`MajorantSpec.custom`.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .errors import CertificateInfeasible, DomainError

#: Stand-in for an unbounded domain radius of the Lipschitz majorant.
LIPSCHITZ_R_CAP = 1e18
#: Largest admissible ``alpha = b*gamma`` for the Smale majorant.
SMALE_ALPHA_MAX = 3.0 - 2.0 * math.sqrt(2.0)
#: ``|f'(t*)|`` at or below this counts as h4 failing.
H4_TIE_TOL = 1e-12
#: Grid used to sample h1/h2 for custom majorants.
CUSTOM_GRID_SIZE = 1024

ScalarFn = Callable[[float], float]


@dataclass(frozen=True)
class MajorantSpec:
    """Majorant data; build instances with the classmethod constructors."""

    kind: str
    b: float
    R: float
    K: Optional[float] = None
    gamma: Optional[float] = None
    f: Optional[ScalarFn] = field(default=None, compare=False, repr=False)
    df: Optional[ScalarFn] = field(default=None, compare=False, repr=False)
    d2f: Optional[ScalarFn] = field(default=None, compare=False, repr=False)

    @classmethod
    def lipschitz(cls, K: float, b: float) -> "MajorantSpec":
        if not (K > 0 and b > 0):
            raise ValueError(f"lipschitz majorant needs K > 0 and b > 0, got K={K}, b={b}")
        return cls("lipschitz", float(b), LIPSCHITZ_R_CAP, K=float(K))

    @classmethod
    def smale(cls, gamma: float, b: float) -> "MajorantSpec":
        if not (gamma > 0 and b > 0):
            raise ValueError(f"smale majorant needs gamma > 0 and b > 0, got gamma={gamma}, b={b}")
        return cls("smale", float(b), 1.0 / gamma, gamma=float(gamma))

    @classmethod
    def custom(cls, f: ScalarFn, df: ScalarFn, d2f: ScalarFn, R: float) -> "MajorantSpec":
        """Wrap user callables; they must be reentrant."""
        if not R > 0:
            raise ValueError("R must be positive")
        return cls("custom", float(f(0.0)), float(R), f=f, df=df, d2f=d2f)


@dataclass(frozen=True)
class Certificate:
    """Derived quantities of a feasible majorant.

    ``beta`` is filled in when the certificate was built for a concrete
    problem (it is ``||inv(sym J(x0))||``).
    """

    spec: MajorantSpec
    t_star: float
    t_bar: float
    h1: bool
    h2: bool
    h3: bool
    h4: bool
    rate_Q: Optional[float]
    alpha: Optional[float]
    t_star_bisect: float
    beta: Optional[float] = None

    @property
    def b(self) -> float:
        return self.spec.b


@dataclass(frozen=True)
class ScalarTrace:
    t_values: List[float]
    converged: bool


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of h1-h4; each margin is positive exactly when violated."""

    h1: bool
    h2: bool
    h3: bool
    h4: bool
    margins: Dict[str, float]
    grid_size: int = 0

    @property
    def all_hold(self) -> bool:
        return self.h1 and self.h2 and self.h3 and self.h4


def eval_majorant(spec: MajorantSpec, t: float):
    """Return ``(f(t), f'(t), f''(t))``."""
    if not (0.0 <= t < spec.R):
        raise DomainError(f"t={t!r} outside [0, {spec.R!r})")
    if spec.kind == "lipschitz":
        K, b = spec.K, spec.b
        return 0.5 * K * t * t - t + b, K * t - 1.0, K
    if spec.kind == "smale":
        g, b = spec.gamma, spec.b
        s = 1.0 - g * t
        return t / s - 2.0 * t + b, 1.0 / (s * s) - 2.0, 2.0 * g / (s * s * s)
    return float(spec.f(t)), float(spec.df(t)), float(spec.d2f(t))


def _f(spec, t):
    return eval_majorant(spec, t)[0]


def _df(spec, t):
    return eval_majorant(spec, t)[1]


def _bisect(g, lo: float, hi: float, max_iter: int = 400) -> float:
    """Bisection for ``g(lo) > 0 >= g(hi)``, run to floating-point resolution."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def t_bar(spec: MajorantSpec) -> float:
    """``sup{t in [0, R): f'(t) < 0}``."""
    if spec.kind == "lipschitz":
        return 1.0 / spec.K
    if spec.kind == "smale":
        return (1.0 - 1.0 / math.sqrt(2.0)) / spec.gamma
    top = spec.R * (1.0 - 1e-12)
    if _df(spec, top) < 0:
        return spec.R
    return _bisect(lambda t: -_df(spec, t), 0.0, top)


def _h3_margin(spec: MajorantSpec, tb: float) -> float:
    if spec.kind == "lipschitz":
        return 2.0 * spec.b * spec.K - 1.0
    if spec.kind == "smale":
        return spec.b * spec.gamma - SMALE_ALPHA_MAX
    return _f(spec, _custom_top(spec, tb))


def _custom_top(spec: MajorantSpec, tb: float) -> float:
    # right end of the bisection bracket: just short of t_bar and of R
    eps = 1e-12 * spec.R
    return max(0.0, min(tb, spec.R - eps) - eps)


def _grid(spec: MajorantSpec) -> np.ndarray:
    return np.linspace(0.0, 0.999 * spec.R, CUSTOM_GRID_SIZE)


def _h1_margin(spec: MajorantSpec) -> float:
    f0, df0, _ = eval_majorant(spec, 0.0)
    return max(-f0, abs(df0 + 1.0) - 1e-9)


def _h2_margin(spec: MajorantSpec) -> float:
    if spec.kind == "lipschitz":
        return -spec.K
    if spec.kind == "smale":
        return -2.0 * spec.gamma
    d = np.array([_df(spec, t) for t in _grid(spec)])
    slope = np.diff(d)
    curv = np.diff(slope)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(d))))
    # strictly increasing needs slope > 0; convexity tolerates rounding noise
    return max(float(-np.min(slope)), float(-np.min(curv)) - tol)


def smallest_zero(spec: MajorantSpec) -> Certificate:
    """Locate ``t*`` and assemble the certificate.

    Closed forms are used for the built-in families and cross-checked by
    bisection on ``[0, t_bar]``; custom majorants use the bisection value.

    Raises
    ------
    CertificateInfeasible
        If h3 fails; ``margin`` carries the violation.
    """
    tb = t_bar(spec)
    margin = _h3_margin(spec, tb)
    if margin > 0:
        raise CertificateInfeasible(f"{spec.kind} majorant has no zero (margin {margin:.6g})", margin)

    b = spec.b
    alpha = None
    if spec.kind == "lipschitz":
        disc = max(0.0, 1.0 - 2.0 * b * spec.K)
        closed = 2.0 * b / (1.0 + math.sqrt(disc))
    elif spec.kind == "smale":
        alpha = b * spec.gamma
        disc = max(0.0, (alpha + 1.0) ** 2 - 8.0 * alpha)
        closed = 2.0 * b / (alpha + 1.0 + math.sqrt(disc))
    else:
        closed = None
    hi = tb if spec.kind != "custom" else _custom_top(spec, tb)
    bis = _bisect(lambda t: _f(spec, t), 0.0, hi)
    ts = closed if closed is not None else bis

    _, dfs, d2fs = eval_majorant(spec, ts)
    h4 = dfs < -H4_TIE_TOL
    rate = d2fs / (-2.0 * dfs) if h4 else None
    return Certificate(
        spec=spec, t_star=ts, t_bar=tb,
        h1=_h1_margin(spec) <= 0, h2=_h2_margin(spec) < 0, h3=True, h4=h4,
        rate_Q=rate, alpha=alpha, t_star_bisect=bis,
    )


def newton_step_nf(spec: MajorantSpec, t: float) -> float:
    """Scalar Newton map ``n_f(t) = t - f(t)/f'(t)``."""
    f, df, _ = eval_majorant(spec, t)
    if df >= 0:
        raise DomainError(f"f'({t!r}) = {df!r} >= 0; Newton map undefined")
    return t - f / df


def scalar_sequence(spec: MajorantSpec, tol: float = 1e-12, max_iter: int = 100,
                    cert: Optional[Certificate] = None) -> ScalarTrace:
    """Run ``t_{k+1} = n_f(t_k)`` from ``t_0 = 0`` until ``t* - t_k <= tol``.

    Stops early, flagged not converged, if rounding stalls the sequence (this
    only happens near a double root, i.e. when h4 fails).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if cert is None:
        cert = smallest_zero(spec)
    ts = cert.t_star
    t = 0.0
    values = [t]
    converged = False
    for _ in range(max_iter + 1):
        if ts - t <= tol:
            converged = True
            break
        if len(values) > max_iter:
            break
        nxt = newton_step_nf(spec, t)
        if nxt >= ts:
            values.append(ts)
            converged = True
            break
        if nxt <= t:
            break
        t = nxt
        values.append(t)
    return ScalarTrace(values, converged)


def next_t(spec: MajorantSpec, cert: Certificate, t: float) -> float:
    """``n_f(t)`` clamped to ``t*``; ``t*`` itself is a fixed point."""
    if t >= cert.t_star:
        return cert.t_star
    return min(newton_step_nf(spec, t), cert.t_star)


def error_ef(spec: MajorantSpec, t: float, u: float) -> float:
    """Linearization error ``f(u) - f(t) - f'(t)(u - t)``."""
    if u < t:
        raise DomainError(f"need t <= u, got t={t!r}, u={u!r}")
    ft, dft, _ = eval_majorant(spec, t)
    fu = eval_majorant(spec, u)[0]
    if spec.kind == "lipschitz":
        # exact remainder of a quadratic, free of cancellation
        return 0.5 * spec.K * (u - t) ** 2
    return fu - (ft + dft * (u - t))


def check_hypotheses(spec: MajorantSpec) -> HypothesisReport:
    """Report h1-h4 without raising."""
    m1 = _h1_margin(spec)
    m2 = _h2_margin(spec)
    margins = {"h1": m1, "h2": m2}
    try:
        cert = smallest_zero(spec)
    except CertificateInfeasible as exc:
        margins["h3"] = exc.margin
        margins["h4"] = float("nan")
        h3 = h4 = False
    else:
        margins["h3"] = _h3_margin(spec, cert.t_bar)
        margins["h4"] = _df(spec, cert.t_star) + H4_TIE_TOL
        h3, h4 = True, cert.h4
    grid = CUSTOM_GRID_SIZE if spec.kind == "custom" else 0
    return HypothesisReport(m1 <= 0, m2 < 0, h3, h4, margins, grid)
