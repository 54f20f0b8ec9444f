"""Finite-difference and sampling checks on user-supplied derivative data.

None of these checks prove anything: they look for counterexamples to a
claimed Jacobian, Lipschitz constant or Smale ``gamma``.  A reported
violation is a genuine witness; a clean report only means none was found.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .linop import positivity_report


def sample_ball(rng: np.random.Generator, center, radius: float) -> np.ndarray:
    """Uniform sample from the closed ball ``B[center, radius]``."""
    center = np.asarray(center, dtype=float)
    n = center.shape[0]
    d = rng.standard_normal(n)
    d /= np.linalg.norm(d)
    return center + radius * rng.random() ** (1.0 / n) * d


@dataclass(frozen=True)
class JacobianCheckReport:
    max_abs_deviation: float
    worst_entry: Tuple[int, int]
    fd_step: float


def check_jacobian(p, x, rel_step: float = float(np.sqrt(np.finfo(float).eps))) -> JacobianCheckReport:
    """Compare ``p.J(x)`` against central differences of ``p.F``."""
    if not rel_step > 0:
        raise ValueError("rel_step must be positive")
    x = np.asarray(x, dtype=float)
    h = rel_step * max(1.0, float(np.max(np.abs(x))))
    J = np.atleast_2d(p.J(x))
    fd = np.empty_like(J)
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        fd[:, j] = (np.asarray(p.F(x + e)) - np.asarray(p.F(x - e))) / (2.0 * h)
    dev = np.abs(fd - J)
    i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
    return JacobianCheckReport(float(dev[i, j]), (int(i), int(j)), h)


def estimate_lipschitz(p, samples: int = 1000, seed: int = 0) -> float:
    """Sampled lower bound on the Lipschitz constant of ``J`` over ``B(x0, R)``.

    Pairs are drawn sequentially from one stream, so a larger ``samples``
    with the same seed extends the smaller run and never lowers the result.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        x = sample_ball(rng, p.x0, p.R)
        y = sample_ball(rng, p.x0, p.R)
        d = np.linalg.norm(x - y)
        if d > 0:
            best = max(best, np.linalg.norm(np.atleast_2d(p.J(x)) - np.atleast_2d(p.J(y)), 2) / d)
    return float(best)


def bilinear_norm_lower(H, rng: Optional[np.random.Generator] = None, directions: int = 64) -> float:
    """Lower bound on the norm of the bilinear map ``(u, v) -> [u^T H_i v]_i``.

    The norm equals ``max_{|w|=1} ||sum_i w_i H_i||_2``; it is evaluated on
    coordinate and random directions ``w``.  Exact for ``n = 1``.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    if n == 1:
        return float(np.abs(H).max())
    W = [np.eye(n)[i] for i in range(n)]
    if rng is not None:
        R = rng.standard_normal((directions, n))
        W += list(R / np.linalg.norm(R, axis=1, keepdims=True))
    return float(max(np.linalg.norm(np.tensordot(w, H, axes=1), 2) for w in W))


@dataclass(frozen=True)
class SmaleCheckReport:
    holds: bool
    max_excess: float
    witness: Optional[np.ndarray]
    samples: int

    def __bool__(self):
        return self.holds


def check_smale_bound(p, gamma: float, samples: int = 1000, seed: int = 0,
                      slack: float = 1e-8) -> SmaleCheckReport:
    """Test ``beta*||F''(x)|| <= 2 gamma / (1 - gamma ||x - x0||)^3`` on ``B(x0, 0.99/gamma)``.

    ``p.hess(x)`` must return the stacked Hessians of the components of F.
    The center ``x0`` is always among the samples.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if getattr(p, "hess", None) is None:
        raise ValueError("problem does not expose second derivatives")
    rng = np.random.default_rng(seed)
    beta = positivity_report(p.J(p.x0)).inv_norm
    if beta is None:
        raise ValueError("J(x0) has no positive-definite symmetric part")
    worst, witness = -np.inf, None
    for k in range(samples):
        x = p.x0.copy() if k == 0 else sample_ball(rng, p.x0, 0.99 / gamma)
        r = np.linalg.norm(x - p.x0)
        bound = 2.0 * gamma / (1.0 - gamma * r) ** 3
        excess = beta * bilinear_norm_lower(p.hess(x), rng) - bound
        if excess > worst:
            worst = excess
            witness = x
    holds = bool(worst <= slack)
    return SmaleCheckReport(holds, float(worst), None if holds else witness, samples)
