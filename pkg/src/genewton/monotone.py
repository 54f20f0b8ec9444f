"""Maximal monotone operators represented through their resolvents.

Three operators are supported:

* :class:`ZeroOperator` -- ``T = 0``, the generalized equation is ``F(x) = 0``;
* :class:`BoxOperator` -- the normal cone of ``[l, u]`` (``l = 0``,
  ``u = +inf`` gives the nonlinear complementarity problem);
* :class:`L1Subdifferential` -- ``T = d(mu * ||.||_1)``.

Only resolvents ``(I + lam*T)^{-1}`` are ever needed: they drive the inner
solvers and the natural residual ``||x - J(x - lam*F(x))||``, which vanishes
exactly on solutions of ``0 in F(x) + T(x)``.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class ZeroOperator:
    kind = "zero"

    def resolvent(self, x, lam=1.0):
        return np.array(x, dtype=float)


@dataclass(frozen=True)
class BoxOperator:
    """Normal cone of the box ``[lower, upper]``.

    Bounds are scalars or arrays; ``-inf``/``+inf`` mark missing bounds.
    """

    lower: Union[float, np.ndarray] = 0.0
    upper: Union[float, np.ndarray] = np.inf
    kind = "box"

    def __post_init__(self):
        lo, up = np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lo > up):
            raise ValueError("box needs lower <= upper componentwise")

    def bounds(self, n):
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        up = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        return lo, up

    def project(self, x):
        x = np.asarray(x, dtype=float)
        lo, up = self.bounds(x.shape[0])
        return np.minimum(np.maximum(x, lo), up)

    def resolvent(self, x, lam=1.0):
        # the normal cone is a cone, so its resolvent ignores lam
        return self.project(x)


@dataclass(frozen=True)
class L1Subdifferential:
    mu: float = 1.0
    kind = "l1"

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    def resolvent(self, x, lam=1.0):
        x = np.asarray(x, dtype=float)
        thr = lam * self.mu
        return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


SetValuedOperator = Union[ZeroOperator, BoxOperator, L1Subdifferential]


def project(T: SetValuedOperator, x):
    """Euclidean projection onto the box behind a normal-cone operator."""
    if not isinstance(T, BoxOperator):
        raise TypeError(f"project() needs a box operator, got {type(T).__name__}")
    return T.project(x)


def resolvent(T: SetValuedOperator, lam: float, x):
    if not lam > 0:
        raise ValueError("lam must be positive")
    return T.resolvent(x, lam)


@dataclass(frozen=True)
class ResidualReport:
    natural_residual: float
    fixed_point: np.ndarray


def natural_residual(T: SetValuedOperator, x, Fx, lam: float = 1.0) -> ResidualReport:
    x = np.asarray(x, dtype=float)
    fp = resolvent(T, lam, x - lam * np.asarray(Fx, dtype=float))
    return ResidualReport(float(np.linalg.norm(x - fp)), fp)


def monotonicity_probe(T: SetValuedOperator, samples: int = 1000, seed: int = 0,
                       n: int = 3, lam: float = 1.0) -> bool:
    """Sample graph points of ``T`` and test ``<u - v, y - x> >= -1e-10``.

    Graph points come from the resolvent identity: for any ``w``,
    ``p = J(w)`` satisfies ``(w - p)/lam in T(p)``.  A test utility, not a
    proof.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if isinstance(T, BoxOperator):
        n = max(n, np.size(T.lower), np.size(T.upper))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        w1, w2 = 3.0 * rng.standard_normal((2, n))
        x, y = resolvent(T, lam, w1), resolvent(T, lam, w2)
        v, u = (w1 - x) / lam, (w2 - y) / lam
        if np.dot(u - v, y - x) < -1e-10:
            return False
    return True
