"""Dense linear-operator primitives on R^n with the Euclidean inner product."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EigenError, HypothesisViolation


def as_matrix(G) -> np.ndarray:
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise ValueError("matrix has non-finite entries")
    return G


def symmetric_part(G) -> np.ndarray:
    """Return ``(G + G^T) / 2``, symmetric to the last bit."""
    G = as_matrix(G)
    S = 0.5 * (G + G.T)
    upper = np.triu_indices_from(S, k=1)
    S.T[upper] = S[upper]
    return S


def op_norm(G) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(as_matrix(G), 2))


@dataclass(frozen=True)
class PositivityReport:
    is_positive: bool
    lambda_min: float
    inv_norm: Optional[float]


def positivity_report(G, tol: Optional[float] = None) -> PositivityReport:
    """Test whether the symmetric part of ``G`` is positive definite.

    ``lambda_min`` is the smallest eigenvalue of ``(G + G^T)/2``; the matrix is
    declared positive when ``lambda_min > tol`` (default ``1e-12 * ||G||``).
    ``inv_norm`` is then the spectral norm of the inverse symmetric part,
    which is the constant ``beta`` used throughout the certificate.
    """
    G = as_matrix(G)
    if tol is None:
        tol = 1e-12 * max(op_norm(G), np.finfo(float).tiny)
    if tol <= 0:
        raise ValueError("tol must be positive")
    try:
        lam = float(np.linalg.eigvalsh(symmetric_part(G))[0])
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigenvalues of the symmetric part of {G.shape[0]}x{G.shape[1]} "
                         f"matrix {G.tolist()!r} did not converge") from exc
    if lam > tol:
        return PositivityReport(True, lam, 1.0 / lam)
    return PositivityReport(False, lam, None)


def banach_invert(B):
    """Invert ``B`` under ``||B - I|| < 1`` and return ``(B^{-1}, bound)``.

    ``bound = 1 / (1 - ||B - I||)`` is a certified upper bound on
    ``||B^{-1}||``.
    """
    B = as_matrix(B)
    I = np.eye(B.shape[0])
    d = op_norm(B - I)
    if d >= 1.0:
        raise HypothesisViolation(f"||B - I|| = {d:.6g} >= 1; Banach's lemma does not apply")
    return np.linalg.solve(B, I), 1.0 / (1.0 - d)
