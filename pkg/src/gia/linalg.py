"""Dense complex linear-algebra kernel shared by the whole package.

Numerical rank and the Moore-Penrose pseudo-inverse use one scale-invariant
singular-value cutoff so that feasibility verdicts are reproducible across
the package: a singular value counts toward the rank iff it exceeds
``rel_tol * sigma_max * max(rows, cols)``.  ``DEFAULT_REL_TOL`` is the single
shared constant; every caller that needs a rank decision goes through here.

Zero-dimensional matrices (0 rows or 0 columns) are first class: they occur
whenever a node has no free transceiver entries (``d_k == N_k`` or
``d_j == M_j``) and behave as the identities of block composition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_REL_TOL",
    "RankResult",
    "as_complex_matrix",
    "numerical_rank",
    "pseudo_inverse",
    "frobenius_norm_sq",
]

#: Relative tolerance of the shared singular-value cutoff.
DEFAULT_REL_TOL = 1e-10


def as_complex_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a finite 2-D complex128 array (zero-sized axes allowed).

    Raises
    ------
    ValueError
        If ``m`` is not 2-D or contains non-finite entries.
    """
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.size and not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    return a


@dataclass(frozen=True)
class RankResult:
    """Numerical rank of a matrix together with the evidence behind it.

    Attributes
    ----------
    rank : int
        Number of singular values strictly above ``tolerance_used``.
    singular_values : np.ndarray
        All singular values, nonincreasing.
    tolerance_used : float
        The absolute cutoff that was applied.
    """

    rank: int
    singular_values: np.ndarray
    tolerance_used: float


def _cutoff(s: np.ndarray, shape: tuple[int, int], rel_tol: float | None) -> float:
    rel = DEFAULT_REL_TOL if rel_tol is None else float(rel_tol)
    if rel < 0.0:
        raise ValueError("rel_tol must be nonnegative")
    if s.size == 0:
        return 0.0
    return rel * float(s[0]) * max(shape)


def numerical_rank(m, rel_tol: float | None = None) -> RankResult:
    """Numerical rank of ``m`` via SVD with the shared scale-invariant cutoff.

    Parameters
    ----------
    m : array_like
        Matrix with finite entries.
    rel_tol : float, optional
        Overrides ``DEFAULT_REL_TOL``.  The absolute cutoff is
        ``rel_tol * sigma_max * max(rows, cols)``.

    Returns
    -------
    RankResult
    """
    a = as_complex_matrix(m)
    if a.size == 0:
        return RankResult(0, np.zeros(0), 0.0)
    s = np.linalg.svd(a, compute_uv=False)
    tol = _cutoff(s, a.shape, rel_tol)
    return RankResult(int(np.count_nonzero(s > tol)), s, tol)


def pseudo_inverse(m, rel_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of ``m``.

    Singular values at or below the shared rank cutoff are inverted as zero,
    so the result is consistent with :func:`numerical_rank` on the same
    matrix.

    Returns
    -------
    np.ndarray
        ``cols x rows`` complex matrix satisfying the four Moore-Penrose
        identities to within roundoff.
    """
    a = as_complex_matrix(m)
    rows, cols = a.shape
    if a.size == 0:
        return np.zeros((cols, rows), dtype=np.complex128)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    tol = _cutoff(s, a.shape, rel_tol)
    inv = np.zeros_like(s)
    keep = s > tol
    inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv) @ u.conj().T


def frobenius_norm_sq(m) -> float:
    """Squared Frobenius norm: sum of squared entry magnitudes."""
    a = as_complex_matrix(m)
    return float(np.sum(a.real * a.real + a.imag * a.imag))
