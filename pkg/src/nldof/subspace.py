"""Canonical coordinates for subspaces of C^T and signal-subspace estimation.

A subspace of dimension ``L`` spanned by the rows of ``R`` (``L x T``) is
represented by ``B = C^{-1} R`` where ``C`` is the ``L x L`` block of ``R`` at a
set of pivot columns, so that ``B`` has the identity at those columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from nldof.errors import RankDeficientError, SingularPivotError

#: pivot blocks with a larger 2-norm condition number are treated as singular
PIVOT_COND_MAX = 1e10

FIXED_LEADING = "fixed-leading"
GREEDY_CONDITIONED = "greedy-conditioned"


@dataclass(frozen=True)
class CanonicalSubspace:
    """Row basis ``B`` (``L x T``) with ``B[:, pivot_cols] == I_L``."""

    B: np.ndarray
    pivot_cols: tuple
    pivot_cond: float = 1.0

    @property
    def L(self) -> int:
        return self.B.shape[0]

    @property
    def T(self) -> int:
        return self.B.shape[1]

    @property
    def free_cols(self):
        piv = set(self.pivot_cols)
        return tuple(t for t in range(self.T) if t not in piv)

    def coordinates(self):
        """The ``L (T - L)`` non-trivial entries, column-major over free columns."""
        return self.B[:, list(self.free_cols)].T.ravel()


def _greedy_pivots(R, L):
    # column-pivoted QR picks columns greedily by remaining norm
    _, _, perm = scipy.linalg.qr(R, mode="economic", pivoting=True)
    return tuple(sorted(int(p) for p in perm[:L]))


def canonical_form(R, pivot_policy=FIXED_LEADING):
    """Canonical representation of the row span of ``R``.

    Parameters
    ----------
    R : array_like, shape (L, T)
        Full-row-rank spanning set.
    pivot_policy : {"fixed-leading", "greedy-conditioned"}
        ``fixed-leading`` uses columns ``0..L-1``.  ``greedy-conditioned``
        picks well-conditioned pivot columns by column-pivoted QR.

    Returns
    -------
    CanonicalSubspace

    Raises
    ------
    RankDeficientError
        If ``R`` does not have full row rank.
    SingularPivotError
        If the pivot block has condition number above ``PIVOT_COND_MAX``.
    """
    R = np.atleast_2d(np.asarray(R, dtype=complex))
    L, T = R.shape
    if L > T:
        raise RankDeficientError(f"{L} rows cannot be independent in C^{T}")
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[0] == 0 or sv[0] / sv[-1] > PIVOT_COND_MAX:
        raise RankDeficientError(f"R is rank deficient (singular values {sv.tolist()})")

    if pivot_policy == FIXED_LEADING:
        pivots = tuple(range(L))
    elif pivot_policy == GREEDY_CONDITIONED:
        pivots = _greedy_pivots(R, L)
    else:
        raise ValueError(f"unknown pivot policy {pivot_policy!r}")

    C = R[:, pivots]
    cond = np.linalg.cond(C)
    if not cond <= PIVOT_COND_MAX:
        raise SingularPivotError(
            f"pivot block at columns {pivots} has condition number {cond:.3g}",
            pivot_cols=pivots,
            cond=cond,
        )
    B = np.linalg.solve(C, R)
    B[:, pivots] = np.eye(L)
    return CanonicalSubspace(B=B, pivot_cols=pivots, pivot_cond=float(cond))


def estimate_signal_subspace(Y, L, full_output=False):
    """Orthonormal rows spanning the best rank-``L`` approximation of ``Y``.

    These are the right singular vectors of ``Y`` belonging to its ``L``
    largest singular values.  With ``full_output`` the singular values of
    ``Y`` are returned as well.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    n_r, T = Y.shape
    if not 1 <= L <= min(n_r, T):
        raise ValueError(f"L={L} must lie in [1, min(n_r, T)] = [1, {min(n_r, T)}]")
    _, sv, Vh = np.linalg.svd(Y, full_matrices=False)
    if full_output:
        return Vh[:L], sv
    return Vh[:L]


def subspace_distance(U, V):
    """Sine of the largest principal angle between the row spans of U and V."""
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    if U.shape[1] != V.shape[1]:
        raise ValueError(f"ambient dimensions differ: {U.shape[1]} vs {V.shape[1]}")
    theta = scipy.linalg.subspace_angles(U.T, V.T)
    return float(np.clip(np.sin(np.max(theta)), 0.0, 1.0))
