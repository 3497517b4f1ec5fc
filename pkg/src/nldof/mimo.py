"""Two-phase nonlinear decoding for several transmit antennas.

The noiseless received rows span the ``L = n_t Q`` dimensional row space of
``R`` (the stack of ``A diag(x_m)``).  With canonical coordinates ``B`` of that
span and the identity transmitted on slots ``L .. L + n_t - 1``, each antenna's
first ``L`` symbols solve a square linear system (nonlinear phase); every later
symbol then follows from one column of ``B`` (linear phase).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from nldof.channel import TransmitBlock
from nldof.errors import DecodeFailure
from nldof.simo import (
    CONDITION_TOL,
    GUARD_RTOL,
    ConditionFailure,
    RecoveryReport,
    signal_basis,
)
from nldof.subspace import PIVOT_COND_MAX, CanonicalSubspace


@dataclass(frozen=True)
class MimoTrainingPlan:
    """Identity training on the ``n_t`` slots right after the first ``n_t Q``."""

    n_t: int
    Q: int
    T: int

    def __post_init__(self):
        if self.n_t < 1 or self.Q < 1:
            raise ValueError(f"need n_t, Q >= 1, got n_t={self.n_t}, Q={self.Q}")
        if self.T < self.n_t * (self.Q + 1):
            raise ValueError(
                f"training needs T >= n_t (Q + 1) = {self.n_t * (self.Q + 1)}, got T={self.T}"
            )

    @property
    def L(self) -> int:
        return self.n_t * self.Q

    @property
    def training_slots(self):
        return range(self.L, self.L + self.n_t)

    @property
    def payload_slots(self):
        return [t for t in range(self.T) if t not in self.training_slots]

    @property
    def payload_size(self) -> int:
        return self.n_t * (self.T - self.n_t)

    def training_entries(self):
        return tuple(
            (m, t, 1.0 if m == j else 0.0)
            for j, t in enumerate(self.training_slots)
            for m in range(self.n_t)
        )

    def block(self, payload):
        """Place an ``(n_t, T - n_t)`` payload around the training block."""
        payload = np.asarray(payload, dtype=complex).reshape(self.n_t, self.T - self.n_t)
        X = np.zeros((self.n_t, self.T), dtype=complex)
        X[:, self.payload_slots] = payload
        X[:, self.training_slots] = np.eye(self.n_t)
        return TransmitBlock(X, training=self.training_entries())


def build_R(profile, X):
    """Stack ``A diag(x_m)`` for ``m = 0..n_t-1`` into an ``(n_t Q, T)`` matrix."""
    if isinstance(X, TransmitBlock):
        X = X.X
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != profile.T:
        raise ValueError(f"X has {X.shape[1]} columns, profile has T={profile.T}")
    n_t = X.shape[0]
    return (profile.A[None, :, :] * X[:, None, :]).reshape(n_t * profile.Q, profile.T)


def nonlinear_system(B, profile, plan):
    """Square matrix shared by every antenna's nonlinear-phase equations."""
    L = plan.L
    A = profile.A
    return np.vstack([A[:, :L] * B[:, t][None, :] for t in plan.training_slots])


def nonlinear_phase(B, profile, plan, full_output=False):
    """Recover ``X[:, :n_t Q]`` from the canonical form and the training.

    For every training slot ``t`` and antenna ``m``,
    ``A[:, t] x_m[t] = A[:, :L] diag(B[:, t]) x_m[:L]``; the left side is known
    because ``X`` is the identity on the training slots.  Stacking the
    ``n_t`` slots gives one ``L x L`` system per antenna, all with the same
    matrix.

    Returns
    -------
    ndarray, shape (n_t, n_t Q)
    """
    if isinstance(B, CanonicalSubspace):
        B = B.B
    B = np.asarray(B, dtype=complex)
    L = plan.L
    if B.shape != (L, profile.T):
        raise ValueError(f"B has shape {B.shape}, expected ({L}, {profile.T})")
    M = nonlinear_system(B, profile, plan)
    cond = np.linalg.cond(M)
    if not cond <= PIVOT_COND_MAX:
        raise DecodeFailure("nonlinear_system", f"condition number {cond:.3g}", cond)
    A = profile.A
    # column m of rhs stacks A[:, t_j] * delta(m, j) over training slots j
    rhs = np.zeros((L, plan.n_t), dtype=complex)
    for j, t in enumerate(plan.training_slots):
        rhs[j * profile.Q:(j + 1) * profile.Q, j] = A[:, t]
    X_lead = np.linalg.solve(M, rhs).T
    if full_output:
        return X_lead, {"nonlinear_cond": float(cond)}
    return X_lead


def decode_mimo(Y, profile, plan, chain="first", full_output=False):
    """Recover the full ``(n_t, T)`` block from a received block.

    Parameters
    ----------
    Y : array_like, shape (n_r, T)
        Needs ``n_t Q <= min(T - n_t, n_r)``.
    profile : CorrelationProfile
    plan : MimoTrainingPlan
    chain : {"first", "lstsq"}
        Linear phase through row 0 of ``A`` only, or least squares over all
        ``Q`` rows.

    Raises
    ------
    DecodeFailure
        On a singular subspace, pivot block or nonlinear system, or when
        ``A[0, t]`` vanishes in the linear phase.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    n_r, T = Y.shape
    if T != profile.T or plan.T != T or plan.Q != profile.Q:
        raise ValueError("Y, profile and plan disagree on T or Q")
    L = plan.L
    if L > min(T - plan.n_t, n_r):
        raise ValueError(f"need n_t Q <= min(T - n_t, n_r); got n_t Q={L}, T={T}, n_r={n_r}")
    A = profile.A
    a_scale = np.max(np.abs(A))

    canon = signal_basis(Y, L)
    B = canon.B
    X_lead, info = nonlinear_phase(B, profile, plan, full_output=True)

    X = np.empty((plan.n_t, T), dtype=complex)
    X[:, :L] = X_lead
    X[:, plan.training_slots] = np.eye(plan.n_t)
    for t in range(L + plan.n_t, T):
        # row q of R[:, t] for antenna m: A[q, :L] @ (B[:, t] * x_m[:L])
        pred = (A[:, :L] * B[:, t][None, :]) @ X_lead.T
        if chain == "first":
            if not abs(A[0, t]) > GUARD_RTOL * a_scale:
                raise DecodeFailure("A_1t_small", f"A[0, {t}] is {abs(A[0, t]):.3e}",
                                    float(abs(A[0, t])))
            X[:, t] = pred[0] / A[0, t]
        elif chain == "lstsq":
            a = A[:, t]
            X[:, t] = (a.conj() @ pred) / np.vdot(a, a)
        else:
            raise ValueError(f"unknown chain {chain!r}")
    if full_output:
        info["pivot_cond"] = canon.pivot_cond
        return X, info
    return X


def check_recovery_conditions_mimo(profile, n_t):
    """Every ``Q`` columns among the first ``n_t (Q + 1)`` of ``A`` must be independent.

    Reports each dependent column subset (1-based) with its smallest
    singular value.
    """
    Q, T = profile.A.shape
    width = n_t * (Q + 1)
    if T < width:
        raise ValueError(f"need T >= n_t (Q + 1) = {width}, got T={T}")
    A = profile.A[:, :width]
    failures = []
    for cols in combinations(range(width), Q):
        sv = np.linalg.svd(A[:, cols], compute_uv=False)
        if not sv[-1] > CONDITION_TOL * sv[0]:
            failures.append(ConditionFailure(
                "any Q columns of A(1:n_t(Q+1)) independent",
                {"columns": [c + 1 for c in cols]},
                float(sv[-1]),
            ))
    notes = ("the transmitted row space must have a continuous distribution; "
             "not checkable from A",)
    return RecoveryReport(failures=tuple(failures), notes=notes)
