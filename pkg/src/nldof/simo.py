"""Nonlinear subspace decoding for one transmit antenna.

With ``n_t = 1`` the noiseless received rows all lie in the ``Q``-dimensional
span of ``A diag(x)``.  In canonical coordinates (identity on the first ``Q``
columns) that span satisfies ``B[q, t] = E[q, t] x[t] / x[q]`` for ``t >= Q``,
where ``E = A[:, :Q]^{-1} A`` is known to the receiver.  Pinning
``x[T-1] = 1`` then determines the whole block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nldof.errors import DecodeFailure, SingularPivotError
from nldof.subspace import PIVOT_COND_MAX, canonical_form, estimate_signal_subspace

#: relative magnitude below which a divisor is treated as zero
GUARD_RTOL = 1e-10
#: normalized determinant below which a recovery condition counts as violated
CONDITION_TOL = 1e-10


@dataclass(frozen=True)
class SideInformation:
    """``E_full = A[:, :Q]^{-1} A``; its columns ``t >= Q`` are the side info.

    ``E_full[:, :Q]`` is the identity, so ``E_full[:, t]`` is valid for every
    ``t`` and ``E`` (the ``Q x (T - Q)`` part) is a view of it.
    """

    E_full: np.ndarray
    leading_cond: float

    @property
    def Q(self) -> int:
        return self.E_full.shape[0]

    @property
    def E(self) -> np.ndarray:
        return self.E_full[:, self.Q:]


def compute_side_information(profile):
    """Solve ``A[:, :Q] E(t) = A[:, t]`` for every ``t``.

    Raises
    ------
    SingularPivotError
        If the leading ``Q x Q`` block of ``A`` is numerically singular.
    """
    A = profile.A
    Q = profile.Q
    lead = A[:, :Q]
    cond = np.linalg.cond(lead)
    if not cond <= PIVOT_COND_MAX:
        raise SingularPivotError(
            f"leading {Q}x{Q} block of A has condition number {cond:.3g}",
            pivot_cols=tuple(range(Q)),
            cond=cond,
        )
    E_full = np.linalg.solve(lead, A)
    E_full[:, :Q] = np.eye(Q)
    E_full.setflags(write=False)
    return SideInformation(E_full=E_full, leading_cond=float(cond))


@dataclass(frozen=True)
class ConditionCheck:
    """One ``E[q, t] != 0`` requirement evaluated two ways.

    ``q`` and ``t`` are 1-based to match how the conditions are usually
    written.  Both magnitudes are the same normalized quantity
    ``|det(A_lead with column q replaced by A[:, t])| / prod(column norms)``,
    once derived from the solved side information and once from the
    determinant directly.
    """

    condition: str
    q: int
    t: int
    via_side_info: float
    via_determinant: float
    tol: float = CONDITION_TOL

    @property
    def ok_side_info(self) -> bool:
        return self.via_side_info > self.tol

    @property
    def ok_determinant(self) -> bool:
        return self.via_determinant > self.tol

    @property
    def agree(self) -> bool:
        return self.ok_side_info == self.ok_determinant


@dataclass(frozen=True)
class ConditionFailure:
    """A violated recovery condition, with 1-based indices."""

    condition: str
    indices: dict
    magnitude: float

    def to_dict(self):
        return {"condition": self.condition, "indices": dict(self.indices),
                "magnitude": self.magnitude}


@dataclass(frozen=True)
class RecoveryReport:
    failures: tuple = ()
    checks: tuple = ()
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self):
        return {
            "passed": self.passed,
            "failures": [f.to_dict() for f in self.failures],
            "notes": list(self.notes),
        }

    def describe(self):
        lines = ["PASS" if self.passed else "FAIL"]
        for f in self.failures:
            idx = ", ".join(f"{k}={v}" for k, v in f.indices.items())
            lines.append(f"  violated {f.condition} at ({idx}): |det| = {f.magnitude:.3e}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def _normalized(det_abs, M):
    scale = np.prod(np.linalg.norm(M, axis=0))
    return 0.0 if scale == 0 else float(det_abs / scale)


def simo_condition_pairs(Q, T):
    """0-based ``(name, q, t)`` triples the SIMO decoder divides by."""
    pairs = [("E^q(T) != 0", q, T - 1) for q in range(Q)]
    pairs += [("E^1(t) != 0", 0, t) for t in range(Q, T - 1)]
    return pairs


def check_recovery_conditions_simo(profile):
    """Check the profile-side conditions for SIMO recovery.

    Every requirement ``E[q, t] != 0`` is evaluated through the solved side
    information and, independently, through the determinant of ``A[:, :Q]``
    with column ``q`` replaced by ``A[:, t]``.  A disagreement between the
    two is itself reported as a failure.
    """
    A = profile.A
    Q, T = A.shape
    lead = A[:, :Q]
    notes = ("x(q) != 0 for q <= Q is an encoder-side requirement",)
    try:
        side = compute_side_information(profile)
    except SingularPivotError as exc:
        fail = ConditionFailure("A(1:Q) invertible", {"q": 0, "t": 0},
                                float(abs(np.linalg.det(lead))))
        return RecoveryReport(failures=(fail,), notes=notes + (str(exc),))
    det_lead = abs(np.prod(np.linalg.svd(lead, compute_uv=False)))

    checks, failures = [], []
    for name, q, t in simo_condition_pairs(Q, T):
        replaced = lead.copy()
        replaced[:, q] = A[:, t]
        via_e = _normalized(abs(side.E_full[q, t]) * det_lead, replaced)
        via_det = _normalized(abs(np.linalg.det(replaced)), replaced)
        check = ConditionCheck(name, q + 1, t + 1, via_e, via_det)
        checks.append(check)
        if not check.agree:
            failures.append(ConditionFailure("method agreement", {"q": q + 1, "t": t + 1},
                                             via_det))
        elif not check.ok_determinant:
            failures.append(ConditionFailure(name, {"q": q + 1, "t": t + 1}, via_det))
    return RecoveryReport(failures=tuple(failures), checks=tuple(checks), notes=notes)


def _guard(value, scale, name, what):
    if not abs(value) > GUARD_RTOL * scale:
        raise DecodeFailure(name, f"{what} is {abs(value):.3e} (scale {scale:.3e})",
                            float(abs(value)))


def signal_basis(Y, L):
    """Canonical form of the estimated ``L``-dimensional signal subspace of ``Y``."""
    V, sv = estimate_signal_subspace(Y, L, full_output=True)
    if not sv[L - 1] > GUARD_RTOL * sv[0]:
        raise DecodeFailure("subspace_rank", f"singular value {L} of Y is {sv[L - 1]:.3e}",
                            float(sv[L - 1]))
    try:
        return canonical_form(V)
    except SingularPivotError as exc:
        raise DecodeFailure("pivot_block", str(exc), exc.cond) from exc


def decode_simo(Y, profile, side_info=None, chain="first", full_output=False):
    """Recover ``x`` (with ``x[T-1] = 1``) from a received block.

    Parameters
    ----------
    Y : array_like, shape (n_r, T)
        Received block, noisy or not.  Needs ``Q <= min(T - 1, n_r)``.
    profile : CorrelationProfile
    side_info : SideInformation, optional
        Precomputed ``compute_side_information(profile)``.
    chain : {"first", "lstsq"}
        How ``x[t]`` for ``Q <= t < T-1`` is obtained from ``x[:Q]``:
        through row 0 of ``B`` only, or by least squares over every row with
        nonzero side information.
    full_output : bool
        Also return a dict of diagnostics.

    Raises
    ------
    DecodeFailure
        When the signal subspace, the pivot block or a divisor is too close
        to singular.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    n_r, T = Y.shape
    Q = profile.Q
    if T != profile.T:
        raise ValueError(f"Y has {T} columns, profile has T={profile.T}")
    if Q > min(T - 1, n_r):
        raise ValueError(f"need Q <= min(T-1, n_r); got Q={Q}, T={T}, n_r={n_r}")
    side = side_info if side_info is not None else compute_side_information(profile)
    E = side.E_full

    canon = signal_basis(Y, Q)
    B = canon.B
    b_scale = np.max(np.abs(B))
    e_scale = np.max(np.abs(E))

    x = np.empty(T, dtype=complex)
    x[T - 1] = 1.0
    for q in range(Q):
        _guard(B[q, T - 1], b_scale, "B_qT_small", f"B[{q}, T-1]")
        x[q] = E[q, T - 1] / B[q, T - 1]
    for t in range(Q, T - 1):
        if chain == "first":
            _guard(E[0, t], e_scale, "E_1t_small", f"E[0, {t}]")
            x[t] = x[0] * B[0, t] / E[0, t]
        elif chain == "lstsq":
            keep = np.abs(E[:, t]) > GUARD_RTOL * e_scale
            if not keep.any():
                raise DecodeFailure("E_t_zero", f"E[:, {t}] vanishes")
            v = E[keep, t] / x[:Q][keep]
            x[t] = np.vdot(v, B[keep, t]) / np.vdot(v, v)
        else:
            raise ValueError(f"unknown chain {chain!r}")
    if full_output:
        return x, {"pivot_cond": canon.pivot_cond}
    return x


def decode_simo_reduced(Y, profile, n_pilots=None, side_info=None, residual_tol=None,
                        full_output=False):
    """Decoder for fewer receive antennas than the channel rank.

    The received rows only span an ``L = min(n_r, Q)`` dimensional part of
    the signal subspace.  With its canonical form ``G`` and pilots
    ``x[t] = 1`` on the last ``n_pilots`` slots, every pilot column gives
    ``G[:, t] = G[:, :Q] diag(E[:, t]) u`` with ``u = 1 / x[:Q]``; the stacked
    system is solved for ``u`` by least squares and the remaining symbols
    follow one at a time.

    Parameters
    ----------
    n_pilots : int, optional
        Number of trailing pilot slots, ``ceil(Q / L)`` by default.
    residual_tol : float, optional
        Flag the block when the relative residual of the stacked system
        exceeds this value.  Unchecked by default since the residual is
        noise-dominated.

    Raises
    ------
    ValueError
        If the pilots give fewer equations than unknowns or do not fit
        after the first ``Q`` slots.
    DecodeFailure
        On a rank-deficient or inconsistent stacked system.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    n_r, T = Y.shape
    Q = profile.Q
    if T != profile.T:
        raise ValueError(f"Y has {T} columns, profile has T={profile.T}")
    L = min(n_r, Q)
    k = math.ceil(Q / L) if n_pilots is None else int(n_pilots)
    if k * L < Q:
        raise ValueError(f"underdetermined: {k} pilot(s) x {L} rows < {Q} unknowns")
    if T - k < Q:
        raise ValueError(f"need T >= Q + n_pilots, got T={T}, Q={Q}, n_pilots={k}")
    side = side_info if side_info is not None else compute_side_information(profile)
    E = side.E_full

    canon = signal_basis(Y, L)
    G = canon.B
    G_lead = G[:, :Q]
    pilots = range(T - k, T)
    M = np.vstack([G_lead * E[:, t][None, :] for t in pilots])
    rhs = np.concatenate([G[:, t] for t in pilots])
    cond = np.linalg.cond(M)
    if not cond <= PIVOT_COND_MAX:
        raise DecodeFailure("stacked_system_rank", f"condition number {cond:.3g}", cond)
    u = np.linalg.lstsq(M, rhs, rcond=None)[0]
    residual = float(np.linalg.norm(M @ u - rhs) / max(np.linalg.norm(rhs), 1e-300))
    if residual_tol is not None and residual > residual_tol:
        raise DecodeFailure("inconsistent_system", f"relative residual {residual:.3e}",
                            residual)

    x = np.empty(T, dtype=complex)
    x[T - k:] = 1.0
    u_scale = np.max(np.abs(u))
    for q in range(Q):
        _guard(u[q], u_scale, "inverse_symbol_small", f"1/x[{q}]")
        x[q] = 1.0 / u[q]
    for t in range(Q, T - k):
        v = G_lead @ (E[:, t] * u)
        nv = np.vdot(v, v).real
        _guard(math.sqrt(nv), np.max(np.abs(G)), "chain_vector_small", f"|v| at t={t}")
        x[t] = np.vdot(v, G[:, t]) / nv
    if full_output:
        return x, {"pivot_cond": canon.pivot_cond, "stacked_cond": float(cond),
                   "residual": residual}
    return x
