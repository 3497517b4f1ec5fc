"""Uniform wrappers around the decoders: payload layout, encode, decode.

A scheme knows which slots of the ``(n_t, T)`` block carry payload, how to
build a transmit block from payload symbols, how to decode a received block
back to payload symbols, and the noiseless map from payload to the
coordinates the decoder actually reads (used for Jacobian probes).
"""

from __future__ import annotations

import math

import numpy as np

from nldof.channel import TransmitBlock, apply_channel
from nldof.errors import DecodeFailure
from nldof.mimo import (
    MimoTrainingPlan,
    build_R,
    check_recovery_conditions_mimo,
    decode_mimo,
)
from nldof.simo import (
    CONDITION_TOL,
    ConditionFailure,
    RecoveryReport,
    check_recovery_conditions_simo,
    compute_side_information,
    decode_simo,
    decode_simo_reduced,
)
from nldof.subspace import PIVOT_COND_MAX, canonical_form

DECODERS = ("simo", "simo-reduced", "mimo", "baseline")


def baseline_pilot_slots(n_t, Q, n_pilots=None):
    """Pilot slots of antenna ``m``: ``m P .. (m + 1) P - 1`` with ``P = n_pilots or Q``."""
    P = Q if n_pilots is None else int(n_pilots)
    return [list(range(m * P, (m + 1) * P)) for m in range(n_t)]


def baseline_training_decoder(Y, profile, n_pilots=None, n_t=1, full_output=False):
    """Classical decoder: estimate the fading from pilots, then detect coherently.

    Antenna ``m`` alone sends ``1`` on its ``P`` pilot slots (``P = Q`` by
    default), every other antenna is silent there.  The innovations of each
    pair are the least-squares solution of ``A[:, slots_m]^T s = y_n[slots_m]``;
    the rebuilt ``H(t)`` then gives ``x[:, t]`` by least squares for every
    remaining slot.

    Returns
    -------
    ndarray, shape (n_t, T)
        Estimated block, pilot slots included as transmitted.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    n_r, T = Y.shape
    A = profile.A
    Q = profile.Q
    slots = baseline_pilot_slots(n_t, Q, n_pilots)
    P = len(slots[0])
    if P < Q:
        raise ValueError(f"need at least Q={Q} pilots per antenna, got {P}")
    if n_t * P >= T:
        raise ValueError(f"{n_t * P} pilot slots leave no payload in T={T}")
    if n_r < n_t:
        raise ValueError(f"coherent detection needs n_r >= n_t, got n_r={n_r}, n_t={n_t}")

    s = np.empty((n_t, n_r, Q), dtype=complex)
    worst = 1.0
    for m, sl in enumerate(slots):
        P_m = A[:, sl].T
        cond = np.linalg.cond(P_m)
        worst = max(worst, cond)
        if not cond <= PIVOT_COND_MAX:
            raise DecodeFailure("pilot_system", f"condition number {cond:.3g}", cond)
        s[m] = np.linalg.lstsq(P_m, Y[:, sl].T, rcond=None)[0].T
    H = np.einsum("qt,mnq->tnm", A, s)

    X = np.zeros((n_t, T), dtype=complex)
    for m, sl in enumerate(slots):
        X[m, sl] = 1.0
    for t in range(n_t * P, T):
        cond = np.linalg.cond(H[t])
        if not cond <= PIVOT_COND_MAX:
            raise DecodeFailure("channel_estimate", f"H({t}) condition {cond:.3g}", cond)
        X[:, t] = np.linalg.lstsq(H[t], Y[:, t], rcond=None)[0]
    if full_output:
        return X, {"pilot_cond": float(worst)}
    return X


class Scheme:
    """Encoder/decoder pair for one decoder id and system shape."""

    def __init__(self, decoder, profile, n_t=1, n_r=None):
        if decoder not in DECODERS:
            raise ValueError(f"unknown decoder {decoder!r}; choose from {DECODERS}")
        self.decoder = decoder
        self.profile = profile
        self.n_t = n_t
        self.n_r = n_r
        Q, T = profile.Q, profile.T
        self.Q, self.T = Q, T
        if decoder in ("simo", "simo-reduced") and n_t != 1:
            raise ValueError(f"{decoder} needs n_t = 1")

        if decoder == "simo":
            self.pilot_slots = [T - 1]
        elif decoder == "simo-reduced":
            L = min(n_r or Q, Q)
            self.n_pilots = math.ceil(Q / L)
            self.pilot_slots = list(range(T - self.n_pilots, T))
        elif decoder == "mimo":
            self.plan = MimoTrainingPlan(n_t, Q, T)
            self.pilot_slots = list(self.plan.training_slots)
        else:
            self.pilot_slots = [t for sl in baseline_pilot_slots(n_t, Q) for t in sl]
        self.payload_slots = [t for t in range(T) if t not in self.pilot_slots]
        self.side = compute_side_information(profile) if decoder.startswith("simo") else None

    @property
    def D(self) -> int:
        """Complex payload symbols per block."""
        return self.n_t * len(self.payload_slots)

    def predicted_dof(self, delta=0.0):
        """Slope of rate (nats per block) against ln SNR for the scaled QAM construction."""
        return (1 - 2 * delta) * self.D

    def block(self, payload):
        """Transmit block carrying ``payload`` (length ``D``) around the pilots."""
        payload = np.asarray(payload, dtype=complex).reshape(self.n_t, len(self.payload_slots))
        if self.decoder == "mimo":
            return self.plan.block(payload)
        X = np.zeros((self.n_t, self.T), dtype=complex)
        X[:, self.payload_slots] = payload
        if self.decoder == "baseline":
            training = []
            for m, sl in enumerate(baseline_pilot_slots(self.n_t, self.Q)):
                for t in sl:
                    for mm in range(self.n_t):
                        X[mm, t] = 1.0 if mm == m else 0.0
                        training.append((mm, t, X[mm, t]))
        else:
            X[0, self.pilot_slots] = 1.0
            training = [(0, t, 1.0) for t in self.pilot_slots]
        return TransmitBlock(X, training=tuple(training))

    def decode(self, Y):
        """Payload estimate and diagnostics; raises :class:`DecodeFailure`."""
        if self.decoder == "simo":
            x, info = decode_simo(Y, self.profile, side_info=self.side, full_output=True)
            X = x[None, :]
        elif self.decoder == "simo-reduced":
            x, info = decode_simo_reduced(Y, self.profile, n_pilots=self.n_pilots,
                                          side_info=self.side, full_output=True)
            X = x[None, :]
        elif self.decoder == "mimo":
            X, info = decode_mimo(Y, self.profile, self.plan, full_output=True)
        else:
            X, info = baseline_training_decoder(Y, self.profile, n_t=self.n_t,
                                                full_output=True)
        return X[:, self.payload_slots].ravel(), info

    def canonical_map(self, payload, fading=None):
        """Noiseless decoder coordinates as a function of the payload.

        For the subspace decoders these are the free entries of the canonical
        form of the received span, which do not depend on the fading except
        in the reduced-antenna case.  The coherent baseline reads the
        symbols themselves once the channel is known, so its map is the
        identity.
        """
        payload = np.asarray(payload, dtype=complex)
        if self.decoder == "baseline":
            return payload.copy()
        X = self.block(payload).X
        R = build_R(self.profile, X)
        if self.decoder == "simo-reduced":
            if fading is None:
                raise ValueError("the reduced-antenna map depends on the fading draw")
            Y = apply_channel(X, fading)
            return canonical_form(Y[: min(self.n_r, self.Q)]).coordinates()
        return canonical_form(R).coordinates()


def regime_error(decoder, n_t, n_r, Q, T):
    """Why ``(n_t, n_r, Q, T)`` is outside the decoder's operating regime, or None."""
    if Q >= T:
        return f"need Q < T, got Q={Q}, T={T}"
    if decoder in ("simo", "simo-reduced") and n_t != 1:
        return f"{decoder} needs n_t = 1, got {n_t}"
    if decoder == "simo" and Q > min(T - 1, n_r):
        return f"simo needs Q <= min(T - 1, n_r), got Q={Q}, T={T}, n_r={n_r}"
    if decoder == "simo-reduced" and T < Q + math.ceil(Q / min(n_r, Q)):
        return f"simo-reduced needs T >= Q + ceil(Q / n_r), got T={T}"
    if decoder == "mimo" and n_t * Q > min(T - n_t, n_r):
        return f"mimo needs n_t Q <= min(T - n_t, n_r), got n_t Q={n_t * Q}, T={T}, n_r={n_r}"
    if decoder == "baseline" and (n_t * Q >= T or n_r < n_t):
        return f"baseline needs n_t Q < T and n_r >= n_t, got n_t={n_t}, n_r={n_r}"
    return None


def check_baseline_pilots(profile, n_t=1):
    """Each antenna's pilot columns of ``A`` must be invertible."""
    failures = []
    for m, sl in enumerate(baseline_pilot_slots(n_t, profile.Q)):
        sv = np.linalg.svd(profile.A[:, sl], compute_uv=False)
        if not sv[-1] > CONDITION_TOL * sv[0]:
            failures.append(ConditionFailure("pilot columns of A invertible",
                                             {"antenna": m + 1, "columns": [t + 1 for t in sl]},
                                             float(sv[-1])))
    return RecoveryReport(failures=tuple(failures))


def check_conditions(decoder, profile, n_t=1):
    if decoder in ("simo", "simo-reduced"):
        return check_recovery_conditions_simo(profile)
    if decoder == "mimo":
        return check_recovery_conditions_mimo(profile, n_t)
    return check_baseline_pilots(profile, n_t)
