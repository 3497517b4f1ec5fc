"""Fading whose time correlation has rank Q.

Each antenna pair (m, n) sees a fading trajectory ``h_{m,n}(t) = sum_q
A[q, t] s[m, n, q]`` over a block of ``T`` channel uses, where the innovations
``s`` are i.i.d. CN(0, 1).  The correlation matrix of every trajectory is
``A^H A`` and has rank ``Q``.

Array conventions (0-based throughout):

* ``A``: ``(Q, T)``
* ``s``: ``(n_t, n_r, Q)``
* ``H``: ``(T, n_r, n_t)``, so ``H[t]`` is the channel matrix at time ``t``
* ``X``: ``(n_t, T)``, ``Y``: ``(n_r, T)``
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nldof.errors import InvalidProfileError

#: smallest/largest singular value ratio below which ``A`` is rank deficient
PROFILE_RANK_RTOL = 1e-8


def complex_normal(rng, shape):
    """Draw CN(0, 1) samples: real and imaginary parts i.i.d. N(0, 1/2)."""
    rng = np.random.default_rng(rng)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def matrix_to_pairs(M):
    """Serialize a complex matrix as row-major nested lists of ``[re, im]``."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_pairs(rows):
    """Inverse of :func:`matrix_to_pairs`.

    Plain real numbers are accepted in place of ``[re, im]`` pairs.
    """
    out = []
    for row in rows:
        vals = []
        for z in row:
            if isinstance(z, (list, tuple)):
                if len(z) != 2:
                    raise ValueError(f"complex entry must be [re, im], got {z!r}")
                vals.append(complex(float(z[0]), float(z[1])))
            else:
                vals.append(complex(float(z)))
        out.append(vals)
    M = np.array(out, dtype=complex)
    if M.ndim != 2:
        raise ValueError("matrix rows must all have the same length")
    return M


@dataclass(frozen=True)
class CorrelationProfile:
    """Whitening matrix ``A`` of a rank-``Q`` correlated fading channel.

    Parameters
    ----------
    A : array_like, shape (Q, T)
        ``A[q, t]`` weights innovation ``q`` in the fading at time ``t``.
        Any full-row-rank matrix is accepted; no row normalization is applied.
    name : str, optional
        Free-form identifier carried into trial records.
    """

    A: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        if A.ndim == 1:
            A = A[None, :]
        if A.ndim != 2:
            raise InvalidProfileError(f"A must be a matrix, got shape {A.shape}")
        Q, T = A.shape
        if Q < 1 or Q >= T:
            raise InvalidProfileError(f"need 1 <= Q < T, got Q={Q}, T={T}")
        if not np.all(np.isfinite(A)):
            raise InvalidProfileError("A has non-finite entries")
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[0] == 0 or sv[-1] <= PROFILE_RANK_RTOL * sv[0]:
            raise InvalidProfileError(
                f"A is rank deficient (singular values {sv.tolist()})"
            )
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def Q(self) -> int:
        return self.A.shape[0]

    @property
    def T(self) -> int:
        return self.A.shape[1]

    @property
    def K(self) -> np.ndarray:
        """Correlation matrix ``E[h^H h] = A^H A`` of one fading trajectory."""
        return self.A.conj().T @ self.A

    @classmethod
    def from_pairs(cls, rows, name=""):
        return cls(matrix_from_pairs(rows), name=name)

    def to_pairs(self):
        return matrix_to_pairs(self.A)


@dataclass(frozen=True)
class FadingRealization:
    """Innovations ``s`` and the fading matrices they induce through ``A``."""

    s: np.ndarray
    H: np.ndarray
    profile: CorrelationProfile = field(repr=False)

    @property
    def n_t(self) -> int:
        return self.s.shape[0]

    @property
    def n_r(self) -> int:
        return self.s.shape[1]

    @property
    def T(self) -> int:
        return self.H.shape[0]

    def trajectory(self, m, n):
        """Fading ``h_{m,n}(t)`` for ``t = 0..T-1``."""
        return self.H[:, n, m]


def fading_from_innovations(profile, s):
    s = np.asarray(s, dtype=complex)
    if s.ndim != 3 or s.shape[2] != profile.Q:
        raise ValueError(f"s must have shape (n_t, n_r, {profile.Q}), got {s.shape}")
    H = np.einsum("qt,mnq->tnm", profile.A, s)
    return FadingRealization(s=s, H=H, profile=profile)


def sample_fading(profile, n_t, n_r, seed=None):
    """Draw i.i.d. CN(0, 1) innovations and build ``H(t)`` from them.

    Parameters
    ----------
    profile : CorrelationProfile
    n_t, n_r : int
        Transmit and receive antenna counts.
    seed : int, numpy.random.Generator or None
        Identical seeds give identical realizations.

    Returns
    -------
    FadingRealization
    """
    if not isinstance(profile, CorrelationProfile):
        profile = CorrelationProfile(profile)
    if n_t < 1 or n_r < 1:
        raise ValueError(f"need n_t, n_r >= 1, got n_t={n_t}, n_r={n_r}")
    s = complex_normal(seed, (n_t, n_r, profile.Q))
    return fading_from_innovations(profile, s)


@dataclass(frozen=True)
class TransmitBlock:
    """One block of transmitted symbols with its pinned training entries.

    ``training`` holds ``(antenna, time, value)`` triples.  ``power`` is the
    declared per-channel-use budget for the block average ``||X||_F^2 / T``;
    the default leaves single blocks unconstrained since the power
    constraint is an expectation over the codebook.
    """

    X: np.ndarray
    training: tuple = ()
    power: float = np.inf

    def __post_init__(self):
        X = np.array(self.X, dtype=complex)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2:
            raise ValueError(f"X must be n_t x T, got shape {X.shape}")
        training = tuple((int(m), int(t), complex(v)) for m, t, v in self.training)
        for m, t, v in training:
            if X[m, t] != v:
                raise ValueError(f"training entry ({m}, {t}) is {X[m, t]}, declared {v}")
        avg = np.sum(np.abs(X) ** 2) / X.shape[1]
        if avg > self.power * (1 + 1e-12):
            raise ValueError(f"average power {avg:.6g} exceeds budget {self.power:.6g}")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "training", training)

    @property
    def n_t(self) -> int:
        return self.X.shape[0]

    @property
    def T(self) -> int:
        return self.X.shape[1]


def apply_channel(X, fading):
    """Noiseless received block: column ``t`` of ``Y`` is ``H(t) X[:, t]``.

    ``X`` may be a :class:`TransmitBlock` or an ``(n_t, T)`` array (a 1-D
    array is taken as a single transmit antenna).
    """
    if isinstance(X, TransmitBlock):
        X = X.X
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    T, n_r, n_t = fading.H.shape
    if X.shape != (n_t, T):
        raise ValueError(f"X has shape {X.shape}, fading expects ({n_t}, {T})")
    return np.einsum("tnm,mt->nt", fading.H, X)


def add_noise(Y, snr, seed=None, noiseless=False):
    """Add i.i.d. CN(0, 1/snr) noise to every entry of ``Y``.

    With ``noiseless=True`` the input is returned unchanged (the infinite
    SNR limit) and ``snr`` is only validated.
    """
    if not snr > 0:
        raise ValueError(f"snr must be positive, got {snr}")
    Y = np.asarray(Y, dtype=complex)
    if noiseless or np.isinf(snr):
        return Y.copy()
    return Y + complex_normal(seed, Y.shape) / np.sqrt(snr)
