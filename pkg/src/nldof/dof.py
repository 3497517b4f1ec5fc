"""Monte Carlo verification of the achievable degrees of freedom.

Each payload dimension carries a square QAM grid whose spacing shrinks as
``d_min = 1 / (sigma0 * snr^(1/2 - delta))``.  If blocks keep decoding
correctly along an SNR sweep, the rate ``D log(points per dimension)`` grows
with slope ``(1 - 2 delta) D`` against ``ln snr``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from nldof.channel import add_noise, apply_channel, sample_fading
from nldof.errors import DecodeFailure

#: relative singular-value floor for calling a probed Jacobian full rank
JACOBIAN_RANK_RTOL = 1e-6
TABLE_COLUMNS = ("snr", "dmin", "grid", "bler", "rate_bits", "ser")


# -- codebook ---------------------------------------------------------------


@dataclass(frozen=True)
class QamCodebook:
    """Product of ``D`` identical square grids inside the box ``[-1, 1]^2``.

    ``points`` are the symbols of one complex dimension; a codeword is a
    length-``D`` vector of symbol indices.
    """

    D: int
    d_min: float
    zero_exclusion: float
    points: np.ndarray
    n_axis: int
    lookup: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        """Points per complex dimension."""
        return len(self.points)

    @property
    def rate_bits(self) -> float:
        return self.D * math.log2(self.size)

    @property
    def average_power(self) -> float:
        """Mean ``|x|^2`` of one dimension under uniform use."""
        return float(np.mean(np.abs(self.points) ** 2))

    def symbols(self, indices):
        return self.points[np.asarray(indices)]

    def nearest(self, values):
        """Hard decision per dimension: index of the closest kept point."""
        values = np.asarray(values, dtype=complex)
        finite = np.isfinite(values)
        safe = np.where(finite, values, 0)
        n, d = self.n_axis, self.d_min
        off = (n - 1) / 2
        i_re = np.clip(np.rint(safe.real / d + off), 0, n - 1).astype(int)
        i_im = np.clip(np.rint(safe.imag / d + off), 0, n - 1).astype(int)
        idx = self.lookup[i_re, i_im]
        missing = idx < 0
        if missing.any():
            dist = np.abs(safe[missing][:, None] - self.points[None, :])
            idx[missing] = np.argmin(dist, axis=1)
        idx[~finite] = -1
        return idx

    def vectors(self, limit=100_000):
        """Enumerate all codewords as complex vectors (small codebooks only)."""
        total = self.size ** self.D
        if total > limit:
            raise ValueError(f"{total} codewords exceed the enumeration limit {limit}")
        grids = np.meshgrid(*([self.points] * self.D), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


def qam_codebook(D, d_min, zero_exclusion=None):
    """Square QAM grid with spacing ``d_min`` per complex dimension.

    ``floor(2 / d_min)`` levels per real axis, centred in ``[-1, 1]``; points
    with magnitude below ``zero_exclusion`` (default ``d_min / 2``) are
    dropped so that no payload symbol sits at the origin.
    """
    if not d_min > 0:
        raise ValueError(f"d_min must be positive, got {d_min}")
    if zero_exclusion is None:
        zero_exclusion = d_min / 2
    if zero_exclusion < 0 or zero_exclusion >= d_min:
        raise ValueError(f"need 0 <= zero_exclusion < d_min, got {zero_exclusion}")
    n = int(math.floor(2.0 / d_min + 1e-9))
    if n < 1:
        raise ValueError(f"d_min={d_min} leaves no grid point in [-1, 1]")
    axis = (np.arange(n) - (n - 1) / 2) * d_min
    grid = axis[:, None] + 1j * axis[None, :]
    keep = np.abs(grid) >= zero_exclusion
    if not keep.any():
        raise ValueError(f"d_min={d_min} with zero_exclusion={zero_exclusion} is empty")
    lookup = -np.ones((n, n), dtype=int)
    lookup[keep] = np.arange(int(keep.sum()))
    return QamCodebook(D=D, d_min=float(d_min), zero_exclusion=float(zero_exclusion),
                       points=grid[keep], n_axis=n, lookup=lookup)


def dmin_for(snr, sigma0, delta):
    return 1.0 / (sigma0 * snr ** (0.5 - delta))


# -- configuration and records ----------------------------------------------


@dataclass(frozen=True)
class DofConfig:
    delta: float = 0.05
    sigma0: float = 1.0
    epsilon: float = 0.01
    snr_grid: tuple = (1e3, 1e4, 1e5, 1e6, 1e7, 1e8)
    trials_per_point: int = 1000

    def __post_init__(self):
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {self.delta}")
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.snr_grid or min(self.snr_grid) <= 0:
            raise ValueError("snr_grid must hold positive linear SNRs")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be at least 1")
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    profile: str
    decoder: str
    snr: float
    sent: tuple
    decoded: tuple
    success: bool
    guard: str | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        d = asdict(self)
        d["sent"] = list(self.sent)
        d["decoded"] = list(self.decoded)
        return json.dumps(d, sort_keys=True, allow_nan=True)


def trial_seed(master, *keys):
    """Deterministic 63-bit seed for one trial, independent of run order."""
    ss = np.random.SeedSequence([int(master), *[int(k) for k in keys]])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def run_trial(scheme, codebook, snr, seed, noiseless=False):
    """Encode a random codeword, pass it through a fresh channel, decode it."""
    rng = np.random.default_rng(seed)
    sent = rng.integers(codebook.size, size=scheme.D)
    block = scheme.block(codebook.symbols(sent))
    fading = sample_fading(scheme.profile, scheme.n_t, scheme.n_r, rng)
    Y = add_noise(apply_channel(block, fading), snr, rng, noiseless=noiseless)
    guard, diagnostics = None, {}
    try:
        est, diagnostics = scheme.decode(Y)
        decoded = codebook.nearest(est)
    except DecodeFailure as exc:
        guard = exc.guard
        diagnostics = {} if exc.value is None else {"value": exc.value}
        decoded = -np.ones(scheme.D, dtype=int)
    return TrialRecord(
        seed=seed,
        profile=scheme.profile.name,
        decoder=scheme.decoder,
        snr=float(snr),
        sent=tuple(int(i) for i in sent),
        decoded=tuple(int(i) for i in decoded),
        success=bool(np.array_equal(sent, decoded)),
        guard=guard,
        diagnostics={k: float(v) for k, v in diagnostics.items()},
    )


# -- sweep table -------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    snr: float
    dmin: float
    grid: int
    bler: float
    rate_bits: float
    ser: float = 0.0
    trials: int = 0


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    D: int
    decoder: str = ""

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(getattr(r, c))) if c != "grid" else r.grid
                        for c in TABLE_COLUMNS])
        return buf.getvalue()

    def to_records(self):
        return [asdict(r) for r in self.rows]

    @classmethod
    def from_csv(cls, text, D, decoder=""):
        reader = csv.DictReader(io.StringIO(text))
        rows = [SweepRow(snr=float(r["snr"]), dmin=float(r["dmin"]), grid=int(r["grid"]),
                         bler=float(r["bler"]), rate_bits=float(r["rate_bits"]),
                         ser=float(r.get("ser", 0.0))) for r in reader]
        return cls(rows=tuple(rows), D=D, decoder=decoder)


def run_sweep(config, scheme, seed, noiseless=False, on_record=None):
    """Block error rate and rate at every SNR of ``config.snr_grid``.

    Decoder failures count as block errors; the sweep never aborts.  An SNR
    whose grid would be empty yields a zero-rate row with ``bler = 1``.
    """
    rows = []
    for i, snr in enumerate(config.snr_grid):
        d_min = dmin_for(snr, config.sigma0, config.delta)
        try:
            codebook = qam_codebook(scheme.D, d_min)
        except ValueError:
            rows.append(SweepRow(snr=snr, dmin=d_min, grid=0, bler=1.0, rate_bits=0.0,
                                 ser=1.0, trials=0))
            continue
        errors = sym_errors = 0
        for j in range(config.trials_per_point):
            rec = run_trial(scheme, codebook, snr, trial_seed(seed, i, j), noiseless)
            if on_record is not None:
                on_record(rec)
            errors += not rec.success
            sym_errors += sum(a != b for a, b in zip(rec.sent, rec.decoded))
        n = config.trials_per_point
        rows.append(SweepRow(snr=snr, dmin=d_min, grid=codebook.size, bler=errors / n,
                             rate_bits=codebook.rate_bits, ser=sym_errors / (n * scheme.D),
                             trials=n))
    return SweepTable(rows=tuple(rows), D=scheme.D, decoder=scheme.decoder)


def synthetic_table(snr_grid, D):
    """Error-free table whose rate is exactly ``D ln snr`` nats."""
    rows = [SweepRow(snr=float(s), dmin=float("nan"), grid=0, bler=0.0,
                     rate_bits=D * math.log(s) / math.log(2)) for s in snr_grid]
    return SweepTable(rows=tuple(rows), D=D, decoder="synthetic")


def estimate_dof(table, error_ceiling=0.05):
    """Least-squares slope of rate (nats per block) against ``ln snr``.

    Only rows with ``bler <= error_ceiling`` enter the fit.
    """
    rows = [r for r in table.rows if r.bler <= error_ceiling]
    if len(rows) < 3:
        raise ValueError(f"only {len(rows)} rows with bler <= {error_ceiling}; need 3")
    x = np.log([r.snr for r in rows])
    y = np.array([r.rate_bits for r in rows]) * math.log(2)
    return float(np.polyfit(x, y, 1)[0])


# -- Jacobian probes ---------------------------------------------------------


def numerical_jacobian(f, x, step=1e-6):
    """Central-difference Jacobian of a holomorphic map ``C^n -> C^k``."""
    x = np.asarray(x, dtype=complex)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        h = step * max(1.0, abs(x[k]))
        e[k] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=1)


def real_jacobian(f, Y, step=1e-7):
    """Central-difference Jacobian of ``C^{shape} -> C^k`` over real coordinates.

    Columns run over the real then imaginary part of each entry of ``Y``;
    rows over the real then imaginary part of each output.
    """
    Y = np.asarray(Y, dtype=complex)
    flat = Y.ravel()
    cols = []
    for unit in (1.0, 1j):
        for k in range(flat.size):
            e = np.zeros_like(flat)
            e[k] = step * unit
            d = (np.asarray(f((flat + e).reshape(Y.shape)))
                 - np.asarray(f((flat - e).reshape(Y.shape)))) / (2 * step)
            cols.append(np.concatenate([d.real, d.imag]))
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class Calibration:
    sigma0: float
    min_singular_values: np.ndarray = field(repr=False)
    full_rank_rate: float = 1.0
    method: str = "canonical"


def _probe_payload(rng, D):
    # uniform in the unit-power box, away from the origin
    while True:
        z = rng.uniform(-1, 1, D) + 1j * rng.uniform(-1, 1, D)
        if np.all(np.abs(z) > 0.05):
            return z


def calibrate_sigma0(scheme, n_probe=1000, epsilon=0.01, seed=0, method="canonical"):
    """Empirical Jacobian constant ``sigma0`` for one scheme.

    ``method="canonical"`` differentiates the payload -> decoder-coordinate
    map (:meth:`Scheme.canonical_map`) and records the smallest singular
    value of each probe's Jacobian; every Jacobian must have full column
    rank ``D``.  ``method="decoder"`` instead measures how strongly the
    decoder amplifies receiver noise at a random noiseless operating point:
    ``1 / sigma_max`` of the real Jacobian of decode with respect to ``Y``.

    Returns the value exceeded by a ``1 - epsilon`` fraction of probes.

    Raises
    ------
    ValueError
        If more than an ``epsilon`` fraction of probed Jacobians are rank
        deficient.
    """
    rng = np.random.default_rng(seed)
    values, full = [], 0
    for _ in range(n_probe):
        payload = _probe_payload(rng, scheme.D)
        fading = sample_fading(scheme.profile, scheme.n_t, scheme.n_r or scheme.Q, rng)
        if method == "canonical":
            J = numerical_jacobian(lambda z: scheme.canonical_map(z, fading), payload)
            sv = np.linalg.svd(J, compute_uv=False)
            ok = len(sv) >= scheme.D and sv[scheme.D - 1] > JACOBIAN_RANK_RTOL * sv[0]
            values.append(sv[min(scheme.D, len(sv)) - 1])
        elif method == "decoder":
            Y = apply_channel(scheme.block(payload), fading)
            try:
                J = real_jacobian(lambda y: scheme.decode(y)[0], Y)
            except DecodeFailure:
                values.append(0.0)
                continue
            smax = np.linalg.norm(J, 2)
            ok = np.isfinite(smax) and smax > 0
            values.append(1.0 / smax if ok else 0.0)
        else:
            raise ValueError(f"unknown method {method!r}")
        full += bool(ok)
    rate = full / n_probe
    if rate < 1 - epsilon:
        raise ValueError(
            f"Jacobian full rank at only {rate:.3%} of probes; premise violated"
        )
    values = np.array(values)
    return Calibration(sigma0=float(np.quantile(values, epsilon)),
                       min_singular_values=values, full_rank_rate=rate, method=method)
