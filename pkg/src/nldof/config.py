"""Experiment description files.

One ``key = value`` pair per line; values are JSON (bare words are read as
strings); ``#`` starts a comment.  Matrices are nested row lists of
``[re, im]`` pairs::

    name = "example-T3-Q2"
    A = [[[1, 0], [0, 0], [1, 0]],
         [[0, 0], [1, 0], [2, 0]]]
    n_t = 1
    n_r = 2
    decoder = simo
    snr_grid_db = [30, 40, 50, 60, 70, 80]

A value may continue over several lines as long as its brackets are open.
``A_file`` may replace ``A``: a path (relative to the spec file) to a JSON
file holding the matrix in the same format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from nldof.channel import CorrelationProfile, matrix_from_pairs
from nldof.dof import DofConfig
from nldof.errors import InvalidProfileError
from nldof.schemes import DECODERS, regime_error


class SpecError(ValueError):
    """Malformed or inconsistent experiment description."""


@dataclass(frozen=True)
class ExperimentSpec:
    profile: CorrelationProfile
    n_t: int = 1
    n_r: int = 1
    decoder: str = "simo"
    delta: float = 0.05
    sigma0: float | None = None
    sigma0_method: str = "decoder"
    epsilon: float = 0.01
    n_probe: int = 200
    snr_grid_db: tuple = (30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
    trials: int = 100
    seed: int = 0
    noiseless: bool = False
    error_ceiling: float = 0.05
    out: str | None = None

    @property
    def Q(self) -> int:
        return self.profile.Q

    @property
    def T(self) -> int:
        return self.profile.T

    @property
    def snr_grid(self):
        return tuple(10 ** (db / 10) for db in self.snr_grid_db)

    def dof_config(self, sigma0):
        return DofConfig(delta=self.delta, sigma0=sigma0, epsilon=self.epsilon,
                         snr_grid=self.snr_grid, trials_per_point=self.trials)

    def regime_error(self):
        return regime_error(self.decoder, self.n_t, self.n_r, self.Q, self.T)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def _split_entries(text):
    key, buf, depth = None, [], 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if key is None:
            if "=" not in line:
                raise SpecError(f"line {lineno}: expected 'key = value'")
            key, line = (s.strip() for s in line.split("=", 1))
            if not key.isidentifier():
                raise SpecError(f"line {lineno}: bad key {key!r}")
        buf.append(line)
        depth += line.count("[") - line.count("]")
        if depth <= 0:
            yield key, " ".join(buf).strip()
            key, buf, depth = None, [], 0
    if key is not None:
        raise SpecError(f"unterminated value for {key!r}")


def parse_values(text):
    """Parse ``key = value`` text into a dict of JSON values."""
    out = {}
    for key, raw in _split_entries(text):
        if key in out:
            raise SpecError(f"duplicate key {key!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            if any(c in raw for c in "[]{}\""):
                raise SpecError(f"cannot parse value of {key!r}: {raw!r}") from None
            out[key] = raw
    return out


_SCALARS = {f.name for f in fields(ExperimentSpec)} - {"profile"}


def spec_from_values(values, base_dir=None):
    values = dict(values)
    name = str(values.pop("name", ""))
    if "A" in values and "A_file" in values:
        raise SpecError("give either A or A_file, not both")
    if "A_file" in values:
        path = Path(values.pop("A_file"))
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            rows = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read A_file {path}: {exc}") from exc
    elif "A" in values:
        rows = values.pop("A")
    else:
        raise SpecError("missing profile matrix A")
    try:
        profile = CorrelationProfile(matrix_from_pairs(rows), name=name)
    except (InvalidProfileError, ValueError, TypeError) as exc:
        raise SpecError(f"invalid profile: {exc}") from exc

    for dim in ("Q", "T"):
        if dim in values and int(values.pop(dim)) != getattr(profile, dim):
            raise SpecError(f"{dim} does not match the shape of A {profile.A.shape}")
    kw = {}
    for key in list(values):
        if key in _SCALARS:
            kw[key] = values.pop(key)
    if "snr_grid_db" in kw:
        kw["snr_grid_db"] = tuple(float(v) for v in kw["snr_grid_db"])
    if values:
        raise SpecError(f"unknown keys: {sorted(values)}")
    spec = ExperimentSpec(profile=profile, **kw)
    validate(spec)
    return spec


def validate(spec):
    if spec.decoder not in DECODERS:
        raise SpecError(f"unknown decoder {spec.decoder!r}; choose from {DECODERS}")
    for name in ("n_t", "n_r", "trials", "n_probe"):
        v = getattr(spec, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise SpecError(f"{name} must be a positive integer, got {v!r}")
    if not isinstance(spec.seed, int) or spec.seed < 0:
        raise SpecError(f"seed must be a non-negative integer, got {spec.seed!r}")
    if not spec.snr_grid_db or not all(math.isfinite(v) for v in spec.snr_grid_db):
        raise SpecError("snr_grid_db must be a non-empty list of finite dB values")
    if spec.sigma0 is not None and not spec.sigma0 > 0:
        raise SpecError(f"sigma0 must be positive, got {spec.sigma0}")
    if spec.sigma0_method not in ("decoder", "canonical"):
        raise SpecError(f"sigma0_method must be 'decoder' or 'canonical', got {spec.sigma0_method!r}")
    try:
        spec.dof_config(spec.sigma0 or 1.0)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def load_spec(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    return spec_from_values(parse_values(text), base_dir=path.parent)
