import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nldof.channel import CorrelationProfile
from nldof.dof import (
    DofConfig,
    SweepTable,
    calibrate_sigma0,
    dmin_for,
    estimate_dof,
    numerical_jacobian,
    qam_codebook,
    run_sweep,
    run_trial,
    synthetic_table,
    trial_seed,
)
from nldof.schemes import Scheme, regime_error


@pytest.mark.parametrize("d_min,n_axis,size", [
    (1.0, 2, 4),      # +-0.5 on each axis, nothing excluded
    (0.5, 4, 16),
    (2 / 3, 3, 8),    # odd grid drops the origin
    (2.0, 1, None),   # single point at the origin: empty
])
def test_codebook_counts(d_min, n_axis, size):
    if size is None:
        with pytest.raises(ValueError):
            qam_codebook(1, d_min)
        return
    cb = qam_codebook(2, d_min)
    assert cb.n_axis == n_axis
    assert cb.size == size
    assert cb.rate_bits == pytest.approx(2 * math.log2(size))
    assert np.all(np.abs(cb.points) >= d_min / 2)
    assert np.max(np.abs(cb.points.real)) <= 1 + 1e-12


@given(st.floats(0.05, 1.0))
@settings(max_examples=50, deadline=None)
def test_codebook_spacing_and_box(d_min):
    cb = qam_codebook(1, d_min)
    pts = cb.points
    assert np.all(np.abs(pts.real) <= 1 + 1e-9) and np.all(np.abs(pts.imag) <= 1 + 1e-9)
    if cb.size > 1:
        diff = np.abs(pts[:, None] - pts[None, :]) + np.eye(cb.size) * 10
        assert diff.min() == pytest.approx(d_min)


@given(st.floats(0.02, 1.0), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_nearest_inverts_symbols(d_min, seed):
    cb = qam_codebook(3, d_min)
    rng = np.random.default_rng(seed)
    idx = rng.integers(cb.size, size=3)
    jitter = (rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3)) * 0.45 * d_min / np.sqrt(2)
    np.testing.assert_array_equal(cb.nearest(cb.symbols(idx) + jitter), idx)


def test_nearest_handles_excluded_and_nonfinite():
    cb = qam_codebook(1, 2 / 3)
    assert cb.nearest([0.0])[0] >= 0
    assert cb.nearest([np.nan])[0] == -1


def test_codebook_vectors():
    cb = qam_codebook(2, 1.0)
    assert cb.vectors().shape == (16, 2)
    with pytest.raises(ValueError):
        qam_codebook(4, 0.1).vectors(limit=10)


def test_dmin_scaling():
    assert dmin_for(1e4, 2.0, 0.0) == pytest.approx(1 / 200)
    assert dmin_for(1e4, 1.0, 0.25) == pytest.approx(0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        DofConfig(delta=0.5)
    with pytest.raises(ValueError):
        DofConfig(snr_grid=(0.0, 1.0))
    with pytest.raises(ValueError):
        DofConfig(trials_per_point=0)


def test_trial_seed_is_stable():
    assert trial_seed(1, 2, 3) == trial_seed(1, 2, 3)
    assert trial_seed(1, 2, 3) != trial_seed(1, 3, 2)
    assert 0 <= trial_seed(0) < 2**63


@pytest.mark.parametrize("decoder,n_t,n_r,A", [
    ("simo", 1, 2, [[1, 0, 1], [0, 1, 2]]),
    ("simo-reduced", 1, 1, [[1, 0, 1, 2, 1], [0, 1, 1, -1, 3]]),
    ("mimo", 2, 2, np.ones((1, 6))),
    ("baseline", 1, 2, [[1, 0, 1], [0, 1, 2]]),
])
def test_noiseless_sweep_has_no_errors(decoder, n_t, n_r, A):
    scheme = Scheme(decoder, CorrelationProfile(A, name="t"), n_t, n_r)
    cfg = DofConfig(sigma0=1.0, snr_grid=(1e2, 1e4), trials_per_point=20)
    table = run_sweep(cfg, scheme, seed=0, noiseless=True)
    assert all(r.bler == 0 and r.ser == 0 for r in table.rows)


def test_sweep_accounting(example_profile):
    scheme = Scheme("simo", example_profile, 1, 2)
    cfg = DofConfig(sigma0=1.0, snr_grid=(10.0, 1e3), trials_per_point=50)
    records = []
    table = run_sweep(cfg, scheme, seed=3, on_record=records.append)
    assert len(records) == 100
    for i, row in enumerate(table.rows):
        recs = records[i * 50:(i + 1) * 50]
        assert row.bler == sum(not r.success for r in recs) / 50
        assert row.rate_bits == pytest.approx(scheme.D * math.log2(row.grid))
        assert row.trials == 50
    assert all(r.guard is not None for r in records if all(d == -1 for d in r.decoded))


def test_sweep_empty_grid_row(example_profile):
    scheme = Scheme("simo", example_profile, 1, 2)
    cfg = DofConfig(sigma0=0.01, snr_grid=(1.0,), trials_per_point=5)
    (row,) = run_sweep(cfg, scheme, seed=0).rows
    assert row.grid == 0 and row.bler == 1.0 and row.rate_bits == 0.0


def test_sweep_is_deterministic(example_profile):
    scheme = Scheme("simo", example_profile, 1, 2)
    cfg = DofConfig(sigma0=1.0, snr_grid=(1e3, 1e5), trials_per_point=30)
    a = run_sweep(cfg, scheme, seed=11).to_csv()
    assert a == run_sweep(cfg, scheme, seed=11).to_csv()


def test_csv_roundtrip(example_profile):
    scheme = Scheme("simo", example_profile, 1, 2)
    cfg = DofConfig(sigma0=1.0, snr_grid=(1e3, 1e5), trials_per_point=5)
    table = run_sweep(cfg, scheme, seed=1)
    back = SweepTable.from_csv(table.to_csv(), D=table.D)
    assert [r.rate_bits for r in back.rows] == [r.rate_bits for r in table.rows]


@pytest.mark.parametrize("D", [5.0, 1.8])
def test_estimate_dof_synthetic(D):
    table = synthetic_table([10 ** (k / 2) for k in range(6, 17)], D)
    assert estimate_dof(table) == pytest.approx(D, rel=1e-12)


def test_estimate_dof_skips_bad_rows():
    t = synthetic_table([1e3, 1e4, 1e5, 1e6], 2.0)
    rows = list(t.rows)
    rows[-1] = rows[-1].__class__(snr=1e6, dmin=0.1, grid=4, bler=0.5, rate_bits=0.0)
    assert estimate_dof(SweepTable(tuple(rows), 2)) == pytest.approx(2.0)


def test_estimate_dof_needs_three_points():
    with pytest.raises(ValueError):
        estimate_dof(synthetic_table([1e3, 1e4], 2))


def test_scalar_jacobian_matches_closed_form():
    # T = 2, Q = 1: the only coordinate is a / x for payload x
    a = 0.7 - 1.3j
    scheme = Scheme("simo", CorrelationProfile([[1, a]]), 1, 1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = complex(rng.uniform(0.2, 1), rng.uniform(-1, 1))
        J = numerical_jacobian(lambda z: scheme.canonical_map(z), np.array([x]))
        assert abs(abs(J[0, 0]) - abs(a) / abs(x) ** 2) < 1e-4


def test_baseline_calibration_is_unity(example_profile):
    cal = calibrate_sigma0(Scheme("baseline", example_profile, 1, 2), n_probe=20)
    assert cal.sigma0 == pytest.approx(1.0, abs=1e-8)
    assert cal.full_rank_rate == 1.0


def test_calibration_methods(example_profile):
    scheme = Scheme("simo", example_profile, 1, 2)
    for method in ("canonical", "decoder"):
        cal = calibrate_sigma0(scheme, n_probe=50, seed=2, method=method)
        assert cal.sigma0 > 0 and cal.full_rank_rate >= 0.99
    with pytest.raises(ValueError):
        calibrate_sigma0(scheme, n_probe=5, method="other")


def test_payload_sizes(example_profile):
    assert Scheme("simo", example_profile, 1, 2).D == 2
    assert Scheme("baseline", example_profile, 1, 2).D == 1
    mimo = Scheme("mimo", CorrelationProfile(np.ones((1, 6))), 2, 2)
    assert mimo.D == 8
    assert mimo.predicted_dof(0.05) == pytest.approx(7.2)


def test_regime_errors():
    assert regime_error("simo", 1, 2, 2, 3) is None
    assert regime_error("simo", 1, 1, 2, 3)
    assert regime_error("simo", 1, 2, 3, 3)
    assert regime_error("mimo", 2, 1, 1, 6)
    assert regime_error("simo-reduced", 1, 1, 2, 3)


def test_run_trial_record(example_profile):
    scheme = Scheme("simo", example_profile, 1, 2)
    cb = qam_codebook(scheme.D, 0.5)
    rec = run_trial(scheme, cb, 1e6, seed=5)
    assert rec == run_trial(scheme, cb, 1e6, seed=5)
    assert rec.to_json() == run_trial(scheme, cb, 1e6, seed=5).to_json()
    assert len(rec.sent) == 2 and rec.success
