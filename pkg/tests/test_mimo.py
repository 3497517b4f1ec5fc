import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nldof.channel import CorrelationProfile, apply_channel, complex_normal, sample_fading
from nldof.errors import DecodeFailure
from nldof.mimo import (
    MimoTrainingPlan,
    build_R,
    check_recovery_conditions_mimo,
    decode_mimo,
    nonlinear_phase,
)
from nldof.simo import decode_simo
from nldof.subspace import canonical_form, subspace_distance

seeds = st.integers(0, 2**32 - 1)


def random_block(rng, plan):
    payload = complex_normal(rng, (plan.n_t, plan.T - plan.n_t))
    return plan.block(payload).X


def test_build_R_single_antenna(example_profile):
    R = build_R(example_profile, [2, 3, 1])
    np.testing.assert_array_equal(R, [[2, 0, 1], [0, 3, 2]])


def test_build_R_two_antennas():
    p = CorrelationProfile([[1, 2, 3, 4]])
    R = build_R(p, [[1, 1, 1, 1], [1, -1, 0, 2]])
    np.testing.assert_array_equal(R, [[1, 2, 3, 4], [1, -2, 0, 8]])


def test_nonlinear_phase_hand_example():
    # flat fading, n_t = 2: the identity sits on slots 2 and 3
    p = CorrelationProfile([[1, 1, 1, 1, 1]])
    plan = MimoTrainingPlan(2, 1, 5)
    X = np.array([[1, 2, 1, 0, 4], [3, 5, 0, 1, 7]], dtype=complex)
    B = canonical_form(build_R(p, X)).B
    np.testing.assert_allclose(nonlinear_phase(B, p, plan), [[1, 2], [3, 5]], atol=1e-12)


def test_training_plan_layout():
    plan = MimoTrainingPlan(2, 2, 8)
    assert plan.L == 4
    assert list(plan.training_slots) == [4, 5]
    assert plan.payload_slots == [0, 1, 2, 3, 6, 7]
    assert plan.payload_size == 12
    X = plan.block(np.arange(12)).X
    np.testing.assert_array_equal(X[:, 4:6], np.eye(2))
    with pytest.raises(ValueError):
        MimoTrainingPlan(2, 2, 5)


@pytest.mark.parametrize("n_t,Q,T,n_r", [(2, 1, 6, 2), (2, 2, 8, 4), (3, 1, 7, 3), (1, 2, 5, 2)])
def test_noiseless_roundtrip(n_t, Q, T, n_r):
    rng = np.random.default_rng(n_t * 100 + Q * 10 + T)
    p = CorrelationProfile(complex_normal(rng, (Q, T)))
    plan = MimoTrainingPlan(n_t, Q, T)
    for _ in range(20):
        X = random_block(rng, plan)
        Y = apply_channel(X, sample_fading(p, n_t, n_r, rng))
        Xh = decode_mimo(Y, p, plan)
        assert np.max(np.abs(Xh - X)) < 1e-8 * max(1.0, np.max(np.abs(X)))


def test_lstsq_chain(rng):
    p = CorrelationProfile(complex_normal(rng, (2, 8)))
    plan = MimoTrainingPlan(2, 2, 8)
    X = random_block(rng, plan)
    Y = apply_channel(X, sample_fading(p, 2, 4, rng))
    np.testing.assert_allclose(decode_mimo(Y, p, plan, chain="lstsq"), X, atol=1e-8)


@given(seeds, st.integers(1, 2))
@settings(max_examples=30, deadline=None)
def test_single_antenna_agrees_with_simo(seed, Q):
    # with T = Q + 1 the training slot is also the last slot
    rng = np.random.default_rng(seed)
    T = Q + 1
    p = CorrelationProfile(complex_normal(rng, (Q, T)))
    plan = MimoTrainingPlan(1, Q, T)
    x = complex_normal(rng, T)
    x[Q] = 1.0
    Y = apply_channel(x, sample_fading(p, 1, Q, rng))
    try:
        a = decode_mimo(Y, p, plan)[0]
        b = decode_simo(Y, p)
    except DecodeFailure:
        return
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-8)


def test_single_antenna_agrees_with_simo_longer_block(rng):
    # pilots on both x(Q+1) and x(T) so either decoder applies
    p = CorrelationProfile(complex_normal(rng, (2, 5)))
    x = np.array([0.3 + 1j, -1.2, 1, 0.8j, 1])
    Y = apply_channel(x, sample_fading(p, 1, 2, rng))
    np.testing.assert_allclose(decode_mimo(Y, p, MimoTrainingPlan(1, 2, 5))[0],
                               decode_simo(Y, p), atol=1e-10)


def test_residual_of_noiseless_span(rng):
    p = CorrelationProfile(complex_normal(rng, (2, 8)))
    plan = MimoTrainingPlan(2, 2, 8)
    X = random_block(rng, plan)
    R = build_R(p, X)
    Y = apply_channel(X, sample_fading(p, 2, 4, rng))
    assert subspace_distance(Y, R) < 1e-10
    Xh = decode_mimo(Y, p, plan)
    assert np.linalg.norm(build_R(p, Xh) - R) / np.linalg.norm(R) < 1e-10


def test_equal_columns_reported():
    p = CorrelationProfile([[1, 2, 1, 3, 5, 1], [0, 1, 0, 1, 2, 3]])
    rep = check_recovery_conditions_mimo(p, 2)
    assert not rep.passed
    assert {"columns": [1, 3]} in [f.indices for f in rep.failures]
    assert rep.notes


def test_flat_profile_passes():
    assert check_recovery_conditions_mimo(CorrelationProfile(np.ones((1, 6))), 2).passed


def test_random_profiles_pass():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = CorrelationProfile(complex_normal(rng, (2, 8)))
        assert check_recovery_conditions_mimo(p, 2).passed


def test_conditions_need_enough_columns():
    with pytest.raises(ValueError):
        check_recovery_conditions_mimo(CorrelationProfile(np.ones((1, 3))), 2)


def test_decode_regime_checks(rng):
    p = CorrelationProfile(complex_normal(rng, (2, 8)))
    plan = MimoTrainingPlan(2, 2, 8)
    with pytest.raises(ValueError):
        decode_mimo(np.ones((3, 8)), p, plan)
    with pytest.raises(ValueError):
        decode_mimo(np.ones((4, 7)), p, plan)


def test_zero_row_entry_trips_guard(rng):
    A = complex_normal(rng, (1, 6))
    A[0, 5] = 0
    p = CorrelationProfile(A)
    plan = MimoTrainingPlan(2, 1, 6)
    X = random_block(rng, plan)
    Y = apply_channel(X, sample_fading(p, 2, 2, rng))
    with pytest.raises(DecodeFailure) as exc:
        decode_mimo(Y, p, plan)
    assert exc.value.guard == "A_1t_small"
