import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from forecastval.errors import DomainError
from forecastval.losses import (
    LossSpec,
    Propriety,
    check_propriety,
    eval_loss,
    get_loss,
    linear_coeffs,
    linear_equivalent_value,
    score,
)

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
open_probs = st.floats(min_value=1e-6, max_value=1 - 1e-6, allow_nan=False)


@pytest.mark.parametrize("p, q, expected", [(0.5, 0.5, 0.0), (1.0, 0.7, 0.09)])
def test_squared_error_values(p, q, expected):
    assert eval_loss(get_loss("brier"), p, q) == pytest.approx(expected, abs=1e-15)


def test_kl_value():
    # 0.5 ln 2 + 0.5 ln(2/3), evaluated with mpmath at 30 digits
    assert eval_loss(get_loss("kl"), 0.5, 0.25) == pytest.approx(0.14384103622589045, abs=1e-15)


def test_kl_zero_log_zero_convention():
    assert eval_loss(get_loss("kl"), 1.0, 0.5) == pytest.approx(math.log(2.0))
    assert eval_loss(get_loss("kl"), 0.0, 0.5) == pytest.approx(math.log(2.0))


@pytest.mark.parametrize("y, q, expected", [(1, 1.0, 0.0), (0, 0.3, 0.09)])
def test_score_brier(y, q, expected):
    assert score(get_loss("brier"), y, q) == pytest.approx(expected, abs=1e-15)


def test_score_absolute():
    assert score(get_loss("absolute"), 1, 0.25) == 0.75


def test_log_score_sign():
    assert score(get_loss("log"), 1, 0.25) == pytest.approx(-math.log(0.25))
    assert score(get_loss("log"), 0, 0.25) == pytest.approx(-math.log(0.75))


@pytest.mark.parametrize("name", ["kl", "log"])
@pytest.mark.parametrize("q", [0.0, 1.0])
def test_log_type_domain_error(name, q):
    with pytest.raises(DomainError):
        score(get_loss(name), 1, q)


def test_clip_epsilon_allows_boundary():
    loss = get_loss("log", clip_epsilon=1e-3)
    assert score(loss, 1, 0.0) == pytest.approx(-math.log(1e-3))


def test_clip_epsilon_range():
    with pytest.raises(ValueError):
        LossSpec("log_score", clip_epsilon=0.5)


@pytest.mark.parametrize("name, q, a, b", [
    ("brier", 0.5, 0.0, 0.25),
    ("brier", 0.3, 0.4, 0.09),
    ("absolute", 0.25, 0.5, 0.25),
])
def test_linear_coeffs_examples(name, q, a, b):
    c = linear_coeffs(get_loss(name), q)
    assert c.a == pytest.approx(a, abs=1e-15)
    assert c.b == pytest.approx(b, abs=1e-15)


def test_linear_equivalent_examples():
    brier = get_loss("brier")
    assert linear_equivalent_value(brier, 0.5, 0.5) == pytest.approx(0.25)
    assert linear_equivalent_value(brier, 1.0, 0.3) == pytest.approx(0.49)
    assert linear_equivalent_value(get_loss("kl"), 0.5, 0.5) == pytest.approx(0.6931471805599453)


def test_unknown_loss():
    with pytest.raises(ValueError):
        get_loss("hinge")


def test_custom_loss():
    loss = LossSpec("custom", loss_one=lambda q: (1 - q) ** 2, loss_zero=lambda q: q ** 2)
    assert eval_loss(loss, 0.3, 0.6) == pytest.approx(0.3 * 0.16 + 0.7 * 0.36)
    assert score(loss, 1, 0.6) == pytest.approx(0.16)


def test_propriety_classifications():
    assert check_propriety(get_loss("brier"), 0.05).status is Propriety.STRICTLY_PROPER
    assert check_propriety(get_loss("kl"), 0.05).status is Propriety.STRICTLY_PROPER
    res = check_propriety(get_loss("absolute"), 0.05)
    assert res.status is Propriety.IMPROPER
    p, q = res.witness
    loss = get_loss("absolute")
    assert linear_equivalent_value(loss, p, p) > linear_equivalent_value(loss, p, q) + 1e-12


def test_propriety_grid_step_range():
    with pytest.raises(ValueError):
        check_propriety(get_loss("brier"), 0.2)


@given(open_probs, open_probs)
def test_coeffs_reproduce_pair(p, q):
    for name in ("brier", "kl", "log", "absolute"):
        loss = get_loss(name)
        c = linear_coeffs(loss, q)
        assert c.a + c.b == pytest.approx(score(loss, 1, q), rel=1e-12, abs=1e-12)
        assert c.b == score(loss, 0, q)


@given(probs, probs)
def test_squared_error_linear_equivalent_form(p, q):
    val = linear_equivalent_value(get_loss("brier"), p, q)
    assert val == pytest.approx(-2 * p * q + q * q + p, abs=1e-12)


@given(open_probs, open_probs)
def test_two_point_expectation(p, q):
    for name in ("brier", "kl", "absolute"):
        loss = get_loss(name)
        expected = p * score(loss, 1, q) + (1 - p) * score(loss, 0, q)
        assert linear_equivalent_value(loss, p, q) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", ["brier", "kl"])
def test_residual_free_of_forecast(name):
    loss = get_loss(name)
    grid = np.linspace(0.01, 0.99, 99)
    for p in (0.0, 0.1, 0.37, 0.5, 0.9, 1.0):
        resid = eval_loss(loss, p, grid) - linear_equivalent_value(loss, p, grid)
        assert np.ptp(resid) <= 1e-12


def test_vectorised_scores():
    q = np.array([0.1, 0.5, 0.9])
    assert_allclose(score(get_loss("brier"), np.array([1, 0, 1]), q), [0.81, 0.25, 0.01])
