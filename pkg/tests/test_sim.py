import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_array_equal
from scipy.stats import norm

from forecastval import sim
from forecastval.errors import CellTooSmallError
from forecastval.panel import partition_by_label


def test_spec_validation():
    with pytest.raises(ValueError):
        sim.ScenarioSpec(5)
    with pytest.raises(ValueError):
        sim.ScenarioSpec(1, runs=0)
    with pytest.raises(ValueError):
        sim.ScenarioSpec(1, seed=-1)


def test_scenario1_layout():
    panel = sim.gen_scenario(sim.ScenarioSpec(1), 0)
    assert panel.n == 300
    assert len(set(panel.bucket)) == 10
    assert panel.p_hat_alt is None
    part = partition_by_label(panel)
    probs = [0.1, 0.25, 0.3, 0.35, 0.4, 0.5, 0.65, 0.7, 0.75, 0.8]
    for (t, j), c in part.cells.items():
        assert np.all(panel.p_true[c] == probs[int(j) - 1])


def test_scenario2_sizes():
    panel = sim.gen_scenario(sim.ScenarioSpec(2), 3)
    part = partition_by_label(panel)
    sizes = sorted(part.sizes[[t == 1 for t, _ in part.keys]].tolist())
    assert sizes == [2, 2, 2, 5, 5, 24, 30, 35, 45]
    # competitor is one value per period
    for t in (1, 2):
        assert np.unique(panel.p_hat_alt[panel.t == t]).size == 1


def test_scenario3_probabilities():
    panel = sim.gen_scenario(sim.ScenarioSpec(3), 0)
    part = partition_by_label(panel)
    for (t, j), c in part.cells.items():
        vals = np.unique(panel.p_true[c])
        assert vals.size == 1
        assert vals[0] == pytest.approx(-0.1 + int(j) / 5)


@given(st.integers(0, 2 ** 63), st.integers(0, 10 ** 6))
def test_scenario4_ranges(seed, run):
    panel = sim.gen_scenario(sim.ScenarioSpec(4, seed=seed), run)
    j = np.array([int(b) for b in panel.bucket])
    assert np.all(panel.p_true >= (j - 1) / 5) and np.all(panel.p_true <= j / 5)


def test_scenario4_design_shared_across_runs():
    spec = sim.ScenarioSpec(4)
    a = sim.gen_scenario(spec, 0)
    b = sim.gen_scenario(spec, 1)
    assert_array_equal(a.p_true, b.p_true)
    assert not np.array_equal(a.y, b.y)


def test_forecast_is_previous_bucket_mean():
    panel = sim.gen_scenario(sim.ScenarioSpec(3), 2)
    part = partition_by_label(panel)
    cells = part.cells
    for j in "12345":
        prev = panel.y[cells[(1, j)]].mean()
        assert np.all(panel.p_hat[cells[(2, j)]] == prev)
    assert np.all(panel.p_hat_alt[panel.t == 2] == panel.y[panel.t == 1].mean())


def test_determinism():
    spec = sim.ScenarioSpec(2, seed=99)
    a = sim.gen_scenario(spec, 5)
    b = sim.gen_scenario(spec, 5)
    for name in ("y", "p_hat", "p_hat_alt", "p_true"):
        assert_array_equal(getattr(a, name), getattr(b, name))
    assert sim.run_scenario_once(spec, 5) == sim.run_scenario_once(spec, 5)


def test_streams_differ_by_run_and_seed():
    base = sim.gen_scenario(sim.ScenarioSpec(3, seed=1), 0).y
    assert not np.array_equal(base, sim.gen_scenario(sim.ScenarioSpec(3, seed=1), 1).y)
    assert not np.array_equal(base, sim.gen_scenario(sim.ScenarioSpec(3, seed=2), 0).y)


def test_summary_independent_of_workers():
    spec = sim.ScenarioSpec(4, seed=3, runs=12)
    a = sim.run_monte_carlo(spec, workers=1)
    b = sim.run_monte_carlo(spec, workers=3)
    assert a.to_dict() == b.to_dict()
    assert_array_equal(a.statistics, b.statistics)


def test_summary_shape():
    s = sim.run_monte_carlo(sim.ScenarioSpec(4, seed=3, runs=20), workers=1)
    r = s.ratio
    assert r["min"] <= r["q1"] <= r["median"] <= r["q3"] <= r["max"]
    assert len(s.statistics) == 20
    assert np.all(np.diff(s.statistics) >= 0)
    assert len(s.coverage) == 5
    assert set(s.table3) == {f"{n}({j})" for n in ("p_bar", "y_bar", "v", "v_hat")
                             for j in range(1, 6)}
    assert s.table2_row()["statistic"] == "s_hat/s"


def test_scenario1_summary_fields():
    s = sim.run_monte_carlo(sim.ScenarioSpec(1, runs=5), workers=1)
    assert s.ratio_name == "beta_hat/beta"
    assert s.coverage is None and s.table3 is None


def test_estimator_error_records_run(monkeypatch):
    def boom(*args, **kwargs):
        raise CellTooSmallError((1, "1"), 1, 2)

    monkeypatch.setattr(sim.buckets, "s_hat_sq", boom)
    with pytest.raises(CellTooSmallError) as exc:
        sim.run_monte_carlo(sim.ScenarioSpec(2, runs=3), workers=1)
    assert exc.value.run_index == 0
    assert "run 0" in str(exc.value)


def test_five_number_type7():
    d = sim.five_number([1, 2, 3, 4])
    assert (d["q1"], d["median"], d["q3"]) == (1.75, 2.5, 3.25)
    assert d["mean"] == 2.5


def test_qq_two_points():
    pts = sim.qq_data([3.0, -1.0])
    assert pts[0][0] == pytest.approx(norm.ppf(0.25), abs=1e-12)
    assert pts[1][0] == pytest.approx(norm.ppf(0.75), abs=1e-12)
    assert [b for _, b in pts] == [-1.0, 3.0]


def test_qq_on_diagonal():
    m = 50
    x = norm.ppf((np.arange(m) + 0.5) / m)
    for a, b in sim.qq_data(x[::-1]):
        assert a == pytest.approx(b, abs=1e-9)


def test_qq_needs_two():
    with pytest.raises(ValueError):
        sim.qq_data([1.0])


def test_env_threads(monkeypatch):
    monkeypatch.delenv("FORECASTVAL_THREADS", raising=False)
    assert sim._default_workers() == 1
    monkeypatch.setenv("FORECASTVAL_THREADS", "3")
    assert sim._default_workers() == 3
    monkeypatch.setenv("FORECASTVAL_THREADS", "0")
    assert sim._default_workers() >= 1


def test_gaussian_panel():
    panel, target = sim.gen_gaussian_buckets(0, 0, sizes=(10, 10))
    assert panel.mode == "general"
    assert panel.n == 40
    assert np.isfinite(target)
