import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_array_equal

from forecastval.errors import (
    DuplicateKeyError,
    EmptyHistoryError,
    InvalidBinsError,
    MissingFieldError,
    MissingLabelError,
    ParseError,
    ValidationError,
)
from forecastval.panel import (
    Panel,
    assign_bins,
    climatology_from_history,
    load_csv,
    partition_by_bins,
    partition_by_label,
    write_csv,
)
from forecastval.sim import ScenarioSpec, gen_scenario


def _csv(text):
    return io.StringIO(text)


def test_load_small_file():
    panel = load_csv(_csv("t,k,y,p_hat\n1,0,1,0.7\n1,1,0,0.2\n2,0,0,0.4\n2,1,1,0.9\n"))
    assert panel.n == 4
    assert panel.T == 2
    assert_array_equal(panel.y, [1, 0, 0, 1])


def test_rows_sorted_and_k_assigned():
    panel = load_csv(_csv("t,y,p_hat\n2,1,0.1\n1,0,0.2\n2,0,0.3\n1,1,0.4\n"))
    assert_array_equal(panel.t, [1, 1, 2, 2])
    assert_array_equal(panel.k, [0, 1, 0, 1])
    assert_array_equal(panel.p_hat, [0.2, 0.4, 0.1, 0.3])


def test_out_of_range_probability_names_row():
    with pytest.raises(ValidationError) as exc:
        load_csv(_csv("t,k,y,p_hat\n1,0,1,0.5\n1,1,0,1.3\n"))
    assert exc.value.row == 3


def test_non_binary_outcome():
    with pytest.raises(ValidationError):
        load_csv(_csv("t,k,y,p_hat\n1,0,0.5,0.5\n"))


def test_general_mode_allows_real_outcomes():
    panel = load_csv(_csv("t,k,y,p_hat\n1,0,2.5,3.0\n"), mode="general")
    assert panel.y[0] == 2.5


def test_duplicate_key():
    with pytest.raises(DuplicateKeyError):
        load_csv(_csv("t,k,y,p_hat\n1,0,1,0.5\n1,0,0,0.5\n"))


def test_parse_error_row():
    with pytest.raises(ParseError) as exc:
        load_csv(_csv("t,k,y,p_hat\n1,0,1,abc\n"))
    assert "row 2" in str(exc.value)


def test_missing_required_column():
    with pytest.raises(ParseError):
        load_csv(_csv("t,k,p_hat\n1,0,0.5\n"))


def test_column_map():
    panel = load_csv(_csv("day,outcome,fcst,clim\n1,1,0.6,0.3\n"),
                     {"t": "day", "y": "outcome", "p_hat": "fcst", "p_clim": "clim"})
    assert panel.p_clim[0] == 0.3


def test_empty_optional_is_missing():
    panel = load_csv(_csv("t,k,y,p_hat,p_clim\n1,0,1,0.6,\n1,1,0,0.4,0.2\n"))
    assert not panel.has("p_clim")
    with pytest.raises(MissingFieldError):
        panel.field("p_clim")


def test_panel_is_read_only():
    panel = Panel(t=[1], y=[1], p_hat=[0.5])
    with pytest.raises(ValueError):
        panel.y[0] = 0.0


def test_records_round_trip():
    panel = Panel(t=[1, 1], y=[1, 0], p_hat=[0.5, 0.25], bucket=["a", None])
    again = Panel.from_records(panel.records)
    assert_array_equal(again.p_hat, panel.p_hat)
    assert list(again.bucket) == ["a", None]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.sampled_from([0.0, 1.0]),
                          st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False)),
                min_size=1, max_size=20))
def test_csv_round_trip_bit_exact(rows):
    t, y, q, c = zip(*rows)
    panel = Panel(t=t, y=y, p_hat=q, p_clim=c, bucket=[f"b{i % 3}" for i in range(len(t))])
    again = load_csv(_csv(write_csv(panel)))
    for name in ("t", "k", "y", "p_hat", "p_clim"):
        assert_array_equal(getattr(again, name), getattr(panel, name))
    assert list(again.bucket) == list(panel.bucket)


def test_partition_by_label_two_cells():
    panel = Panel(t=[1] * 6, y=[1, 0, 1, 0, 0, 1], p_hat=[0.5] * 6,
                  bucket=list("aaabbb"))
    part = partition_by_label(panel)
    assert part.keys == ((1, "a"), (1, "b"))
    assert_array_equal(part.sizes, [3, 3])
    assert part.min_size == 3
    assert part.n == 6


def test_partition_missing_label():
    panel = Panel(t=[1, 1], y=[1, 0], p_hat=[0.5, 0.5], bucket=["a", None])
    with pytest.raises(MissingLabelError) as exc:
        partition_by_label(panel)
    assert exc.value.keys == [(1, 1)]


def test_scenario1_partition():
    part = partition_by_label(gen_scenario(ScenarioSpec(1), 0))
    assert len(part.keys) == 20
    assert set(part.sizes.tolist()) == {15}


def test_bins_scenario4_five_per_period():
    panel = gen_scenario(ScenarioSpec(4), 0)
    part = partition_by_bins(panel, np.arange(6) / 5)
    assert part.n == panel.n
    assert {t for t, _ in part.keys} == {1, 2}
    assert all(0 <= j < 5 for _, j in part.keys)


def test_forecast_one_goes_to_last_bin():
    assert assign_bins(np.array([0.0, 0.2, 0.999, 1.0]), np.arange(6) / 5).tolist() == [0, 1, 4, 4]


def test_single_bin():
    panel = Panel(t=[1, 1, 2], y=[1, 0, 1], p_hat=[0.1, 0.9, 0.5])
    part = partition_by_bins(panel, [0.0, 1.0])
    assert part.keys == ((1, 0), (2, 0))


@pytest.mark.parametrize("edges", [[0, 0.5], [0.1, 1], [0, 0.5, 0.5, 1], [1]])
def test_invalid_bins(edges):
    panel = Panel(t=[1], y=[1], p_hat=[0.5])
    with pytest.raises(InvalidBinsError):
        partition_by_bins(panel, edges)


def test_bins_ignore_outcomes():
    panel = Panel(t=[1, 1, 1], y=[1, 0, 1], p_hat=[0.1, 0.5, 0.9])
    a = partition_by_bins(panel, [0, 0.5, 1])
    b = partition_by_bins(panel.with_outcomes([0, 1, 0]), [0, 0.5, 1])
    assert a.keys == b.keys
    assert_array_equal(a.order, b.order)


@pytest.mark.parametrize("history, expected", [
    ([1, 0, 1, 0], 0.5), ([0, 0, 0], 0.0), ([1] * 73 + [0] * 292, 0.2),
])
def test_climatology(history, expected):
    assert climatology_from_history(history) == pytest.approx(expected, abs=1e-15)


def test_climatology_empty():
    with pytest.raises(EmptyHistoryError):
        climatology_from_history([])


def test_empty_period_not_counted():
    panel = Panel(t=[1, 3], y=[1, 0], p_hat=[0.5, 0.5])
    assert panel.T == 2
