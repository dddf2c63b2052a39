import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landmcda.classify import (BOUNDARY_RULE, class_areas, class_of, classify_raster,
                               evaluate_breaks, gvf, jenks_breaks, priority_legend)
from landmcda.errors import ValidationError
from landmcda.geodata import GridHeader, NumericRaster

from jenks_oracle import brute_force_breaks


def raster(values, nodata=-9999.0, cellsize=100.0):
    values = np.asarray(values, dtype=float)
    return NumericRaster(GridHeader(values.shape[1], values.shape[0], 0, 0, cellsize, nodata), values)


def test_separable_clusters():
    res = jenks_breaks([1, 1, 1, 10, 10, 10], 2)
    assert res.breaks == (1.0,)
    assert res.sdcm == 0.0 and res.gvf == 1.0


def test_single_class():
    v = [3.0, 1.0, 4.0, 1.5, 9.0]
    res = jenks_breaks(v, 1)
    assert res.breaks == ()
    assert res.sdcm == res.sdam and res.gvf == 0.0
    assert gvf(v, []) == 0.0


def test_every_value_its_own_class():
    v = [5.0, 1.0, 3.0, 2.0]
    res = jenks_breaks(v, 4)
    assert res.breaks == (1.0, 2.0, 3.0) and res.gvf == 1.0
    assert gvf(v, [1.0, 2.0, 3.0]) == 1.0


def test_constant_data_gvf_is_one():
    assert jenks_breaks([2.0, 2.0, 2.0], 1).gvf == 1.0


def test_errors():
    with pytest.raises(ValidationError):
        jenks_breaks([], 1)
    with pytest.raises(ValidationError):
        jenks_breaks([1.0, 1.0, 2.0], 3)
    with pytest.raises(ValidationError):
        jenks_breaks([1.0, 2.0], 0)
    with pytest.raises(ValidationError):
        gvf([1.0, 2.0], [2.0, 1.0])


def test_nonfinite_values_ignored():
    assert jenks_breaks([1, 1, np.nan, 10, 10, np.inf], 2).breaks == (1.0,)


def test_random_12_values_k3_matches_enumeration():
    v = np.random.default_rng(0).uniform(0, 1, 12)
    exact, breaks = brute_force_breaks(v, 3)
    res = jenks_breaks(v, 3)
    assert res.breaks == breaks
    assert res.sdcm == pytest.approx(float(exact), rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=10), st.integers(1, 4))
def test_integer_data_with_ties_matches_enumeration(values, k):
    if k > len(set(values)):
        return
    exact, breaks = brute_force_breaks(values, k)
    res = jenks_breaks(values, k)
    assert res.breaks == breaks
    # same partition, and the recomputed SDCM is exact for small integers
    assert res.sdcm == evaluate_breaks(values, breaks).sdcm
    assert res.sdcm == pytest.approx(float(exact), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=10), st.integers(-1000, 1000))
def test_shift_moves_breaks_and_keeps_gvf(values, c):
    k = min(3, len(set(values)))
    a = jenks_breaks(values, k)
    b = jenks_breaks([v + c for v in values], k)
    assert b.breaks == tuple(x + c for x in a.breaks)
    assert b.gvf == pytest.approx(a.gvf, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=5, max_size=40))
def test_gvf_non_decreasing_in_k(values):
    fits = [jenks_breaks(values, k).gvf for k in range(1, min(5, len(set(values))) + 1)]
    assert all(b >= a - 1e-12 for a, b in zip(fits, fits[1:]))
    assert all(0.0 <= f <= 1.0 for f in fits)


def test_breaks_result_invariants():
    v = np.random.default_rng(4).normal(size=200)
    res = jenks_breaks(v, 4)
    assert len(res.breaks) == 3 and list(res.breaks) == sorted(set(res.breaks))
    assert 0 <= res.sdcm <= res.sdam
    assert res.gvf == pytest.approx(1 - res.sdcm / res.sdam, abs=1e-15)
    assert res.lower == v.min() and res.upper == v.max()
    assert set(res.to_json()) == {"k", "breaks", "sdam", "sdcm", "gvf", "min", "max"}


# -- classification ----------------------------------------------------------

def test_right_closed_boundaries():
    assert class_of([0.39, 0.3900001, 0.44, 0.4400001], (0.39, 0.44)).tolist() == [0, 1, 1, 2]
    assert "right-closed" in BOUNDARY_RULE


def test_published_priority_ranges():
    values = [[0.36, 0.38, 0.39, 0.40], [0.43, 0.44, 0.45, 0.49]]
    pr = classify_raster(raster(values), (0.39, 0.44))
    assert pr.codes.tolist() == [[3, 3, 3, 2], [2, 2, 1, 1]]
    assert pr.legend[1] == "First Priority" and pr.legend[3] == "Third Priority"


def test_ascending_order():
    pr = classify_raster(raster([[0.1, 0.5, 0.9]]), (0.3, 0.6), order="ascending")
    assert pr.codes.tolist() == [[1, 2, 3]]
    with pytest.raises(ValidationError):
        classify_raster(raster([[0.1]]), (0.3,), order="sideways")


def test_constant_raster_one_class():
    r = raster(np.full((3, 3), 0.42))
    res = jenks_breaks(r.valid_values(), 1)
    pr = classify_raster(r, res)
    assert np.all(pr.codes == 1)


def test_nodata_preserved_and_remapped_on_collision():
    pr = classify_raster(raster([[0.2, -9999.0]]), (0.5,))
    assert pr.missing.tolist() == [[False, True]]
    # a nodata value of 2 would collide with a class code
    pr = classify_raster(raster([[0.2, 2.0, 0.9]], nodata=2.0), (0.5,))
    assert pr.header.nodata_value == -9999
    assert pr.codes.tolist() == [[2, -9999, 1]]


def test_random_raster_counts_match_thresholding():
    rng = np.random.default_rng(5)
    values = rng.uniform(0, 1, (25, 25))
    values[rng.random((25, 25)) < 0.05] = -9999.0
    r = raster(values, cellsize=30.0)
    res = jenks_breaks(r.valid_values(), 4)
    pr = classify_raster(r, res)
    b = res.breaks
    for code in range(1, 5):
        lo = b[3 - code] if code < 4 else -np.inf   # code 1 is the top interval
        hi = b[4 - code] if code > 1 else np.inf
        expect = int(np.sum(~r.missing & (values > lo) & (values <= hi)))
        assert int(np.sum(pr.codes == code)) == expect
        area = class_areas(pr)[priority_legend(4)[code]]
        assert area["cells"] == expect and area["hectares"] == pytest.approx(expect * 0.09)
    # total function: every valid cell gets exactly one class
    assert int(np.sum(pr.codes > 0)) == int(np.sum(~r.missing))


def test_priority_legend_labels():
    assert priority_legend(3).labels == ["First Priority", "Second Priority", "Third Priority"]
    assert priority_legend(12)[12] == "Priority 12"


def test_evaluate_fixed_breaks():
    res = evaluate_breaks([1, 2, 3, 10, 11, 12], (3,))
    assert res.k == 2 and res.sdcm == 4.0
    assert res.sdam == pytest.approx(np.var([1, 2, 3, 10, 11, 12]) * 6)


def test_desk_scale_raster_is_fast():
    import time
    v = np.random.default_rng(1).uniform(0.36, 0.49, 2500)
    t0 = time.perf_counter()
    res = jenks_breaks(v, 3)
    assert time.perf_counter() - t0 < 30
    assert res.gvf > 0.8
