import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landmcda.config import builtin_path
from landmcda.errors import ValidationError
from landmcda.geodata import CategoricalRaster, GridHeader, Legend
from landmcda.suitability import (GROUP_ORDER, CharacteristicSpec, CropRequirementTable,
                                  LandUnitObservation, SuitClass, area_counts, area_summary,
                                  areas_to_csv, evaluate_unit, evaluate_units,
                                  parse_observations_csv, rate_characteristic, results_to_csv,
                                  subclass_label)

S1, S2, S3, N = SuitClass.S1, SuitClass.S2, SuitClass.S3, SuitClass.N


@pytest.fixture(scope="module")
def corn():
    return CropRequirementTable.from_json(builtin_path("corn_requirements.json").read_text())


@pytest.fixture(scope="module")
def spl(corn):
    obs = parse_observations_csv(builtin_path("corn_observations.csv").read_text(), corn)
    return {o.unit_id: o for o in obs}


def test_class_order():
    assert S1 < S2 < S3 < N
    assert SuitClass.parse(" s3 ") is S3
    with pytest.raises(ValidationError):
        SuitClass.parse("S4")


def test_drainage_hampered_is_s3(corn):
    assert rate_characteristic("Hampered", corn["Soil drainage"]) is S3
    # labels match regardless of case and spacing
    assert rate_characteristic("  hampered ", corn["Soil drainage"]) is S3


def test_base_saturation_30_is_s3(corn):
    assert rate_characteristic(30, corn["Base saturation (%)"]) is S3


def test_unmatched_value_falls_back_to_n(corn):
    assert rate_characteristic(45.0, corn["Annual average temperature (C)"]) is N
    assert rate_characteristic(0.01, corn["K2O"]) is N


def test_unknown_label_is_named(corn):
    with pytest.raises(ValidationError, match="Swampy"):
        rate_characteristic("Swampy", corn["Soil drainage"])


def test_type_mismatch_rejected(corn):
    with pytest.raises(ValidationError):
        rate_characteristic("30", corn["Base saturation (%)"])
    with pytest.raises(ValidationError):
        rate_characteristic(3, corn["Soil drainage"])
    with pytest.raises(ValidationError):
        rate_characteristic(float("nan"), corn["Soil pH"])


def test_intervals_closed_first_match_wins():
    spec = CharacteristicSpec("x", "f", "numeric", {"S1": [[0, 10]], "S2": [[10, 20]], "S3": [[20, None]]})
    assert rate_characteristic(10, spec) is S1
    assert rate_characteristic(20, spec) is S2
    assert rate_characteristic(1e9, spec) is S3
    assert rate_characteristic(-0.001, spec) is N


def test_spec_rejects_bad_rules():
    with pytest.raises(ValidationError, match="overlapping"):
        CharacteristicSpec("x", "f", "numeric", {"S1": [[0, 5], [5, 9]]})
    with pytest.raises(ValidationError):
        CharacteristicSpec("x", "q", "numeric", {"S1": [[0, 5]]})
    with pytest.raises(ValidationError):
        CharacteristicSpec("x", "f", "numeric", {"N": [[0, 5]]})
    with pytest.raises(ValidationError):
        CharacteristicSpec("x", "f", "ordinal", {})


def test_spl1_ratings_and_subclass(corn, spl):
    res = evaluate_unit(spl["SPL 1"], corn)
    r = res.per_characteristic
    assert r["Soil drainage"] is S3
    assert r["Base saturation (%)"] is S3
    assert r["Soil pH"] is S3
    others = {k: v for k, v in r.items() if k not in ("Soil drainage", "Base saturation (%)", "Soil pH")}
    assert all(v <= S2 for v in others.values())
    assert res.overall is S3
    assert res.limiting_groups == ("r", "f")
    assert res.subclass == "S3rf"


def test_all_reference_units(corn, spl):
    subclasses = {r.unit_id: r.subclass for r in evaluate_units(list(spl.values()), corn)}
    # K2O 0.44 in the second unit rates S3, which adds the n group
    assert subclasses == {"SPL 1": "S3rf", "SPL 2": "S3rfn", "SPL 3": "S3rf",
                          "SPL 4": "S3rf", "SPL 5": "S3rf", "SPL 6": "S3rf"}


def test_adding_s3_nutrient_characteristic_gives_s3rfn(corn, spl):
    values = dict(spl["SPL 1"].values)
    values["N-total (%)"] = 0.05           # rated S3, group n
    res = evaluate_unit(LandUnitObservation("synthetic", values), corn)
    assert res.subclass == "S3rfn"
    # brute-force set of groups holding an S3 rating
    groups = {corn[k].group for k, v in res.per_characteristic.items() if v is S3}
    assert "".join(g for g in GROUP_ORDER if g in groups) == "rfn"


def small_table():
    return CropRequirementTable("toy", (
        CharacteristicSpec("temp", "t", "numeric", {"S1": [[20, 26]], "S2": [[18, 30]]}),
        CharacteristicSpec("ph", "f", "numeric", {"S1": [[6, 7]], "S2": [[5, 8]], "S3": [[4, 9]]}),
        CharacteristicSpec("drain", "r", "categorical", {"good": "S1", "poor": "S3"}),
        CharacteristicSpec("flood", "b", "categorical", {"F0": "S1", "F1": "S2", "F3": "N"}),
    ))


def test_all_s1_has_no_suffix():
    res = evaluate_unit(LandUnitObservation("u", {"temp": 22, "ph": 6.5, "drain": "good", "flood": "F0"}),
                        small_table())
    assert res.overall is S1 and res.limiting_groups == () and res.subclass == "S1"


def test_missing_value_rejected():
    with pytest.raises(ValidationError, match="ph"):
        evaluate_unit(LandUnitObservation("u", {"temp": 22, "drain": "good", "flood": "F0"}), small_table())


def test_subclass_label_canonical_order():
    assert subclass_label(S3, "nfr") == "S3rfn"
    assert subclass_label(N, ["b", "t"]) == "Ntb"
    assert subclass_label(S1, ["r"]) == "S1"


unit_values = st.fixed_dictionaries({
    "temp": st.floats(10, 35), "ph": st.floats(3, 10),
    "drain": st.sampled_from(["good", "poor"]), "flood": st.sampled_from(["F0", "F1", "F3"]),
})


@settings(max_examples=200, deadline=None)
@given(unit_values)
def test_invariants_of_result(values):
    table = small_table()
    res = evaluate_unit(LandUnitObservation("u", values), table)
    assert res.overall == max(res.per_characteristic.values())
    expect = {table[k].group for k, v in res.per_characteristic.items() if v == res.overall}
    if res.overall is S1:
        assert res.subclass == "S1"
    else:
        assert set(res.limiting_groups) == expect
        assert res.subclass == res.overall.name + "".join(g for g in GROUP_ORDER if g in expect)


@settings(max_examples=100, deadline=None)
@given(unit_values, st.permutations(range(4)))
def test_permutation_invariance(values, perm):
    table = small_table()
    shuffled = CropRequirementTable("toy", tuple(table.characteristics[i] for i in perm))
    a = evaluate_unit(LandUnitObservation("u", values), table)
    b = evaluate_unit(LandUnitObservation("u", values), shuffled)
    assert a.subclass == b.subclass and a.overall == b.overall


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(list(SuitClass)), min_size=4, max_size=4),
       st.integers(0, 3), st.sampled_from(list(SuitClass)))
def test_monotonicity(classes, which, worse):
    # one categorical characteristic per group; labels are the class names
    groups = "twrf"
    table = CropRequirementTable("m", tuple(
        CharacteristicSpec(f"c{i}", groups[i], "categorical", {c.name: c.name for c in SuitClass})
        for i in range(4)))
    base = {f"c{i}": c.name for i, c in enumerate(classes)}
    worsened = dict(base)
    worsened[f"c{which}"] = max(classes[which], worse).name
    a = evaluate_unit(LandUnitObservation("u", base), table)
    b = evaluate_unit(LandUnitObservation("u", worsened), table)
    assert b.overall >= a.overall


def test_table_json_roundtrip(corn):
    again = CropRequirementTable.from_json(corn.to_json())
    assert again.to_json() == corn.to_json()
    assert corn["Slope"].to_json()["classes"]["< 8 %"] == "S1"


def unit_raster(codes, cellsize=100.0, ids=("A", "B")):
    codes = np.asarray(codes)
    h = GridHeader(codes.shape[1], codes.shape[0], 0.0, 0.0, cellsize, -9999)
    return CategoricalRaster(h, codes, Legend({i + 1: u for i, u in enumerate(ids)}))


def toy_results():
    table = small_table()
    return [evaluate_unit(LandUnitObservation("A", {"temp": 22, "ph": 6.5, "drain": "poor", "flood": "F0"}), table),
            evaluate_unit(LandUnitObservation("B", {"temp": 22, "ph": 6.5, "drain": "good", "flood": "F1"}), table)]


def test_area_one_unit_four_cells():
    res = toy_results()
    assert area_summary(unit_raster([[1, 1], [1, 1]]), res) == {"S3r": 4.0}


def test_area_split_three_to_one():
    res = toy_results()
    areas = area_summary(unit_raster([[1, 1], [1, 2], [-9999, -9999]]), res)
    assert areas == {"S2b": 1.0, "S3r": 3.0}
    assert areas["S3r"] / areas["S2b"] == 3.0


def test_area_unmapped_unit():
    res = toy_results()[:1]
    with pytest.raises(ValidationError, match="B"):
        area_summary(unit_raster([[1, 2]]), res)


def test_area_random_30x30_matches_tally():
    rng = np.random.default_rng(3)
    table = small_table()
    ids = [f"U{i}" for i in range(1, 9)]
    results = []
    for uid in ids:
        values = {"temp": float(rng.uniform(15, 32)), "ph": float(rng.uniform(3.5, 9.5)),
                  "drain": str(rng.choice(["good", "poor"])), "flood": str(rng.choice(["F0", "F1", "F3"]))}
        results.append(evaluate_unit(LandUnitObservation(uid, values), table))
    codes = rng.integers(0, 9, (30, 30))
    codes[codes == 0] = -9999
    raster = unit_raster(codes, cellsize=30.0, ids=ids)
    tally = {}
    by_id = {r.unit_id: r.subclass for r in results}
    for c in codes.ravel():
        if c != -9999:
            sub = by_id[ids[c - 1]]
            tally[sub] = tally.get(sub, 0) + 1
    assert area_counts(raster, results) == tally
    areas = area_summary(raster, results)
    assert sum(areas.values()) == pytest.approx(np.sum(codes != -9999) * 900 / 1e4, rel=1e-12)


def test_csv_io(corn, spl):
    results = evaluate_units(list(spl.values()), corn)
    text = results_to_csv(results)
    assert text.splitlines()[0] == "unit_id,subclass"
    assert text.splitlines()[1] == "SPL 1,S3rf"
    assert areas_to_csv({"S3rf": 2303.3}) == "subclass,hectares\nS3rf,2303.3000\n"
    with pytest.raises(ValidationError):
        parse_observations_csv("", corn)
    with pytest.raises(ValidationError):
        parse_observations_csv("unit_id,temp\n", small_table())
    header = "unit_id,temp,ph,drain,flood\n"
    with pytest.raises(ValidationError, match="no units"):
        parse_observations_csv(header, small_table())
    with pytest.raises(ValidationError, match="line 2"):
        parse_observations_csv(header + "u,abc,6,good,F0\n", small_table())


def test_units_sorted_naturally_and_unique():
    table = small_table()
    vals = {"temp": 22, "ph": 6.5, "drain": "good", "flood": "F0"}
    obs = [LandUnitObservation(u, vals) for u in ("SPL 10", "SPL 2", "SPL 1")]
    assert [r.unit_id for r in evaluate_units(obs, table)] == ["SPL 1", "SPL 2", "SPL 10"]
    with pytest.raises(ValidationError):
        evaluate_units(obs + obs[:1], table)


def test_exhaustive_small_grid():
    # every combination of four class ratings, against brute force
    table = CropRequirementTable("m", tuple(
        CharacteristicSpec(f"c{i}", g, "categorical", {c.name: c.name for c in SuitClass})
        for i, g in enumerate("rfnb")))
    for combo in itertools.product(list(SuitClass), repeat=4):
        res = evaluate_unit(LandUnitObservation("u", {f"c{i}": c.name for i, c in enumerate(combo)}), table)
        worst = max(combo)
        letters = "".join(g for g, c in zip("rfnb", combo) if c == worst)
        assert res.subclass == ("S1" if worst is S1 else worst.name + letters)
