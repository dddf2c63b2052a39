"""Land suitability matching by the maximum-limitation method.

Each land characteristic is rated S1/S2/S3/N against a crop requirement
table; a unit's overall class is its worst rating and the subclass suffix
lists the limiting-factor groups that reach that class, e.g. ``S3rf``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import re
from dataclasses import dataclass
from numbers import Real
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .geodata import CategoricalRaster

# t temperature, w water, r rooting medium, f nutrient retention,
# n available nutrients, e erosion hazard, b flood hazard
GROUP_ORDER = "twrfneb"


class SuitClass(enum.IntEnum):
    S1 = 1
    S2 = 2
    S3 = 3
    N = 4

    @classmethod
    def parse(cls, text: str) -> SuitClass:
        try:
            return cls[str(text).strip().upper()]
        except KeyError:
            raise ValidationError(f"unknown suitability class {text!r}") from None


def _norm_label(label: str) -> str:
    return " ".join(str(label).split()).casefold()


@dataclass(frozen=True)
class CharacteristicSpec:
    """Rating rules for one land characteristic.

    ``rules`` maps S1/S2/S3 to closed intervals for numeric characteristics
    and maps labels to classes for categorical ones.  Numeric values that fit
    no interval rate N.
    """

    name: str
    group: str
    kind: str
    rules: Mapping

    def __post_init__(self):
        if self.group not in GROUP_ORDER or len(self.group) != 1:
            raise ValidationError(
                f"{self.name}: group must be one of {', '.join(GROUP_ORDER)}, got {self.group!r}")
        if self.kind == "numeric":
            rules = {}
            for cls, intervals in dict(self.rules).items():
                cls = cls if isinstance(cls, SuitClass) else SuitClass.parse(cls)
                if cls is SuitClass.N:
                    raise ValidationError(f"{self.name}: N is the fallback and takes no interval")
                clean = []
                for lo, hi in intervals:
                    lo = -math.inf if lo is None else float(lo)
                    hi = math.inf if hi is None else float(hi)
                    if lo > hi:
                        raise ValidationError(f"{self.name}: empty interval [{lo}, {hi}]")
                    clean.append((lo, hi))
                clean.sort()
                for (_, hi_a), (lo_b, _) in zip(clean, clean[1:]):
                    if lo_b <= hi_a:
                        raise ValidationError(
                            f"{self.name}: overlapping {cls.name} intervals")
                rules[cls] = tuple(clean)
            object.__setattr__(self, "rules", dict(sorted(rules.items())))
        elif self.kind == "categorical":
            rules, lookup = {}, {}
            for label, cls in dict(self.rules).items():
                key = _norm_label(label)
                if key in lookup:
                    raise ValidationError(f"{self.name}: duplicate label {label!r}")
                cls = cls if isinstance(cls, SuitClass) else SuitClass.parse(cls)
                rules[str(label)] = lookup[key] = cls
            if not rules:
                raise ValidationError(f"{self.name}: categorical rules are empty")
            object.__setattr__(self, "rules", rules)
            object.__setattr__(self, "_lookup", lookup)
        else:
            raise ValidationError(f"{self.name}: kind must be numeric or categorical")

    def to_json(self) -> dict:
        if self.kind == "numeric":
            classes = {
                cls.name: [[None if math.isinf(lo) else lo, None if math.isinf(hi) else hi]
                           for lo, hi in intervals]
                for cls, intervals in self.rules.items()}
        else:
            classes = {label: cls.name for label, cls in self.rules.items()}
        return {"name": self.name, "group": self.group, "kind": self.kind, "classes": classes}


@dataclass(frozen=True)
class CropRequirementTable:
    crop: str
    characteristics: tuple[CharacteristicSpec, ...]

    def __post_init__(self):
        chars = tuple(self.characteristics)
        if not chars:
            raise ValidationError("crop requirement table has no characteristics")
        names = [c.name for c in chars]
        if len(set(names)) != len(names):
            raise ValidationError("characteristic names must be unique")
        object.__setattr__(self, "characteristics", chars)

    def __getitem__(self, name):
        for spec in self.characteristics:
            if spec.name == name:
                return spec
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.characteristics]

    @classmethod
    def from_json(cls, doc) -> CropRequirementTable:
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            chars = tuple(
                CharacteristicSpec(item["name"], item["group"], item["kind"], item["classes"])
                for item in doc["characteristics"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed crop requirement table: {exc}") from exc
        return cls(doc.get("crop", ""), chars)

    def to_json(self) -> dict:
        return {"crop": self.crop,
                "characteristics": [c.to_json() for c in self.characteristics]}


@dataclass(frozen=True)
class LandUnitObservation:
    unit_id: str
    values: Mapping[str, object]


@dataclass(frozen=True)
class SuitabilityResult:
    unit_id: str
    per_characteristic: Mapping[str, SuitClass]
    overall: SuitClass
    limiting_groups: tuple[str, ...]

    @property
    def subclass(self) -> str:
        return subclass_label(self.overall, self.limiting_groups)


def subclass_label(overall: SuitClass, groups) -> str:
    if overall is SuitClass.S1:
        return "S1"
    return overall.name + "".join(g for g in GROUP_ORDER if g in set(groups))


def rate_characteristic(value, spec: CharacteristicSpec) -> SuitClass:
    if spec.kind == "numeric":
        if isinstance(value, bool) or not isinstance(value, (Real, np.floating, np.integer)):
            raise ValidationError(f"{spec.name}: expected a number, got {value!r}")
        value = float(value)
        if math.isnan(value):
            raise ValidationError(f"{spec.name}: value is NaN")
        for cls in (SuitClass.S1, SuitClass.S2, SuitClass.S3):
            for lo, hi in spec.rules.get(cls, ()):
                if lo <= value <= hi:
                    return cls
        return SuitClass.N
    if not isinstance(value, str):
        raise ValidationError(f"{spec.name}: expected a class label, got {value!r}")
    try:
        return spec._lookup[_norm_label(value)]
    except KeyError:
        raise ValidationError(f"{spec.name}: unknown label {value!r}") from None


def evaluate_unit(obs: LandUnitObservation, table: CropRequirementTable) -> SuitabilityResult:
    ratings = {}
    for spec in table.characteristics:
        if spec.name not in obs.values:
            raise ValidationError(f"unit {obs.unit_id!r} has no value for {spec.name!r}")
        ratings[spec.name] = rate_characteristic(obs.values[spec.name], spec)
    overall = max(ratings.values())
    limiting = ()
    if overall is not SuitClass.S1:
        hit = {table[name].group for name, cls in ratings.items() if cls is overall}
        limiting = tuple(g for g in GROUP_ORDER if g in hit)
    return SuitabilityResult(obs.unit_id, ratings, overall, limiting)


def _natural_key(text):
    return [int(part) if part.isdigit() else part.casefold()
            for part in re.split(r"(\d+)", text)]


def evaluate_units(observations: Sequence[LandUnitObservation],
                   table: CropRequirementTable) -> list[SuitabilityResult]:
    """Evaluate every unit; results are ordered by unit id (natural order)."""
    ids = [o.unit_id for o in observations]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate unit ids in observations")
    results = [evaluate_unit(o, table) for o in observations]
    return sorted(results, key=lambda r: _natural_key(r.unit_id))


def area_counts(units: CategoricalRaster,
                results: Sequence[SuitabilityResult]) -> dict[str, int]:
    by_unit = {r.unit_id: r.subclass for r in results}
    counts: dict[str, int] = {}
    for label, n in units.label_counts().items():
        if n == 0:
            continue
        if label not in by_unit:
            raise ValidationError(f"raster unit {label!r} has no suitability result")
        sub = by_unit[label]
        counts[sub] = counts.get(sub, 0) + n
    return dict(sorted(counts.items(), key=lambda kv: _subclass_key(kv[0])))


def _subclass_key(subclass):
    head = subclass[:2] if subclass.startswith("S") else "N"
    return (SuitClass[head], subclass)


def area_summary(units: CategoricalRaster,
                 results: Sequence[SuitabilityResult]) -> dict[str, float]:
    """Hectares per subclass; cellsize is taken to be in metres."""
    cell_ha = units.header.cell_area / 10_000.0
    return {sub: n * cell_ha for sub, n in area_counts(units, results).items()}


# -- tabular I/O ------------------------------------------------------------

def parse_observations_csv(text: str, table: CropRequirementTable) -> list[LandUnitObservation]:
    """Read a CSV with a ``unit_id`` column plus one column per characteristic."""
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames or reader.fieldnames[0].strip() != "unit_id":
        raise ValidationError("observation CSV must start with a 'unit_id' column")
    fields = [f.strip() for f in reader.fieldnames]
    missing = [n for n in table.names if n not in fields]
    if missing:
        raise ValidationError(f"observation CSV lacks columns {missing}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        row = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
        values = {}
        for spec in table.characteristics:
            raw = row[spec.name]
            if spec.kind == "numeric":
                try:
                    values[spec.name] = float(raw)
                except ValueError:
                    raise ValidationError(
                        f"observations line {lineno}: {spec.name} is not a number: {raw!r}") from None
            else:
                values[spec.name] = raw
        out.append(LandUnitObservation(row["unit_id"], values))
    if not out:
        raise ValidationError("observation CSV has no units")
    return out


def results_to_csv(results: Sequence[SuitabilityResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["unit_id", "subclass"])
    for r in results:
        writer.writerow([r.unit_id, r.subclass])
    return buf.getvalue()


def areas_to_csv(areas: Mapping[str, float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subclass", "hectares"])
    for sub, ha in areas.items():
        writer.writerow([sub, f"{ha:.4f}"])
    return buf.getvalue()
