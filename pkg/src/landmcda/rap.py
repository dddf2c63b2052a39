"""Rapid-appraisal sustainability index by ordination (RAPFISH style).

Objects are scored on ordinal attributes of one dimension.  GOOD and BAD
reference rows (plus optional midpoint anchors) are appended, scores are
normalized to [0, 1], and the Euclidean distances are ordinated in 2-D with
SMACOF.  The configuration is then rotated, reflected, translated and scaled
so that BAD sits at (0, 0) and GOOD at (100, 0); an object's index is its
x-coordinate.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateOrdinationError, ValidationError
from .mds import pairwise_distances, smacof_mds, squared_correlation

GOOD, BAD, MID_LOW, MID_HIGH = "GOOD", "BAD", "MID_LOW", "MID_HIGH"
REFERENCE_IDS = (GOOD, BAD, MID_LOW, MID_HIGH)


@dataclass(frozen=True)
class Attribute:
    name: str
    scale_min: int
    scale_max: int
    good_direction: str = "high"

    def __post_init__(self):
        for bound in (self.scale_min, self.scale_max):
            if isinstance(bound, bool) or int(bound) != bound:
                raise ValidationError(f"{self.name}: scale bounds must be integers")
        if not self.scale_min < self.scale_max:
            raise ValidationError(
                f"{self.name}: degenerate scale {self.scale_min}..{self.scale_max}")
        if self.good_direction not in ("high", "low"):
            raise ValidationError(f"{self.name}: good_direction must be 'high' or 'low'")
        object.__setattr__(self, "scale_min", int(self.scale_min))
        object.__setattr__(self, "scale_max", int(self.scale_max))

    @property
    def best(self) -> int:
        return self.scale_max if self.good_direction == "high" else self.scale_min

    @property
    def worst(self) -> int:
        return self.scale_min if self.good_direction == "high" else self.scale_max


@dataclass(frozen=True)
class AttributeSchema:
    dimension: str
    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        attrs = tuple(self.attributes)
        if not attrs:
            raise ValidationError("schema has no attributes")
        names = [a.name for a in attrs]
        if len(set(names)) != len(names):
            raise ValidationError(f"attribute names repeat within {self.dimension!r}")
        object.__setattr__(self, "attributes", attrs)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def without(self, name: str) -> AttributeSchema:
        return AttributeSchema(self.dimension, tuple(a for a in self.attributes if a.name != name))

    @classmethod
    def from_json(cls, doc) -> AttributeSchema:
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            attrs = tuple(Attribute(a["name"], a["scale_min"], a["scale_max"],
                                    a.get("good_direction", "high"))
                          for a in doc["attributes"])
            return cls(doc["dimension"], attrs)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed attribute schema: {exc}") from exc


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Integer scores, one row per object; reference rows are flagged synthetic."""

    schema: AttributeSchema
    ids: tuple[str, ...]
    scores: np.ndarray
    synthetic: tuple[bool, ...] = None

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        scores = np.asarray(self.scores)
        if scores.ndim != 2 or scores.shape != (len(ids), len(self.schema.attributes)):
            raise ValidationError(
                f"score matrix shape {scores.shape} does not match "
                f"{len(ids)} objects x {len(self.schema.attributes)} attributes")
        if scores.dtype.kind == "f":
            if not np.all(scores == np.round(scores)):
                raise ValidationError("scores must be integers")
        scores = scores.astype(np.int64)
        for j, attr in enumerate(self.schema.attributes):
            col = scores[:, j]
            bad = np.flatnonzero((col < attr.scale_min) | (col > attr.scale_max))
            if bad.size:
                raise ValidationError(
                    f"{ids[bad[0]]}: score {col[bad[0]]} for {attr.name!r} "
                    f"outside {attr.scale_min}..{attr.scale_max}")
        if len(set(ids)) != len(ids):
            raise ValidationError("object ids must be unique")
        synthetic = self.synthetic
        if synthetic is None:
            synthetic = tuple(False for _ in ids)
        if len(synthetic) != len(ids):
            raise ValidationError("synthetic flags do not match row count")
        scores.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "synthetic", tuple(bool(s) for s in synthetic))

    @property
    def real_ids(self) -> list[str]:
        return [i for i, s in zip(self.ids, self.synthetic) if not s]

    @property
    def real_scores(self) -> np.ndarray:
        return self.scores[[not s for s in self.synthetic]]

    def row(self, object_id: str) -> int:
        return self.ids.index(object_id)

    def without_attribute(self, name: str) -> ScoreMatrix:
        j = self.schema.names.index(name)
        return ScoreMatrix(self.schema.without(name), self.ids,
                           np.delete(self.scores, j, axis=1), self.synthetic)

    def with_real_scores(self, real_scores) -> ScoreMatrix:
        scores = np.array(self.scores)
        scores[[not s for s in self.synthetic]] = real_scores
        return ScoreMatrix(self.schema, self.ids, scores, self.synthetic)


class SustainabilityCategory(enum.IntEnum):
    NOT_SUSTAINABLE = 0
    LESS_SUSTAINABLE = 1
    QUITE_SUSTAINABLE = 2
    VERY_SUSTAINABLE = 3

    @property
    def label(self) -> str:
        return self.name.replace("_", " ").title()


def categorize(index: float) -> SustainabilityCategory:
    """Index (percent) to status; upper bounds 25/50/75 are closed."""
    if index <= 25.0:
        return SustainabilityCategory.NOT_SUSTAINABLE
    if index <= 50.0:
        return SustainabilityCategory.LESS_SUSTAINABLE
    if index <= 75.0:
        return SustainabilityCategory.QUITE_SUSTAINABLE
    return SustainabilityCategory.VERY_SUSTAINABLE


@dataclass(frozen=True)
class RapParams:
    max_iter: int = 500
    tol: float = 1e-8
    seed: int = 0
    anchors: bool = True


@dataclass(frozen=True, eq=False)
class OrdinationResult:
    ids: tuple[str, ...]
    coordinates: np.ndarray
    stress: float
    rsq: float
    index: dict
    n_iter: int
    stress_history: tuple[float, ...]
    out_of_range: tuple[str, ...] = field(default=())
    init: str = "classical"

    @property
    def reference_index(self) -> dict:
        return {i: float(self.coordinates[k, 0]) for k, i in enumerate(self.ids)
                if i in REFERENCE_IDS}

    @property
    def mean_index(self) -> float:
        return float(np.mean(list(self.index.values())))


def add_reference_rows(matrix: ScoreMatrix, anchors: bool = True) -> ScoreMatrix:
    """Append GOOD, BAD and (optionally) the MID_LOW/MID_HIGH anchors."""
    real = [not s for s in matrix.synthetic]
    if not any(real):
        raise ValidationError("score matrix has no real objects")
    if any(i in REFERENCE_IDS for i in matrix.ids):
        raise ValidationError("score matrix already contains reference rows")
    attrs = matrix.schema.attributes
    rows = [[a.best for a in attrs], [a.worst for a in attrs]]
    ids = [GOOD, BAD]
    if anchors:
        rows.append([(a.scale_min + a.scale_max) // 2 for a in attrs])
        rows.append([-((-(a.scale_min + a.scale_max)) // 2) for a in attrs])
        ids += [MID_LOW, MID_HIGH]
    scores = np.vstack([matrix.scores, np.array(rows, dtype=np.int64)])
    return ScoreMatrix(matrix.schema, matrix.ids + tuple(ids), scores,
                       matrix.synthetic + tuple(True for _ in ids))


def normalize_scores(matrix: ScoreMatrix) -> np.ndarray:
    """Map every attribute affinely onto [0, 1] with 1 at the good end."""
    if GOOD not in matrix.ids or BAD not in matrix.ids:
        raise ValidationError("reference rows are missing; call add_reference_rows first")
    lo = np.array([a.scale_min for a in matrix.schema.attributes], dtype=np.float64)
    hi = np.array([a.scale_max for a in matrix.schema.attributes], dtype=np.float64)
    norm = (matrix.scores - lo) / (hi - lo)
    low_good = np.array([a.good_direction == "low" for a in matrix.schema.attributes])
    norm[:, low_good] = 1.0 - norm[:, low_good]
    return norm


def align_to_axis(coords, good_row: int, bad_row: int) -> np.ndarray:
    """Similarity transform putting BAD at (0, 0) and GOOD at (100, 0).

    The remaining reflection is fixed by making the first row with a
    clearly non-zero ordinate positive.
    """
    coords = np.asarray(coords, dtype=np.float64)
    rel = coords - coords[bad_row]
    axis = rel[good_row]
    norm2 = axis[0] * axis[0] + axis[1] * axis[1]
    scale = max(1.0, float(np.max(np.abs(coords)))) if coords.size else 1.0
    if not norm2 > (1e-12 * scale) ** 2:
        raise DegenerateOrdinationError("GOOD and BAD coincide in the ordination")
    # same expression for every row, so GOOD maps to exactly 100
    x = 100.0 * ((rel[:, 0] * axis[0] + rel[:, 1] * axis[1]) / norm2)
    y = 100.0 * ((rel[:, 1] * axis[0] - rel[:, 0] * axis[1]) / norm2)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(x))))
    off_axis = np.flatnonzero(np.abs(y) > tol)
    if off_axis.size and y[off_axis[0]] < 0:
        y = -y
    y[good_row] = 0.0
    y[bad_row] = 0.0
    # adding 0.0 turns -0.0 into 0.0
    return np.column_stack([x, y]) + 0.0


def _merge_identical(coords, norm):
    """Give rows with identical scores one shared (mean) position.

    They coincide in exact arithmetic; rounding in the transform can leave
    them ~1e-16 apart, which would cost an object equal to GOOD its exact 100.
    """
    _, group = np.unique(norm, axis=0, return_inverse=True)
    group = group.ravel()
    if group.max() + 1 == len(group):
        return coords
    out = np.array(coords)
    for g in np.unique(group):
        members = group == g
        if members.sum() > 1:
            out[members] = coords[members].mean(axis=0)
    return out


def sustainability_index(matrix: ScoreMatrix, params: RapParams = RapParams()) -> OrdinationResult:
    if any(matrix.synthetic):
        raise ValidationError("pass the score matrix without reference rows")
    full = add_reference_rows(matrix, params.anchors)
    norm = normalize_scores(full)
    delta = pairwise_distances(norm)
    good, bad = full.row(GOOD), full.row(BAD)
    mds = smacof_mds(delta, 2, params.max_iter, params.tol, params.seed)
    try:
        aligned = align_to_axis(_merge_identical(mds.coordinates, norm), good, bad)
    except DegenerateOrdinationError:
        # tied eigenvalues can leave GOOD and BAD on top of each other in the
        # classical start, a fixed point SMACOF cannot leave
        mds = smacof_mds(delta, 2, params.max_iter, params.tol, params.seed, init="random")
        aligned = align_to_axis(_merge_identical(mds.coordinates, norm), good, bad)
    index = {i: float(aligned[k, 0]) for k, i in enumerate(full.ids) if not full.synthetic[k]}
    outside = tuple(i for i, v in index.items() if not 0.0 <= v <= 100.0)
    if outside:
        warnings.warn(f"{matrix.schema.dimension}: indices outside [0, 100] for {list(outside)}",
                      stacklevel=2)
    return OrdinationResult(full.ids, aligned, mds.stress1, squared_correlation(mds.coordinates, delta),
                            index, mds.n_iter, mds.history, outside, mds.init)


@dataclass(frozen=True)
class LeverageReport:
    rms: dict

    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.rms.items(), key=lambda kv: (-kv[1], kv[0]))


def leverage(matrix: ScoreMatrix, params: RapParams = RapParams()) -> LeverageReport:
    """RMS change of the real-object indices when each attribute is dropped."""
    names = matrix.schema.names
    if len(names) < 2:
        raise ValidationError("leverage needs at least two attributes")
    full = sustainability_index(matrix, params)
    base = np.array([full.index[i] for i in matrix.ids])
    rms = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in names:
            reduced = sustainability_index(matrix.without_attribute(name), params)
            diff = base - np.array([reduced.index[i] for i in matrix.ids])
            rms[name] = float(np.sqrt(np.mean(diff * diff)))
    return LeverageReport(rms)


@dataclass(frozen=True)
class ObjectStats:
    mean: float
    std: float
    p025: float
    p975: float


@dataclass(frozen=True)
class MonteCarloReport:
    seed: int
    trials: int
    flip_prob: float
    stats: dict
    samples: np.ndarray = field(repr=False, compare=False)


def perturb_scores(matrix: ScoreMatrix, flip_prob: float, rng) -> np.ndarray:
    """Move each real score one step up or down with probability ``flip_prob``."""
    real = matrix.real_scores
    flip = rng.random(real.shape) < flip_prob
    step = np.where(rng.random(real.shape) < 0.5, -1, 1)
    lo = np.array([a.scale_min for a in matrix.schema.attributes])
    hi = np.array([a.scale_max for a in matrix.schema.attributes])
    return np.clip(real + np.where(flip, step, 0), lo, hi)


def monte_carlo(matrix: ScoreMatrix, trials: int, flip_prob: float, seed: int,
                params: RapParams = RapParams()) -> MonteCarloReport:
    """Index robustness under random one-step scoring errors.

    Trial ``t`` draws from a generator seeded with ``(seed, t)``, so trials
    can be run in any order or in parallel with identical results.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    if not 0.0 <= flip_prob <= 1.0:
        raise ValidationError("flip_prob must lie in [0, 1]")
    ids = matrix.real_ids
    samples = np.empty((trials, len(ids)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t in range(trials):
            rng = np.random.default_rng([seed, t])
            perturbed = matrix.with_real_scores(perturb_scores(matrix, flip_prob, rng))
            result = sustainability_index(perturbed, params)
            samples[t] = [result.index[i] for i in ids]
    stats = {}
    for k, i in enumerate(ids):
        col = samples[:, k]
        lo, hi = np.percentile(col, [2.5, 97.5])
        stats[i] = ObjectStats(float(np.mean(col)), float(np.std(col)), float(lo), float(hi))
    samples.flags.writeable = False
    return MonteCarloReport(seed, trials, flip_prob, stats, samples)


# -- tabular I/O ------------------------------------------------------------

def parse_score_csv(text: str, schema: AttributeSchema) -> ScoreMatrix:
    """First column holds the object id, remaining headers name attributes."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise ValidationError("score CSV is empty")
    header = [h.strip() for h in rows[0]]
    attr_cols = header[1:]
    missing = [n for n in schema.names if n not in attr_cols]
    extra = [n for n in attr_cols if n not in schema.names]
    if missing or extra:
        raise ValidationError(f"score CSV columns do not match schema (missing {missing}, extra {extra})")
    order = [attr_cols.index(n) + 1 for n in schema.names]
    ids, scores = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(f"score CSV line {lineno}: expected {len(header)} fields")
        ids.append(row[0].strip())
        try:
            scores.append([int(row[c].strip()) for c in order])
        except ValueError:
            raise ValidationError(f"score CSV line {lineno}: scores must be integers") from None
    if not ids:
        raise ValidationError("score CSV has no objects")
    return ScoreMatrix(schema, tuple(ids), np.array(scores, dtype=np.int64))


def ordination_summary(result: OrdinationResult) -> dict:
    return {
        "index": {i: v for i, v in result.index.items()},
        "category": {i: categorize(v).label for i, v in result.index.items()},
        "stress": result.stress,
        "rsq": result.rsq,
        "iterations": result.n_iter,
        "init": result.init,
        "out_of_range": list(result.out_of_range),
    }


__all__ = [
    "Attribute", "AttributeSchema", "ScoreMatrix", "SustainabilityCategory", "RapParams",
    "OrdinationResult", "LeverageReport", "MonteCarloReport", "ObjectStats",
    "add_reference_rows", "normalize_scores", "align_to_axis", "sustainability_index",
    "categorize", "leverage", "monte_carlo", "perturb_scores", "parse_score_csv",
    "ordination_summary",
]
