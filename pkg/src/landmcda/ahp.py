"""Analytic Hierarchy Process: priorities, consistency and hierarchy compilation."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import ConsistencyError, ConvergenceError, ValidationError

RECIPROCITY_TOL = 1e-9
CR_THRESHOLD = 0.1
SUM_TOL = 0.02

# Saaty's random consistency index by matrix order
RANDOM_INDEX = {1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32,
                8: 1.41, 9: 1.45, 10: 1.49}


class SaatyScaleWarning(UserWarning):
    """A judgment lies outside the 1/9..9 scale."""


class InconsistencyWarning(UserWarning):
    """A judgment matrix has CR above the threshold."""


def validate_matrix(entries) -> None:
    """Check squareness, positivity, unit diagonal and reciprocity.

    Entries outside [1/9, 9] only warn.
    """
    a = np.asarray(entries, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"pairwise matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if n < 2:
        raise ValidationError("pairwise matrix needs at least 2 items")
    if not np.all(np.isfinite(a)):
        raise ValidationError("pairwise matrix has non-finite entries")
    if np.any(a <= 0):
        i, j = np.argwhere(a <= 0)[0]
        raise ValidationError(f"non-positive entry a[{i},{j}] = {a[i, j]}")
    for i in range(n):
        if abs(a[i, i] - 1.0) > RECIPROCITY_TOL:
            raise ValidationError(f"diagonal entry a[{i},{i}] = {a[i, i]} is not 1")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(a[i, j] * a[j, i] - 1.0) > RECIPROCITY_TOL:
                raise ValidationError(
                    f"a[{i},{j}] = {a[i, j]} and a[{j},{i}] = {a[j, i]} are not reciprocal")
    off = np.argwhere((a > 9.0 * (1 + 1e-12)) | (a < (1.0 / 9.0) * (1 - 1e-12)))
    if off.size:
        i, j = off[0]
        warnings.warn(f"a[{i},{j}] = {a[i, j]:g} lies outside the 1/9..9 judgment scale",
                      SaatyScaleWarning, stacklevel=2)


@dataclass(frozen=True, eq=False)
class PairwiseMatrix:
    entries: np.ndarray

    def __post_init__(self):
        validate_matrix(self.entries)
        a = np.array(self.entries, dtype=np.float64)
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_weights(cls, weights) -> PairwiseMatrix:
        """Perfectly consistent matrix a_ij = w_i / w_j."""
        w = np.asarray(weights, dtype=np.float64)
        return cls(w[:, None] / w[None, :])

    @classmethod
    def from_upper(cls, n: int, upper: Sequence[float]) -> PairwiseMatrix:
        """Fill from the strict upper triangle given row by row."""
        a = np.ones((n, n))
        it = iter(upper)
        for i in range(n):
            for j in range(i + 1, n):
                a[i, j] = float(next(it))
                a[j, i] = 1.0 / a[i, j]
        return cls(a)


def parse_matrix_csv(text: str) -> PairwiseMatrix:
    """Read n rows of n entries; entries may be fractions such as ``1/3``."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    try:
        values = [[float(Fraction(c.strip())) for c in r] for r in rows]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad pairwise matrix entry: {exc}") from exc
    if not values or any(len(r) != len(values) for r in values):
        raise ValidationError("pairwise matrix CSV must hold n rows of n entries")
    return PairwiseMatrix(np.array(values))


def principal_weights(m: PairwiseMatrix, tol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
    """Perron eigenvector by power iteration from the uniform vector, summing to 1."""
    a = m.entries
    w = np.full(m.n, 1.0 / m.n)
    for _ in range(max_iter):
        nxt = a @ w
        nxt = nxt / nxt.sum()
        if np.max(np.abs(nxt - w)) < tol:
            return nxt
        w = nxt
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def geometric_mean_weights(m: PairwiseMatrix) -> np.ndarray:
    w = np.exp(np.mean(np.log(m.entries), axis=1))
    return w / w.sum()


@dataclass(frozen=True)
class ConsistencyReport:
    lambda_max: float
    ci: float
    ri: float
    cr: float

    @property
    def consistent(self) -> bool:
        return self.cr <= CR_THRESHOLD

    def to_json(self) -> dict:
        return {"lambda_max": self.lambda_max, "CI": self.ci, "RI": self.ri, "CR": self.cr,
                "consistent": self.consistent}


def consistency(m: PairwiseMatrix, w=None, ri: float | None = None) -> ConsistencyReport:
    n = m.n
    if w is None:
        w = principal_weights(m)
    w = np.asarray(w, dtype=np.float64)
    lam = float(np.mean((m.entries @ w) / w))
    # lambda_max >= n in exact arithmetic; absorb rounding just below n
    if n - 1e-9 * n < lam < n:
        lam = float(n)
    ci = (lam - n) / (n - 1)
    if ri is None:
        if n not in RANDOM_INDEX:
            raise ValidationError(f"no tabulated random index for n = {n}; pass ri explicitly")
        ri = RANDOM_INDEX[n]
    cr = 0.0 if n <= 2 or ri == 0 else ci / ri
    return ConsistencyReport(lam, ci, ri, cr)


def check_consistency(report: ConsistencyReport, name: str = "matrix", strict: bool = False) -> None:
    if report.consistent:
        return
    msg = f"{name}: CR = {report.cr:.4f} exceeds {CR_THRESHOLD}"
    if strict:
        raise ConsistencyError(msg)
    warnings.warn(msg, InconsistencyWarning, stacklevel=2)


# -- hierarchy --------------------------------------------------------------

@dataclass(frozen=True)
class Subcriterion:
    name: str
    score: float
    classes: tuple[tuple[str, float], ...]

    @property
    def class_values(self) -> dict[str, float]:
        return dict(self.classes)


@dataclass(frozen=True)
class Aspect:
    name: str
    weight: float
    subcriteria: tuple[Subcriterion, ...]


@dataclass(frozen=True)
class Hierarchy:
    """Goal -> aspect (weight) -> subcriterion (score) -> class (value)."""

    aspects: tuple[Aspect, ...]
    variant: str = ""

    def __post_init__(self):
        aspects = tuple(self.aspects)
        if not aspects:
            raise ValidationError("hierarchy has no aspects")
        _check_sum([a.weight for a in aspects], "aspect weights")
        seen = set()
        for aspect in aspects:
            if not aspect.subcriteria:
                raise ValidationError(f"aspect {aspect.name!r} has no subcriteria")
            _check_sum([s.score for s in aspect.subcriteria], f"{aspect.name} subcriterion scores")
            for sub in aspect.subcriteria:
                if sub.name in seen:
                    raise ValidationError(f"subcriterion name {sub.name!r} is repeated")
                seen.add(sub.name)
                labels = [c[0] for c in sub.classes]
                if len(labels) < 2:
                    raise ValidationError(f"subcriterion {sub.name!r} needs at least 2 classes")
                if len(set(labels)) != len(labels):
                    raise ValidationError(f"subcriterion {sub.name!r} repeats a class label")
        object.__setattr__(self, "aspects", aspects)

    @property
    def weights(self) -> dict[str, float]:
        return {a.name: a.weight for a in self.aspects}

    def aspect(self, name: str) -> Aspect:
        for a in self.aspects:
            if a.name == name:
                return a
        raise KeyError(name)

    def with_weights(self, weights: Sequence[float], variant: str = "") -> Hierarchy:
        if len(weights) != len(self.aspects):
            raise ValidationError(
                f"{len(weights)} weights given for {len(self.aspects)} aspects")
        aspects = tuple(Aspect(a.name, float(w), a.subcriteria) for a, w in zip(self.aspects, weights))
        return Hierarchy(aspects, variant or self.variant)

    @classmethod
    def from_json(cls, doc) -> Hierarchy:
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            aspects = tuple(
                Aspect(a["name"], float(a["weight"]), tuple(
                    Subcriterion(s["name"], float(s["score"]),
                                 tuple((c["label"], float(c["value"])) for c in s["classes"]))
                    for s in a["subcriteria"]))
                for a in doc["aspects"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed hierarchy: {exc}") from exc
        return cls(aspects, doc.get("variant", ""))

    def to_json(self) -> dict:
        return {"variant": self.variant, "aspects": [
            {"name": a.name, "weight": a.weight, "subcriteria": [
                {"name": s.name, "score": s.score,
                 "classes": [{"label": lab, "value": v} for lab, v in s.classes]}
                for s in a.subcriteria]}
            for a in self.aspects]}


def _check_sum(values, what):
    total = float(sum(values))
    if any(v < 0 for v in values):
        raise ValidationError(f"{what} must be non-negative")
    if abs(total - 1.0) > SUM_TOL + 1e-12:
        raise ValidationError(f"{what} sum to {total:.4f}, not 1 within {SUM_TOL}")


@dataclass(frozen=True)
class Coefficient:
    aspect: str
    subcriterion: str
    coefficient: float
    class_values: Mapping[str, float]


def compile_coefficients(h: Hierarchy) -> list[Coefficient]:
    """Overlay coefficient per subcriterion: aspect weight x subcriterion score."""
    return [Coefficient(a.name, s.name, a.weight * s.score, s.class_values)
            for a in h.aspects for s in a.subcriteria]


def coefficients_to_csv(coefs: Sequence[Coefficient]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["aspect", "subcriterion", "coefficient", "classes"])
    for c in coefs:
        classes = "; ".join(f"{lab}={v:g}" for lab, v in c.class_values.items())
        writer.writerow([c.aspect, c.subcriterion, f"{c.coefficient:.6f}", classes])
    return buf.getvalue()


# The published corn aspect weights exist in three slightly different
# roundings; each is a named variant (ecological, economic, social).
WEIGHT_VARIANTS = {
    "tabulated": (0.46, 0.31, 0.23),
    "narrative": (0.46, 0.31, 0.21),
    "formula": (0.46, 0.32, 0.21),
}


@dataclass(frozen=True)
class MatrixOutcome:
    name: str
    weights: tuple[float, ...]
    items: tuple[str, ...]
    report: ConsistencyReport

    def to_json(self) -> dict:
        return {"name": self.name, "items": list(self.items), "weights": list(self.weights),
                **self.report.to_json()}


def prioritize(name: str, items: Sequence[str], m: PairwiseMatrix,
               strict: bool = False) -> MatrixOutcome:
    if len(items) != m.n:
        raise ValidationError(f"{name}: {len(items)} items but a {m.n}x{m.n} matrix")
    w = principal_weights(m)
    report = consistency(m, w)
    check_consistency(report, name, strict)
    return MatrixOutcome(name, tuple(float(x) for x in w), tuple(items), report)


def hierarchy_from_matrices(spec: Mapping, load_matrix, strict: bool = False,
                            variant: str = "ahp") -> tuple[Hierarchy, list[MatrixOutcome]]:
    """Derive a hierarchy from judgment matrices.

    ``spec`` has an aspect-level ``matrix`` plus ``aspects``, each with its
    own ``matrix`` and ``subcriteria``.  A subcriterion lists its class
    labels and either a ``matrix`` over them or literal ``values``.
    ``load_matrix`` turns a matrix reference into a :class:`PairwiseMatrix`.
    """
    outcomes = []
    aspect_specs = spec["aspects"]
    top = prioritize("aspects", [a["name"] for a in aspect_specs], load_matrix(spec["matrix"]), strict)
    outcomes.append(top)
    aspects = []
    for a_spec, a_weight in zip(aspect_specs, top.weights):
        subs_spec = a_spec["subcriteria"]
        sub_out = prioritize(a_spec["name"], [s["name"] for s in subs_spec],
                             load_matrix(a_spec["matrix"]), strict)
        outcomes.append(sub_out)
        subs = []
        for s_spec, s_score in zip(subs_spec, sub_out.weights):
            labels = list(s_spec["classes"])
            if "matrix" in s_spec:
                cls_out = prioritize(s_spec["name"], labels, load_matrix(s_spec["matrix"]), strict)
                outcomes.append(cls_out)
                values = cls_out.weights
            else:
                values = [float(v) for v in s_spec["values"]]
                if len(values) != len(labels):
                    raise ValidationError(f"{s_spec['name']}: class values do not match labels")
            subs.append(Subcriterion(s_spec["name"], s_score, tuple(zip(labels, values))))
        aspects.append(Aspect(a_spec["name"], a_weight, tuple(subs)))
    return Hierarchy(tuple(aspects), variant), outcomes
