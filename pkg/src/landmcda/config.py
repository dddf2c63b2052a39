"""Pipeline configuration: a single JSON document with paths relative to itself.

A path may also be written ``builtin:<name>`` to use one of the data files
shipped with the package (the corn requirement table, the published
hierarchy, the priority directions).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .errors import ValidationError

BUILTIN = "builtin:"
STAGES = ("suitability", "rap", "ahp", "overlay", "classify")


def builtin_path(name: str):
    ref = resources.files("landmcda.data").joinpath(name)
    if not ref.is_file():
        raise ValidationError(f"no built-in resource {name!r}")
    return ref


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class PipelineConfig:
    base_dir: Path
    output: Path
    seed: int = 0
    strict: bool = False
    sections: dict = field(default_factory=dict)
    digest: str = ""

    def section(self, name: str):
        return self.sections.get(name)

    def resolve(self, ref: str):
        if not isinstance(ref, str) or not ref:
            raise ValidationError(f"expected a path string, got {ref!r}")
        if ref.startswith(BUILTIN):
            return builtin_path(ref[len(BUILTIN):])
        path = Path(ref)
        return path if path.is_absolute() else self.base_dir / path

    def read_text(self, ref: str) -> str:
        return self.resolve(ref).read_text(encoding="utf-8")

    def read_json(self, ref: str):
        try:
            return json.loads(self.read_text(ref))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{ref}: invalid JSON ({exc})") from exc

    def digest_of(self, ref: str) -> str:
        return sha256_bytes(self.resolve(ref).read_bytes())

    def with_overrides(self, output=None, seed=None, strict=None) -> PipelineConfig:
        return replace(self,
                       output=Path(output) if output is not None else self.output,
                       seed=self.seed if seed is None else int(seed),
                       strict=self.strict or bool(strict))


def path_refs(sections: dict) -> list[str]:
    """Every file reference named by the known config sections."""
    refs = []
    suit = sections.get("suitability") or {}
    refs += [suit[k] for k in ("requirements", "observations", "units_raster", "units_legend")
             if k in suit]
    for dim in (sections.get("rap") or {}).get("dimensions", []):
        refs += [dim.get("schema"), dim.get("scores")]
    ahp = sections.get("ahp") or {}
    if "hierarchy" in ahp:
        refs.append(ahp["hierarchy"])
    if "matrices" in ahp:
        tree = ahp["matrices"]
        refs.append(tree.get("matrix"))
        for aspect in tree.get("aspects", []):
            refs.append(aspect.get("matrix"))
            refs += [s["matrix"] for s in aspect.get("subcriteria", []) if "matrix" in s]
    for layer in (sections.get("overlay") or {}).get("layers", []):
        refs += [layer.get("raster"), layer.get("legend")]
    cls = sections.get("classify") or {}
    refs += [cls[k] for k in ("raster", "directions") if k in cls]
    return refs


def validate_sections(cfg: PipelineConfig) -> None:
    s = cfg.sections
    for name in s:
        if name not in STAGES and name not in ("weights",):
            raise ValidationError(f"unknown config section {name!r}")
    suit = s.get("suitability")
    if suit is not None:
        for key in ("requirements", "observations"):
            if key not in suit:
                raise ValidationError(f"suitability.{key} is required")
        if ("units_raster" in suit) != ("units_legend" in suit):
            raise ValidationError("suitability.units_raster and units_legend go together")
    rap = s.get("rap")
    if rap is not None:
        dims = rap.get("dimensions")
        if not dims:
            raise ValidationError("rap.dimensions must list at least one dimension")
        for dim in dims:
            if "schema" not in dim or "scores" not in dim:
                raise ValidationError("each rap dimension needs 'schema' and 'scores'")
        mc = rap.get("monte_carlo")
        if mc is not None:
            if int(mc.get("trials", 0)) < 1:
                raise ValidationError("rap.monte_carlo.trials must be >= 1")
            if not 0.0 <= float(mc.get("flip_prob", -1)) <= 1.0:
                raise ValidationError("rap.monte_carlo.flip_prob must lie in [0, 1]")
    ahp = s.get("ahp")
    if ahp is not None and (("hierarchy" in ahp) == ("matrices" in ahp)):
        raise ValidationError("ahp needs exactly one of 'hierarchy' or 'matrices'")
    if s.get("overlay") is not None:
        if ahp is None:
            raise ValidationError("overlay requires an ahp section")
        if not s["overlay"].get("layers"):
            raise ValidationError("overlay.layers must not be empty")
        for layer in s["overlay"]["layers"]:
            for key in ("subcriterion", "raster", "legend"):
                if key not in layer:
                    raise ValidationError(f"overlay layer needs {key!r}")
    cls = s.get("classify")
    if cls is not None:
        k = cls.get("k", 3)
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise ValidationError("classify.k must be an integer >= 1")
        if "breaks" in cls and len(cls["breaks"]) != k - 1:
            raise ValidationError("classify.breaks must hold k - 1 values")
    for ref in path_refs(s):
        if ref is None:
            continue
        target = cfg.resolve(ref)
        if not target.is_file():
            raise ValidationError(f"referenced file does not exist: {ref}")


def load_config(path) -> PipelineConfig:
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    base = path.resolve().parent
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    sections = {k: v for k, v in doc.items() if k not in ("output", "seed", "strict")}
    cfg = PipelineConfig(
        base_dir=base,
        output=base / doc.get("output", "out"),
        seed=seed,
        strict=bool(doc.get("strict", False)),
        sections=sections,
        digest=sha256_bytes(raw),
    )
    try:
        validate_sections(cfg)
    except (AttributeError, TypeError, KeyError) as exc:
        raise ValidationError(f"malformed config: {exc!r}") from exc
    return cfg
