"""Command-line driver for the planning pipeline.

Exit codes: 0 success, 1 configuration/validation error, 2 I/O error,
3 numeric or consistency failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path


from . import __version__
from .ahp import (WEIGHT_VARIANTS, Hierarchy, coefficients_to_csv, compile_coefficients,
                  hierarchy_from_matrices, parse_matrix_csv)
from .classify import (BOUNDARY_RULE, class_areas, classify_raster, evaluate_breaks,
                       jenks_breaks)
from .config import PipelineConfig, path_refs, load_config
from .errors import NumericError, ValidationError
from .geodata import (CategoricalRaster, legend_to_csv, parse_ascii_grid, parse_legend_csv,
                      serialize_ascii_grid)
from .kite import render_kite
from .overlay import SubcriterionLayer, aspect_score, composite
from .rap import (AttributeSchema, RapParams, categorize, leverage, monte_carlo,
                  ordination_summary, parse_score_csv, sustainability_index)
from .suitability import (CropRequirementTable, area_counts, area_summary, areas_to_csv,
                          evaluate_units, parse_observations_csv, results_to_csv)

log = logging.getLogger("landmcda")

SURFACE_DECIMALS = 8
DIRECTIONS_DEFAULT = "builtin:priority_directions.json"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def _categorical(cfg: PipelineConfig, raster_ref, legend_ref) -> CategoricalRaster:
    grid = parse_ascii_grid(cfg.read_text(raster_ref))
    legend = parse_legend_csv(cfg.read_text(legend_ref))
    return CategoricalRaster.from_numeric(grid, legend)


# -- stages -----------------------------------------------------------------

def cmd_suitability(cfg: PipelineConfig) -> dict:
    sec = cfg.section("suitability")
    table = CropRequirementTable.from_json(cfg.read_json(sec["requirements"]))
    observations = parse_observations_csv(cfg.read_text(sec["observations"]), table)
    results = evaluate_units(observations, table)
    out = cfg.output / "suitability"
    _write(out / "units.csv", results_to_csv(results))
    report = {
        "crop": table.crop,
        "units": [{"unit_id": r.unit_id, "overall": r.overall.name, "subclass": r.subclass,
                   "limiting_groups": list(r.limiting_groups),
                   "ratings": {k: v.name for k, v in r.per_characteristic.items()}}
                  for r in results],
    }
    if "units_raster" in sec:
        units = _categorical(cfg, sec["units_raster"], sec["units_legend"])
        areas = area_summary(units, results)
        _write(out / "areas.csv", areas_to_csv(areas))
        report["areas_ha"] = areas
        report["cells"] = area_counts(units, results)
        report["total_ha"] = float(sum(areas.values()))
    _write(out / "report.json", _dump(report))
    return report


def cmd_rap(cfg: PipelineConfig) -> dict:
    sec = cfg.section("rap")
    params = RapParams(max_iter=int(sec.get("max_iter", 500)), tol=float(sec.get("tol", 1e-8)),
                       seed=cfg.seed, anchors=bool(sec.get("anchors", True)))
    mc = sec.get("monte_carlo")
    dimensions = {}
    for dim in sec["dimensions"]:
        schema = AttributeSchema.from_json(cfg.read_json(dim["schema"]))
        if schema.dimension in dimensions:
            raise ValidationError(f"dimension {schema.dimension!r} appears twice")
        matrix = parse_score_csv(cfg.read_text(dim["scores"]), schema)
        result = sustainability_index(matrix, params)
        entry = ordination_summary(result)
        entry["dimension_index"] = result.mean_index
        entry["dimension_category"] = categorize(result.mean_index).label
        if len(schema.attributes) >= 2:
            entry["leverage"] = dict(leverage(matrix, params).ranked())
        if mc:
            report = monte_carlo(matrix, int(mc["trials"]), float(mc["flip_prob"]), cfg.seed, params)
            entry["monte_carlo"] = {
                "seed": report.seed, "trials": report.trials, "flip_prob": report.flip_prob,
                "objects": {i: {"mean": s.mean, "std": s.std, "p2.5": s.p025, "p97.5": s.p975}
                            for i, s in report.stats.items()}}
        dimensions[schema.dimension] = entry
    out = cfg.output / "rap"
    kite = {name: entry["dimension_index"] for name, entry in dimensions.items()}
    _write(out / "kite.svg", render_kite(kite))
    summary = {"params": {"max_iter": params.max_iter, "tol": params.tol, "seed": params.seed,
                          "anchors": params.anchors},
               "dimensions": dimensions}
    _write(out / "report.json", _dump(summary))
    return summary


def build_hierarchy(cfg: PipelineConfig):
    """Hierarchy with the selected aspect weights, plus per-matrix AHP outcomes."""
    sec = cfg.section("ahp")
    if "hierarchy" in sec:
        hierarchy = Hierarchy.from_json(cfg.read_json(sec["hierarchy"]))
        outcomes = []
    else:
        hierarchy, outcomes = hierarchy_from_matrices(
            sec["matrices"], lambda ref: parse_matrix_csv(cfg.read_text(ref)), cfg.strict)
    choice = cfg.section("weights") or "hierarchy"
    if choice == "hierarchy":
        return hierarchy, outcomes, hierarchy.variant or "hierarchy"
    if isinstance(choice, str):
        if choice not in WEIGHT_VARIANTS:
            raise ValidationError(
                f"unknown weights variant {choice!r}; use 'hierarchy', "
                f"{', '.join(sorted(WEIGHT_VARIANTS))} or a list")
        return hierarchy.with_weights(WEIGHT_VARIANTS[choice], choice), outcomes, choice
    return hierarchy.with_weights([float(w) for w in choice], "explicit"), outcomes, "explicit"


def cmd_ahp(cfg: PipelineConfig) -> dict:
    hierarchy, outcomes, variant = build_hierarchy(cfg)
    coefs = compile_coefficients(hierarchy)
    out = cfg.output / "ahp"
    _write(out / "coefficients.csv", coefficients_to_csv(coefs))
    report = {
        "weights_variant": variant,
        "aspect_weights": hierarchy.weights,
        "matrices": [o.to_json() for o in outcomes],
        "coefficients": [{"aspect": c.aspect, "subcriterion": c.subcriterion,
                          "coefficient": c.coefficient, "class_values": dict(c.class_values)}
                         for c in coefs],
        "coefficient_sum": float(sum(c.coefficient for c in coefs)),
        "hierarchy": hierarchy.to_json(),
    }
    _write(out / "report.json", _dump(report))
    return report


def cmd_overlay(cfg: PipelineConfig) -> dict:
    sec = cfg.section("overlay")
    hierarchy, _, variant = build_hierarchy(cfg)
    layer_refs = {}
    for layer in sec["layers"]:
        if layer["subcriterion"] in layer_refs:
            raise ValidationError(f"two layers for {layer['subcriterion']!r}")
        layer_refs[layer["subcriterion"]] = layer
    known = {s.name for a in hierarchy.aspects for s in a.subcriteria}
    extra = sorted(set(layer_refs) - known)
    if extra:
        raise ValidationError(f"layers for unknown subcriteria {extra}")
    out = cfg.output / "overlay"
    surfaces, record = [], {}
    for aspect in hierarchy.aspects:
        layers = []
        for sub in aspect.subcriteria:
            if sub.name not in layer_refs:
                raise ValidationError(f"no raster layer for subcriterion {sub.name!r}")
            ref = layer_refs[sub.name]
            raster = _categorical(cfg, ref["raster"], ref["legend"])
            layers.append(SubcriterionLayer(sub.name, raster, sub.class_values))
        surface = aspect_score(aspect.name, layers, {s.name: s.score for s in aspect.subcriteria})
        surfaces.append(surface)
        name = f"s_{_slug(aspect.name)}.asc"
        _write(out / name, serialize_ascii_grid(surface.raster, SURFACE_DECIMALS))
        record[aspect.name] = {"file": name, "achievable": list(surface.achievable),
                               **_stats(surface.raster)}
    renormalize = bool(sec.get("renormalize", False))
    weights = [a.weight for a in hierarchy.aspects]
    sp = composite(surfaces, weights, renormalize)
    _write(out / "sp_corn.asc", serialize_ascii_grid(sp, SURFACE_DECIMALS))
    used = [w / sum(weights) for w in weights] if renormalize else weights
    provenance = {
        "weights_variant": variant,
        "weights": dict(zip([a.name for a in hierarchy.aspects], used)),
        "weight_sum": float(sum(weights)),
        "renormalized": renormalize,
        "scores": {s.name: s.score for a in hierarchy.aspects for s in a.subcriteria},
        "class_values": {s.name: s.class_values for a in hierarchy.aspects for s in a.subcriteria},
        "surfaces": record,
        "sp_corn": {"file": "sp_corn.asc", **_stats(sp)},
        "inputs": {ref: cfg.digest_of(ref)
                   for layer in sec["layers"] for ref in (layer["raster"], layer["legend"])},
    }
    _write(out / "provenance.json", _dump(provenance))
    return provenance


def _stats(raster) -> dict:
    v = raster.valid_values()
    if v.size == 0:
        return {"min": None, "max": None, "mean": None, "cells": 0}
    return {"min": float(v.min()), "max": float(v.max()), "mean": float(v.mean()),
            "cells": int(v.size)}


def cmd_classify(cfg: PipelineConfig) -> dict:
    sec = cfg.section("classify") or {}
    if "raster" in sec:
        raster = parse_ascii_grid(cfg.read_text(sec["raster"]))
        source = sec["raster"]
    else:
        path = cfg.output / "overlay" / "sp_corn.asc"
        if not path.is_file():
            raise ValidationError("no classify.raster given and no overlay output to classify")
        raster = parse_ascii_grid(path.read_text(encoding="utf-8"))
        source = "overlay/sp_corn.asc"
    values = raster.valid_values()
    k = int(sec.get("k", 3))
    if "breaks" in sec:
        result = evaluate_breaks(values, sec["breaks"])
        method = "fixed"
    else:
        result = jenks_breaks(values, k)
        method = "jenks"
    priority = classify_raster(raster, result)
    directions = cfg.read_json(sec.get("directions", DIRECTIONS_DEFAULT))
    areas = class_areas(priority)
    classes = {}
    for code, label in priority.legend.entries.items():
        cell_values = raster.cells[(priority.codes == code)]
        classes[label] = {
            "code": code,
            **areas[label],
            "min": float(cell_values.min()) if cell_values.size else None,
            "max": float(cell_values.max()) if cell_values.size else None,
            "directions": list(directions.get(str(code), [])),
        }
    out = cfg.output / "classify"
    _write(out / "priority.asc", serialize_ascii_grid(priority.to_numeric(), 0))
    _write(out / "priority_legend.csv", legend_to_csv(priority.legend))
    report = {"source": source, "method": method, **result.to_json(),
              "boundary_rule": BOUNDARY_RULE, "classes": classes}
    _write(out / "report.json", _dump(report))
    return report


STAGE_COMMANDS = {
    "suitability": cmd_suitability,
    "rap": cmd_rap,
    "ahp": cmd_ahp,
    "overlay": cmd_overlay,
    "classify": cmd_classify,
}


def cmd_overlay_classify(cfg: PipelineConfig) -> dict:
    return {"overlay": cmd_overlay(cfg), "classify": cmd_classify(cfg)}


def cmd_pipeline(cfg: PipelineConfig) -> dict:
    """Run every configured stage in order and write ``run_report.json``."""
    stages = {}
    for name, command in STAGE_COMMANDS.items():
        present = cfg.section(name) is not None
        if name == "classify":
            present = present or cfg.section("overlay") is not None
        if not present:
            stages[name] = {"status": "skipped", "reason": f"no {name!r} section in config"}
            continue
        log.info("running stage %s", name)
        stages[name] = {"status": "ok", "output": command(cfg)}
    inputs = {ref: cfg.digest_of(ref) for ref in sorted(set(path_refs(cfg.sections)))
              if ref is not None}
    report = {
        "tool": "landmcda",
        "version": __version__,
        "seed": cfg.seed,
        "strict": cfg.strict,
        "config_digest": cfg.digest,
        "inputs": inputs,
        "stages": stages,
    }
    _write(cfg.output / "run_report.json", _dump(report))
    return report


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="landmcda", description="Multicriteria land-use planning pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("suitability", "rap", "ahp", "overlay", "classify", "pipeline"):
        p = sub.add_parser(name, help=f"run the {name} stage" if name != "pipeline"
                           else "run every configured stage")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--strict", action="store_true",
                       help="fail when an AHP matrix has CR above 0.1")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        cfg = cfg.with_overrides(output=args.out, seed=args.seed, strict=args.strict)
        if args.command == "pipeline":
            cmd_pipeline(cfg)
        else:
            if args.command != "classify" and cfg.section(args.command) is None:
                raise ValidationError(f"config has no {args.command!r} section")
            STAGE_COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.command} outputs to {cfg.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
