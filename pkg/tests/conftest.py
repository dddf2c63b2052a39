import json
from pathlib import Path

import numpy as np
import pytest

from landmcda.geodata import GridHeader, Legend, NumericRaster, legend_to_csv, serialize_ascii_grid
from landmcda.ahp import Hierarchy
from landmcda.config import builtin_path


def write_grid(path: Path, cells, nodata=-9999, cellsize=100.0, decimals=0):
    cells = np.asarray(cells, dtype=float)
    header = GridHeader(cells.shape[1], cells.shape[0], 500000.0, 9500000.0, cellsize, nodata)
    path.write_text(serialize_ascii_grid(NumericRaster(header, cells), decimals))


def corn_hierarchy() -> Hierarchy:
    return Hierarchy.from_json(builtin_path("corn_hierarchy.json").read_text())


def build_project(root: Path, size=12, seed=7) -> Path:
    """A complete synthetic project on disk; returns the config path."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)

    # suitability: six map units laid out in vertical strips, one nodata corner
    units = np.repeat((np.arange(size) * 6 // size)[None, :], size, axis=0) + 1
    units[0, 0] = -9999
    write_grid(root / "units.asc", units)
    (root / "units_legend.csv").write_text(
        legend_to_csv(Legend({i: f"SPL {i}" for i in range(1, 7)})))

    # RAP: three dimensions with small synthetic score tables
    dims = []
    for dim, n_attr in (("ecological", 5), ("economic", 4), ("social", 4)):
        attrs = [{"name": f"{dim[:3]}_{j}", "scale_min": 0, "scale_max": 3,
                  "good_direction": "low" if j == 1 else "high"} for j in range(n_attr)]
        (root / f"{dim}_schema.json").write_text(json.dumps({"dimension": dim, "attributes": attrs}))
        lines = ["object," + ",".join(a["name"] for a in attrs)]
        for k in range(4):
            lines.append(f"village {k + 1}," + ",".join(str(int(v)) for v in rng.integers(0, 4, n_attr)))
        (root / f"{dim}_scores.csv").write_text("\n".join(lines) + "\n")
        dims.append({"schema": f"{dim}_schema.json", "scores": f"{dim}_scores.csv"})

    # overlay: one class raster per subcriterion of the shipped hierarchy
    layers = []
    (root / "layers").mkdir(exist_ok=True)
    for aspect in corn_hierarchy().aspects:
        for sub in aspect.subcriteria:
            slug = "".join(ch if ch.isalnum() else "_" for ch in sub.name.lower())
            labels = [lab for lab, _ in sub.classes]
            codes = rng.integers(1, len(labels) + 1, size=(size, size))
            codes[size - 1, size - 1] = -9999
            write_grid(root / "layers" / f"{slug}.asc", codes)
            (root / "layers" / f"{slug}.csv").write_text(
                legend_to_csv(Legend({i + 1: lab for i, lab in enumerate(labels)})))
            layers.append({"subcriterion": sub.name, "raster": f"layers/{slug}.asc",
                           "legend": f"layers/{slug}.csv"})

    config = {
        "output": "out",
        "seed": 11,
        "suitability": {"requirements": "builtin:corn_requirements.json",
                        "observations": "builtin:corn_observations.csv",
                        "units_raster": "units.asc", "units_legend": "units_legend.csv"},
        "rap": {"dimensions": dims, "monte_carlo": {"trials": 5, "flip_prob": 0.2}},
        "ahp": {"hierarchy": "builtin:corn_hierarchy.json"},
        "weights": "formula",
        "overlay": {"layers": layers},
        "classify": {"k": 3},
    }
    path = root / "config.json"
    path.write_text(json.dumps(config, indent=2))
    return path


@pytest.fixture
def project(tmp_path):
    return build_project(tmp_path / "project")


def tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
