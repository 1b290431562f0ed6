"""
JSON and CSV artifacts: branch sets, refinements, measure sweeps, summaries
and reference measures. JSON is written with sorted keys and CSV through
pandas with full float precision, so reruns are byte-identical.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import pandas as pd

from models import (ConeCertificate, Cylinder, CylinderRefinement, HyperbolicBranch, MeasureRow,
                    PesinCertificate, PhaseSpace, Point, QGCertificate, Rectangle, ReferenceMeasure)

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
REFINEMENT_COLUMNS = ["word", "kind", "depth", "u_min", "u_max", "v_min", "v_max", "width"]
MEASURE_COLUMNS = ["word", "period", "distance", "slack", "passed"]

PathLike = Union[str, Path]


def _clean(value: Any) -> Any:
    """JSON-safe copy: tuples become lists, non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _clean(value.item())
    return value


def write_json(path: PathLike, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(data), sort_keys=True, indent=2, allow_nan=False) + "\n",
                    encoding="utf-8")
    logger.debug(f"Wrote {path}")
    return path


def read_json(path: PathLike) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _write_csv(path: PathLike, rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_refinement_csv(path: PathLike, refinement: CylinderRefinement) -> Path:
    return _write_csv(path, refinement.rows(), REFINEMENT_COLUMNS)


def write_measures_csv(path: PathLike, rows: Sequence[MeasureRow]) -> Path:
    return _write_csv(path, (r.to_dict() for r in rows), MEASURE_COLUMNS)


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"word": str})


def branch_set_document(branches: Sequence[HyperbolicBranch], parameters: Dict[str, Any]) -> Dict[str, Any]:
    rect = branches[0].rectangle if branches else None
    return {
        "parameters": parameters,
        "rectangle": rect.to_dict() if rect is not None else None,
        "branches": [b.to_dict() for b in branches],
    }


def write_branches(path: PathLike, branches: Sequence[HyperbolicBranch], parameters: Dict[str, Any]) -> Path:
    return write_json(path, branch_set_document(branches, parameters))


def rectangle_from_dict(data: Dict[str, Any]) -> Rectangle:
    space = PhaseSpace(data["space"])
    return Rectangle(Point(tuple(data["center"]), data["space"]), float(data["h"]),
                     (tuple(data["frame"][0]), tuple(data["frame"][1])), float(data["scale"]), space)


def branch_from_dict(rect: Rectangle, data: Dict[str, Any]) -> HyperbolicBranch:
    tag = rect.space.tag
    landing = data.get("landing_point")
    pesin = data.get("pesin_certificate")
    return HyperbolicBranch(
        return_time=int(data["return_time"]),
        source=Cylinder.from_dict(rect, data["source"]),
        target=Cylinder.from_dict(rect, data["target"]),
        base_point=Point(tuple(data["base_point"]), tag),
        cone_certificate=ConeCertificate.from_dict(data["cone_certificate"]),
        diameter_profile=tuple(data["diameter_profile"]),
        qg_certificate=QGCertificate(**data["qg_certificate"]),
        pesin_certificate=PesinCertificate.from_dict(pesin) if pesin else None,
        landing_point=Point(tuple(landing), tag) if landing else None,
        notes=tuple(data.get("notes", ())),
    )


def load_branches(path: PathLike) -> List[HyperbolicBranch]:
    """Reload a branch-set document; constructors re-validate every object."""
    doc = read_json(path)
    if not doc.get("branches"):
        return []
    rect = rectangle_from_dict(doc["rectangle"])
    return [branch_from_dict(rect, b) for b in doc["branches"]]


def save_reference(path: PathLike, reference: ReferenceMeasure) -> Path:
    return write_json(path, reference.to_dict())


def load_reference(path: PathLike) -> ReferenceMeasure:
    return ReferenceMeasure.from_dict(read_json(path))
