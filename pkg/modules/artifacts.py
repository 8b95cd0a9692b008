"""
PolarMap v1.0 - Artifact Store
Writes JSON, CSV, SVG and matrix dumps into one output directory
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from svgpathtools import polygon, wsvg

from .errors import ArtifactError

FLOAT_FORMAT = "%.12e"
SVG_POINTS = 720


def complex_pair(value: complex) -> List[float]:
    return [float(np.real(value)), float(np.imag(value))]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_pair(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class ArtifactStore:
    """Output directory for one run; every file carries the same provenance block"""

    def __init__(self, out_dir="output", provenance: Optional[Dict[str, Any]] = None):
        self.logger = logging.getLogger(__name__)
        self.out_dir = Path(out_dir)
        self.provenance = provenance or {}
        self.written: List[Path] = []
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactError(self.out_dir, e) from e

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        self.logger.info(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        """payload keys keep their insertion order; provenance goes last"""
        path = self.path(name)
        document = dict(payload)
        document["provenance"] = self.provenance
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(_jsonable(document), f, indent=2, ensure_ascii=False, allow_nan=True)
                f.write("\n")
        except (OSError, TypeError, ValueError) as e:
            raise ArtifactError(path, e) from e
        return self._record(path)

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.path(name)
        try:
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise ArtifactError(path, e) from e
        return self._record(path)

    def write_svg(self, name: str, boundary: Sequence[np.ndarray], image: Optional[np.ndarray] = None) -> Path:
        """
        Overlay of the true boundary components (gray) and an image curve (black).
        SVG y points down, so curves are conjugated before drawing.
        """
        path = self.path(name)
        paths, colors, widths = [], [], []
        curves = [(c, "gray") for c in boundary]
        if image is not None:
            curves.append((image, "black"))
        extent = max(float(np.ptp(np.real(c))) + float(np.ptp(np.imag(c))) for c, _ in curves)
        for points, color in curves:
            points = _thin(np.asarray(points, dtype=complex))
            paths.append(polygon(*np.conj(points)))
            colors.append(color)
            widths.append(0.004 * extent)
        try:
            wsvg(paths, colors=colors, stroke_widths=widths, filename=str(path.resolve()))
        except (OSError, ValueError) as e:
            raise ArtifactError(path, e) from e
        return self._record(path)

    def write_matrix(self, name: str, matrix: np.ndarray) -> Path:
        path = self.path(name)
        try:
            np.save(path, np.asarray(matrix))
        except OSError as e:
            raise ArtifactError(path, e) from e
        return self._record(path)


def _thin(points: np.ndarray) -> np.ndarray:
    if len(points) <= SVG_POINTS:
        return points
    step = int(np.ceil(len(points) / SVG_POINTS))
    return points[::step]
