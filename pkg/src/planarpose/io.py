"""File formats: correspondence CSV, calibration JSON, pair-record JSONL.

Correspondence CSV carries a header of either ``q1x,q1y,q2x,q2y``
(normalized coordinates) or ``p1x,p1y,p2x,p2y`` (pixels, requiring a
calibration file).  Calibration JSON is
``{"cam1": {"fx","fy","cx","cy"}, "cam2": {...}}`` with cam2 defaulting
to cam1.  Pair records are one JSON object per line:
``{"id": str, "points": [[x,x,x,x], ...], "gt": {"alpha_deg", "beta_deg"}?}``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ParseError
from .geom import PlanarPose

NORMALIZED_HEADER = ["q1x", "q1y", "q2x", "q2y"]
PIXEL_HEADER = ["p1x", "p1y", "p2x", "p2y"]


@dataclass(frozen=True)
class Calibration:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise InvalidInputError("focal lengths must be positive")

    @staticmethod
    def from_dict(d: dict) -> "Calibration":
        try:
            return Calibration(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad calibration entry: {exc}") from exc


def load_calibration(path) -> tuple:
    """(cam1, cam2) calibrations; cam2 falls back to cam1."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        cam1 = Calibration.from_dict(data["cam1"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"cannot read calibration {path}: {exc}") from exc
    cam2 = Calibration.from_dict(data["cam2"]) if "cam2" in data else cam1
    return cam1, cam2


def normalize_points(pixels, cam1: Calibration, cam2: Calibration | None = None) -> np.ndarray:
    """q = (p - c) / f per camera and axis."""
    cam2 = cam2 or cam1
    p = np.asarray(pixels, dtype=float)
    if p.ndim != 2 or p.shape[1] != 4:
        raise InvalidInputError(f"expected (n, 4) pixel rows, got {p.shape}")
    out = np.empty_like(p)
    out[:, 0] = (p[:, 0] - cam1.cx) / cam1.fx
    out[:, 1] = (p[:, 1] - cam1.cy) / cam1.fy
    out[:, 2] = (p[:, 2] - cam2.cx) / cam2.fx
    out[:, 3] = (p[:, 3] - cam2.cy) / cam2.fy
    return out


def denormalize_points(points, cam1: Calibration, cam2: Calibration | None = None) -> np.ndarray:
    cam2 = cam2 or cam1
    q = np.asarray(points, dtype=float)
    out = np.empty_like(q)
    out[:, 0] = q[:, 0] * cam1.fx + cam1.cx
    out[:, 1] = q[:, 1] * cam1.fy + cam1.cy
    out[:, 2] = q[:, 2] * cam2.fx + cam2.cx
    out[:, 3] = q[:, 3] * cam2.fy + cam2.cy
    return out


def read_correspondences(source) -> tuple:
    """Parse a correspondence CSV; returns ((n,4) array, 'normalized'|'pixel')."""
    close = False
    if isinstance(source, (str, bytes)):
        try:
            fh = open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise ParseError(f"cannot open {source!r}: {exc}") from exc
        close = True
    else:
        fh = source
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty correspondence file") from None
        header = [h.strip() for h in header]
        if header == NORMALIZED_HEADER:
            kind = "normalized"
        elif header == PIXEL_HEADER:
            kind = "pixel"
        else:
            raise ParseError(
                f"unrecognized header {header!r}; expected {NORMALIZED_HEADER} or {PIXEL_HEADER}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"line {lineno}: expected 4 columns, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(f"line {lineno}: non-finite value")
            rows.append(vals)
        if not rows:
            raise ParseError("no correspondence rows")
        return np.asarray(rows, dtype=float), kind
    finally:
        if close:
            fh.close()


def write_correspondences(fh, points, kind: str = "normalized"):
    header = NORMALIZED_HEADER if kind == "normalized" else PIXEL_HEADER
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in np.asarray(points, dtype=float):
        writer.writerow([format_float(v) for v in row])


@dataclass
class PairRecord:
    pair_id: str
    points: np.ndarray
    gt: PlanarPose | None = None


def read_pairs_jsonl(path) -> list:
    records = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pts = np.asarray(obj["points"], dtype=float)
                if pts.ndim != 2 or pts.shape[1] != 4:
                    raise ValueError(f"points must be (n, 4), got {pts.shape}")
                gt = None
                if obj.get("gt") is not None:
                    gt = PlanarPose(
                        math.radians(float(obj["gt"]["alpha_deg"])),
                        math.radians(float(obj["gt"]["beta_deg"])),
                    )
                records.append(PairRecord(str(obj.get("id", lineno)), pts, gt))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not records:
        raise ParseError(f"{path}: no pair records")
    return records


def format_float(v: float) -> str:
    """Stable 15-significant-digit rendering for CSV/JSON outputs."""
    return f"{float(v):.15g}"


def write_csv(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else format_float(c) for c in row])


def kind_requires_calibration(kind: str) -> bool:
    return kind == "pixel"
