"""Detection data model and its JSON wire format.

A fixture bundles everything the reading pipeline needs for one cropped
gauge: notch keypoints, sampled needle-mask pixels, OCR text boxes, and
optional ground truth. All coordinates live in the crop frame (origin
top-left, y down) and must fall inside [0, crop_size) per axis.

Documents carry a top-level "schema": 1 field. Unknown fields are ignored
so fixtures written by newer producers still parse.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .errors import FixtureSyntaxError, SchemaError
from .geometry import AffineTransform, Ellipse, Line

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


class KeypointClass(enum.Enum):
    START = "start"
    INTERMEDIATE = "intermediate"
    END = "end"


@dataclass(frozen=True)
class Keypoint:
    position: Point2
    kind: KeypointClass


@dataclass(frozen=True)
class Rect:
    """Axis-aligned box given by its min corner and positive extents."""

    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        vals = tuple(float(v) for v in (self.x, self.y, self.width, self.height))
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("box values must be finite")
        if vals[2] <= 0 or vals[3] <= 0:
            raise ValueError("box extents must be positive")
        for name, v in zip(("x", "y", "width", "height"), vals):
            object.__setattr__(self, name, v)

    @property
    def center(self) -> Point2:
        return Point2(self.x + self.width / 2.0, self.y + self.height / 2.0)


@dataclass(frozen=True)
class OcrItem:
    box: Rect
    text: str
    confidence: float = 1.0

    def __post_init__(self):
        conf = float(self.confidence)
        if not (0.0 <= conf <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")
        object.__setattr__(self, "confidence", conf)


@dataclass(frozen=True)
class GroundTruth:
    reading: float
    range_min: float
    range_max: float
    unit: str = ""

    def __post_init__(self):
        if not float(self.range_max) > float(self.range_min):
            raise ValueError("range_max must exceed range_min")


@dataclass(frozen=True)
class GaugeFixture:
    crop_size: tuple[int, int] = (448, 448)
    keypoints: tuple[Keypoint, ...] = ()
    needle_points: tuple[Point2, ...] = ()
    ocr_items: tuple[OcrItem, ...] = ()
    ground_truth: Optional[GroundTruth] = None

    def __post_init__(self):
        w, h = self.crop_size
        if w <= 0 or h <= 0:
            raise SchemaError("crop_size", "crop dimensions must be positive")
        object.__setattr__(self, "crop_size", (int(w), int(h)))
        object.__setattr__(self, "keypoints", tuple(self.keypoints))
        object.__setattr__(self, "needle_points", tuple(self.needle_points))
        object.__setattr__(self, "ocr_items", tuple(self.ocr_items))
        for i, kp in enumerate(self.keypoints):
            self._check_bounds(kp.position, f"keypoints[{i}]")
        for i, p in enumerate(self.needle_points):
            self._check_bounds(p, f"needle_points[{i}]")
        for i, item in enumerate(self.ocr_items):
            self._check_bounds(Point2(item.box.x, item.box.y), f"ocr[{i}].box")
        for kind in (KeypointClass.START, KeypointClass.END):
            if sum(1 for kp in self.keypoints if kp.kind is kind) > 1:
                raise SchemaError("keypoints", f"more than one {kind.value} keypoint")

    def _check_bounds(self, p: Point2, path: str):
        w, h = self.crop_size
        if not (0.0 <= p.x < w and 0.0 <= p.y < h):
            raise SchemaError(path, f"coordinate ({p.x}, {p.y}) outside [0, {w}) x [0, {h})")

    def keypoint_array(self) -> np.ndarray:
        """Keypoint positions as an (N, 2) array."""
        if not self.keypoints:
            return np.empty((0, 2))
        return np.array([[kp.position.x, kp.position.y] for kp in self.keypoints])

    def needle_array(self) -> np.ndarray:
        if not self.needle_points:
            return np.empty((0, 2))
        return np.array([[p.x, p.y] for p in self.needle_points])

    def keypoint_of(self, kind: KeypointClass) -> Optional[Keypoint]:
        for kp in self.keypoints:
            if kp.kind is kind:
                return kp
        return None


# ---------------------------------------------------------------------------
# Reading reports
# ---------------------------------------------------------------------------

class Stage(enum.Enum):
    NOTCHES = "notches"
    ELLIPSE = "ellipse"
    NEEDLE = "needle"
    OCR = "ocr"
    READING = "reading"


# The only failure reasons a report may carry.
FAILURE_REASONS = frozenset(
    {
        "insufficient_notches",
        "degenerate_ellipse",
        "insufficient_needle_points",
        "isotropic_needle",
        "no_intersection",
        "insufficient_markers",
        "no_consensus",
        "ambiguous_orientation",
    }
)

# Stages whose failure stops the pipeline; notch-orientation trouble only
# degrades to a fallback wrap-around point.
FATAL_STAGES = (Stage.ELLIPSE, Stage.NEEDLE, Stage.OCR)

_REPORT_STAGE_ORDER = (Stage.NOTCHES, Stage.ELLIPSE, Stage.NEEDLE, Stage.OCR)


@dataclass(frozen=True)
class StageStatus:
    ok: bool
    reason: Optional[str] = None

    def __post_init__(self):
        if self.ok and self.reason is not None:
            raise ValueError("ok status carries no reason")
        if not self.ok:
            if self.reason not in FAILURE_REASONS:
                raise ValueError(f"unknown failure reason {self.reason!r}")

    @classmethod
    def passed(cls) -> "StageStatus":
        return cls(True)

    @classmethod
    def failed(cls, reason: str) -> "StageStatus":
        return cls(False, reason)


class ScaleSide(enum.Enum):
    OUTER = "outer"
    INNER = "inner"


@dataclass(frozen=True)
class Reading:
    scale: ScaleSide
    value: float


@dataclass(frozen=True)
class MarkerUse:
    """One numeric OCR detection as consumed by the scale model.

    `angle` is relative to the wrap-around point (the model's independent
    variable); `inlier` says whether the robust fit kept it.
    """

    scale: ScaleSide
    angle: float
    value: float
    inlier: bool
    text: str = ""


@dataclass(frozen=True)
class GaugeReadingReport:
    stage_statuses: Mapping[Stage, StageStatus] = field(default_factory=dict)
    fitted_ellipse: Optional[Ellipse] = None
    needle_line: Optional[Line] = None
    wrap_angle: Optional[float] = None
    needle_relative_angle: Optional[float] = None
    upright_rotation: Optional[AffineTransform] = None
    markers_used: tuple[MarkerUse, ...] = ()
    readings: tuple[Reading, ...] = ()
    unit: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "stage_statuses", dict(self.stage_statuses))
        object.__setattr__(self, "markers_used", tuple(self.markers_used))
        object.__setattr__(self, "readings", tuple(self.readings))
        if self.readings:
            for stage in FATAL_STAGES:
                status = self.stage_statuses.get(stage)
                if status is not None and not status.ok:
                    raise ValueError(f"readings present although {stage.value} failed")
        for reading in self.readings:
            support = sum(
                1 for m in self.markers_used if m.scale is reading.scale and m.inlier
            )
            if support < 2:
                raise ValueError(
                    f"{reading.scale.value} reading lacks two inlier markers"
                )

    @property
    def failure_reason(self) -> Optional[str]:
        """Reason of the single fatal failure, or None when a reading exists."""
        if self.readings:
            return None
        for stage in FATAL_STAGES:
            status = self.stage_statuses.get(stage)
            if status is not None and not status.ok:
                return status.reason
        return None

    def reading_for(self, scale: ScaleSide) -> Optional[float]:
        for reading in self.readings:
            if reading.scale is scale:
                return reading.value
        return None


# ---------------------------------------------------------------------------
# JSON parsing
# ---------------------------------------------------------------------------

def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise SchemaError(path, "number must be finite")
    return v


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected an array, got {type(value).__name__}")
    return value


def _as_object(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


def parse_fixture(data: bytes | str) -> GaugeFixture:
    """Parse a UTF-8 JSON fixture document.

    Raises FixtureSyntaxError for malformed JSON and SchemaError (naming the
    offending path) for documents violating the data model.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FixtureSyntaxError(f"fixture is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FixtureSyntaxError(f"fixture is not valid JSON: {exc}") from None

    root = _as_object(doc, "$")
    if root.get("schema") != SCHEMA_VERSION:
        raise SchemaError("schema", f"expected schema version {SCHEMA_VERSION}")

    crop = root.get("crop_size", [448, 448])
    crop_list = _as_list(crop, "crop_size")
    if len(crop_list) != 2:
        raise SchemaError("crop_size", "expected [width, height]")
    dims = []
    for i, v in enumerate(crop_list):
        num = _as_number(v, f"crop_size[{i}]")
        if num != int(num) or num <= 0:
            raise SchemaError(f"crop_size[{i}]", "expected a positive integer")
        dims.append(int(num))

    keypoints = []
    for i, entry in enumerate(_as_list(root.get("keypoints", []), "keypoints")):
        obj = _as_object(entry, f"keypoints[{i}]")
        if "x" not in obj or "y" not in obj:
            raise SchemaError(f"keypoints[{i}]", "missing x or y")
        x = _as_number(obj["x"], f"keypoints[{i}].x")
        y = _as_number(obj["y"], f"keypoints[{i}].y")
        raw_kind = obj.get("class")
        try:
            kind = KeypointClass(raw_kind)
        except ValueError:
            raise SchemaError(
                f"keypoints[{i}].class",
                f"expected one of start/intermediate/end, got {raw_kind!r}",
            ) from None
        keypoints.append(Keypoint(Point2(x, y), kind))

    needle_points = []
    for i, entry in enumerate(_as_list(root.get("needle_points", []), "needle_points")):
        pair = _as_list(entry, f"needle_points[{i}]")
        if len(pair) != 2:
            raise SchemaError(f"needle_points[{i}]", "expected [x, y]")
        needle_points.append(
            Point2(
                _as_number(pair[0], f"needle_points[{i}][0]"),
                _as_number(pair[1], f"needle_points[{i}][1]"),
            )
        )

    ocr_items = []
    for i, entry in enumerate(_as_list(root.get("ocr", []), "ocr")):
        obj = _as_object(entry, f"ocr[{i}]")
        box = _as_list(obj.get("box"), f"ocr[{i}].box")
        if len(box) != 4:
            raise SchemaError(f"ocr[{i}].box", "expected [x, y, width, height]")
        bx, by, bw, bh = (_as_number(v, f"ocr[{i}].box[{j}]") for j, v in enumerate(box))
        if bw <= 0 or bh <= 0:
            raise SchemaError(f"ocr[{i}].box", "width and height must be positive")
        text = obj.get("text", "")
        if not isinstance(text, str):
            raise SchemaError(f"ocr[{i}].text", "expected a string")
        conf = _as_number(obj.get("confidence", 1.0), f"ocr[{i}].confidence")
        if not (0.0 <= conf <= 1.0):
            raise SchemaError(f"ocr[{i}].confidence", "must lie in [0, 1]")
        ocr_items.append(OcrItem(Rect(bx, by, bw, bh), text, conf))

    ground_truth = None
    if root.get("ground_truth") is not None:
        obj = _as_object(root["ground_truth"], "ground_truth")
        for key in ("reading", "range_min", "range_max"):
            if key not in obj:
                raise SchemaError(f"ground_truth.{key}", "missing required field")
        rmin = _as_number(obj["range_min"], "ground_truth.range_min")
        rmax = _as_number(obj["range_max"], "ground_truth.range_max")
        if not rmax > rmin:
            raise SchemaError("ground_truth", "range_max must exceed range_min")
        unit = obj.get("unit", "")
        if not isinstance(unit, str):
            raise SchemaError("ground_truth.unit", "expected a string")
        ground_truth = GroundTruth(
            _as_number(obj["reading"], "ground_truth.reading"), rmin, rmax, unit
        )

    return GaugeFixture(
        crop_size=(dims[0], dims[1]),
        keypoints=tuple(keypoints),
        needle_points=tuple(needle_points),
        ocr_items=tuple(ocr_items),
        ground_truth=ground_truth,
    )


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _fixture_jsonable(f: GaugeFixture) -> dict:
    doc: dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "crop_size": [f.crop_size[0], f.crop_size[1]],
        "keypoints": [
            {"x": kp.position.x, "y": kp.position.y, "class": kp.kind.value}
            for kp in f.keypoints
        ],
        "needle_points": [[p.x, p.y] for p in f.needle_points],
        "ocr": [
            {
                "box": [it.box.x, it.box.y, it.box.width, it.box.height],
                "text": it.text,
                "confidence": it.confidence,
            }
            for it in f.ocr_items
        ],
    }
    if f.ground_truth is not None:
        gt = f.ground_truth
        doc["ground_truth"] = {
            "reading": gt.reading,
            "range_min": gt.range_min,
            "range_max": gt.range_max,
            "unit": gt.unit,
        }
    return doc


def serialize_fixture(fixture: GaugeFixture) -> bytes:
    """Serialize a fixture; floats keep full precision so parse round-trips exactly."""
    return json.dumps(_fixture_jsonable(fixture), ensure_ascii=False).encode("utf-8")


def _round_sig(value: float, digits: int = 9) -> float:
    return float(format(value, f".{digits}g"))


def _round_tree(obj: Any) -> Any:
    if isinstance(obj, float):
        return _round_sig(obj)
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_tree(v) for v in obj]
    return obj


def _transform_jsonable(t: AffineTransform) -> dict:
    return {"linear": t.linear.tolist(), "translation": t.translation.tolist()}


def serialize_report(report: GaugeReadingReport) -> bytes:
    """Serialize a reading report deterministically.

    Keys follow a fixed order and every real is rounded to 9 significant
    digits, so identical reports serialize to identical bytes.
    """
    statuses = {}
    for stage in _REPORT_STAGE_ORDER:
        status = report.stage_statuses.get(stage)
        if status is None:
            continue
        entry: dict[str, Any] = {"status": "ok" if status.ok else "failed"}
        if not status.ok:
            entry["reason"] = status.reason
        statuses[stage.value] = entry

    e = report.fitted_ellipse
    doc = {
        "schema": SCHEMA_VERSION,
        "stage_statuses": statuses,
        "ellipse": None
        if e is None
        else {"center": [e.cx, e.cy], "a": e.a, "b": e.b, "theta": e.theta},
        "needle_line": None
        if report.needle_line is None
        else {
            "point": [report.needle_line.px, report.needle_line.py],
            "direction": [report.needle_line.dx, report.needle_line.dy],
        },
        "wrap_angle": report.wrap_angle,
        "needle_relative_angle": report.needle_relative_angle,
        "upright_rotation": None
        if report.upright_rotation is None
        else _transform_jsonable(report.upright_rotation),
        "markers": [
            {
                "scale": m.scale.value,
                "angle": m.angle,
                "value": m.value,
                "inlier": m.inlier,
                "text": m.text,
            }
            for m in report.markers_used
        ],
        "readings": [{"scale": r.scale.value, "value": r.value} for r in report.readings],
        "unit": report.unit,
    }
    return json.dumps(_round_tree(doc), ensure_ascii=False).encode("utf-8")
