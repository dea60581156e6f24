"""Parametric gauge scenes with exact ground truth, plus corruption operators.

A scene spec pins the scale arc on a known ellipse, the value range, the
needle position and the marker layout; generation is a pure function of the
spec, so the emitted fixture doubles as a quantitative oracle for the
reading pipeline. Perturbation reproduces the characteristic detection
defects (keypoint jitter, dropped or misread OCR boxes, unrelated numbers,
viewpoint changes) deterministically from a seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .errors import SchemaError, SpecError
from .fixtures import (
    GaugeFixture,
    GroundTruth,
    Keypoint,
    KeypointClass,
    OcrItem,
    Point2,
    Rect,
)
from .geometry import TAU, AffineTransform, Ellipse, normalize_angle
from .scale_model import DEFAULT_UNIT_LEXICON

MIN_ARC_SPAN = math.pi / 2
MAX_ARC_SPAN = 0.95 * TAU
MARKER_BOX = (20.0, 10.0)
FRAME_MARGIN = 12.0


@dataclass(frozen=True)
class SecondScale:
    range_min: float
    range_max: float
    radius_factor: float

    def __post_init__(self):
        if not self.range_max > self.range_min:
            raise SpecError("second_scale: range_max must exceed range_min")
        if self.radius_factor <= 0:
            raise SpecError("second_scale: radius_factor must be positive")


@dataclass(frozen=True)
class SceneSpec:
    ellipse: Ellipse
    arc_start: float
    arc_end: float
    direction: int  # +1: scale runs along increasing parametric angle
    range_min: float
    range_max: float
    unit: str
    n_major_notches: int
    needle_value: float
    crop_size: tuple[int, int] = (448, 448)
    marker_radius_factor: float = 0.85
    second_scale: Optional[SecondScale] = None
    n_needle_points: int = 60

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise SpecError("direction must be +1 or -1")
        if self.n_major_notches < 5:
            raise SpecError("a scale needs at least 5 major notches")
        if not self.range_max > self.range_min:
            raise SpecError("range_max must exceed range_min")
        if not self.range_min <= self.needle_value <= self.range_max:
            raise SpecError("needle_value must lie within the range")
        if self.marker_radius_factor <= 0:
            raise SpecError("marker_radius_factor must be positive")
        if self.n_needle_points < 2:
            raise SpecError("need at least 2 needle points")
        if self.crop_size[0] <= 0 or self.crop_size[1] <= 0:
            raise SpecError("crop_size must be positive")
        span = self.arc_span
        if not (MIN_ARC_SPAN <= span <= MAX_ARC_SPAN):
            raise SpecError(
                f"arc span {span:.4f} rad outside [{MIN_ARC_SPAN:.4f}, {MAX_ARC_SPAN:.4f}]"
            )

    @property
    def arc_span(self) -> float:
        return (self.direction * (self.arc_end - self.arc_start)) % TAU

    def angle_of_value(self, value: float) -> float:
        frac = (value - self.range_min) / (self.range_max - self.range_min)
        return normalize_angle(self.arc_start + self.direction * self.arc_span * frac)


def _format_value(value: float) -> str:
    text = f"{value:.10f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-") else "0"


def _marker_box(center: np.ndarray) -> Rect:
    return Rect(
        center[0] - MARKER_BOX[0] / 2, center[1] - MARKER_BOX[1] / 2, *MARKER_BOX
    )


def generate_scene(spec: SceneSpec) -> tuple[GaugeFixture, GroundTruth]:
    """Build the fixture and ground truth for one noise-free scene.

    Notches sit at equally spaced parametric angles along the arc (start
    and end classed as such), the needle is a dense point run from the
    ellipse center to the rim at the value's angle, and each notch gets an
    OCR box with the exact printed value, pulled toward or away from the
    center by the radius factor. Deterministic: no randomness involved.
    """
    ell = spec.ellipse
    n = spec.n_major_notches
    fractions = np.arange(n) / (n - 1)
    angles = spec.arc_start + spec.direction * spec.arc_span * fractions
    notch_positions = ell.point_at(angles)

    keypoints = []
    for i, pos in enumerate(notch_positions):
        kind = (
            KeypointClass.START
            if i == 0
            else KeypointClass.END
            if i == n - 1
            else KeypointClass.INTERMEDIATE
        )
        keypoints.append(Keypoint(Point2(pos[0], pos[1]), kind))

    tip = ell.point_at(spec.angle_of_value(spec.needle_value))
    center = ell.center
    lam = np.linspace(0.08, 1.0, spec.n_needle_points)[:, None]
    needle = center + lam * (tip - center)

    values = spec.range_min + (spec.range_max - spec.range_min) * fractions
    ocr_items = []
    for pos, value in zip(notch_positions, values):
        anchor = center + spec.marker_radius_factor * (pos - center)
        ocr_items.append(OcrItem(_marker_box(anchor), _format_value(value)))
    if spec.second_scale is not None:
        second = spec.second_scale
        values2 = second.range_min + (second.range_max - second.range_min) * fractions
        for pos, value in zip(notch_positions, values2):
            anchor = center + second.radius_factor * (pos - center)
            ocr_items.append(OcrItem(_marker_box(anchor), _format_value(value)))
    if spec.unit:
        anchor = center + np.array([0.0, 0.45 * ell.b])
        ocr_items.append(OcrItem(_marker_box(anchor), spec.unit))

    truth = GroundTruth(spec.needle_value, spec.range_min, spec.range_max, spec.unit)
    try:
        fixture = GaugeFixture(
            crop_size=spec.crop_size,
            keypoints=tuple(keypoints),
            needle_points=tuple(Point2(p[0], p[1]) for p in needle),
            ocr_items=tuple(ocr_items),
            ground_truth=truth,
        )
    except SchemaError as exc:
        raise SpecError(f"scene content leaves the crop frame: {exc}") from None
    return fixture, truth


# ---------------------------------------------------------------------------
# Perturbation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationSpec:
    keypoint_noise_sigma: float = 0.0
    ocr_dropout_rate: float = 0.0
    n_outlier_ocr: int = 0
    digit_corruption_rate: float = 0.0
    affine: Optional[AffineTransform] = None
    rotation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.keypoint_noise_sigma < 0:
            raise SpecError("keypoint_noise_sigma must be non-negative")
        for name in ("ocr_dropout_rate", "digit_corruption_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise SpecError(f"{name} must lie in [0, 1]")
        if self.n_outlier_ocr < 0:
            raise SpecError("n_outlier_ocr must be non-negative")
        if not math.isfinite(self.rotation):
            raise SpecError("rotation must be finite")


def _fit_to_frame(groups: list[np.ndarray], crop: tuple[int, int]) -> Optional[AffineTransform]:
    """Similarity pulling out-of-frame content back inside, or None if snug.

    A similarity keeps readings intact (the pipeline is affine-invariant),
    so viewpoint perturbations cannot silently violate the fixture's
    bounds invariant.
    """
    stacked = [g for g in groups if g.size]
    if not stacked:
        return None
    pts = np.vstack(stacked)
    size = np.array(crop, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if np.all(lo >= FRAME_MARGIN) and np.all(hi <= size - FRAME_MARGIN):
        return None
    extent = hi - lo
    avail = size - 2 * FRAME_MARGIN
    with np.errstate(divide="ignore"):
        ratios = np.where(extent > 0, avail / np.maximum(extent, 1e-12), np.inf)
    scale = min(1.0, float(ratios.min()))
    mid = (lo + hi) / 2
    return AffineTransform(scale * np.eye(2), size / 2 - scale * mid)


def perturb_scene(
    fixture: GaugeFixture, truth: GroundTruth, spec: PerturbationSpec
) -> GaugeFixture:
    """Corrupt a fixture's detections; the ground truth is untouched.

    Operations run in a fixed order off one seeded generator: affine
    distortion, rotation about the crop center (content is re-fit into the
    frame by a similarity if a viewpoint change pushed it out), Gaussian
    keypoint jitter, OCR dropout, digit corruption of surviving numeric
    texts, and injection of unrelated multi-digit numbers. A spec with all
    perturbations at zero returns the fixture unchanged.
    """
    rng = np.random.default_rng(spec.seed)
    w, h = fixture.crop_size
    keypoints = fixture.keypoint_array()
    needle = fixture.needle_array()
    centers = np.array(
        [[it.box.center.x, it.box.center.y] for it in fixture.ocr_items]
    ).reshape(-1, 2)
    halves = np.array(
        [[it.box.width / 2, it.box.height / 2] for it in fixture.ocr_items]
    ).reshape(-1, 2)

    maps: list[AffineTransform] = []
    if spec.affine is not None:
        maps.append(spec.affine)
    if spec.rotation != 0.0:
        maps.append(AffineTransform.rotation(spec.rotation, about=(w / 2, h / 2)))
    if maps:
        total = maps[0]
        for m in maps[1:]:
            total = m.compose(total)
        keypoints = total.apply(keypoints) if keypoints.size else keypoints
        needle = total.apply(needle) if needle.size else needle
        centers = total.apply(centers) if centers.size else centers
        fit = _fit_to_frame(
            [keypoints, needle, centers - halves, centers + halves], fixture.crop_size
        )
        if fit is not None:
            keypoints = fit.apply(keypoints) if keypoints.size else keypoints
            needle = fit.apply(needle) if needle.size else needle
            centers = fit.apply(centers) if centers.size else centers

    if spec.keypoint_noise_sigma > 0 and keypoints.size:
        keypoints = keypoints + rng.normal(0.0, spec.keypoint_noise_sigma, keypoints.shape)

    limit = np.array([w, h]) - 1e-6
    if keypoints.size:
        keypoints = np.clip(keypoints, 0.0, limit)
    if needle.size:
        needle = np.clip(needle, 0.0, limit)

    new_keypoints = tuple(
        Keypoint(Point2(p[0], p[1]), kp.kind) for p, kp in zip(keypoints, fixture.keypoints)
    )
    new_needle = tuple(Point2(p[0], p[1]) for p in needle)

    if spec.ocr_dropout_rate > 0 and len(fixture.ocr_items):
        keep = rng.random(len(fixture.ocr_items)) >= spec.ocr_dropout_rate
    else:
        keep = np.ones(len(fixture.ocr_items), dtype=bool)

    items: list[OcrItem] = []
    for idx, item in enumerate(fixture.ocr_items):
        if not keep[idx]:
            continue
        corner = np.clip(centers[idx] - halves[idx], 0.0, limit)
        text = item.text
        if spec.digit_corruption_rate > 0 and any(ch.isdigit() for ch in text):
            if rng.random() < spec.digit_corruption_rate:
                text = _corrupt_digit(text, rng)
        items.append(
            OcrItem(
                Rect(corner[0], corner[1], item.box.width, item.box.height),
                text,
                item.confidence,
            )
        )

    for _ in range(spec.n_outlier_ocr):
        margin = FRAME_MARGIN + MARKER_BOX[0] / 2
        pos = rng.uniform([margin, margin], [w - margin, h - margin])
        length = int(rng.integers(3, 7))
        digits = [str(rng.integers(1, 10))] + [str(rng.integers(0, 10)) for _ in range(length - 1)]
        items.append(OcrItem(_marker_box(pos), "".join(digits)))

    return GaugeFixture(
        crop_size=fixture.crop_size,
        keypoints=new_keypoints,
        needle_points=new_needle,
        ocr_items=tuple(items),
        ground_truth=fixture.ground_truth if fixture.ground_truth is not None else truth,
    )


def _corrupt_digit(text: str, rng: np.random.Generator) -> str:
    positions = [k for k, ch in enumerate(text) if ch.isdigit()]
    pos = positions[int(rng.integers(0, len(positions)))]
    old = int(text[pos])
    new = (old + 1 + int(rng.integers(0, 9))) % 10
    return text[:pos] + str(new) + text[pos + 1 :]


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def _load_doc(doc) -> dict:
    if isinstance(doc, (bytes, str)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    return doc


def _require(doc: dict, key: str) -> Any:
    if key not in doc:
        raise SpecError(f"missing required field {key!r}")
    return doc[key]


def parse_scene_spec(doc) -> SceneSpec:
    """SceneSpec from a JSON document (object, bytes, or str)."""
    doc = _load_doc(doc)
    try:
        e = _require(doc, "ellipse")
        ellipse = Ellipse(
            e["center"][0], e["center"][1], e["a"], e["b"], e.get("theta", 0.0)
        )
        arc = _require(doc, "scale_arc")
        rng_doc = _require(doc, "range")
        second = None
        if doc.get("second_scale") is not None:
            s = doc["second_scale"]
            second = SecondScale(
                s["range"]["min"], s["range"]["max"], s["radius_factor"]
            )
        return SceneSpec(
            ellipse=ellipse,
            arc_start=float(arc["start_angle"]),
            arc_end=float(arc["end_angle"]),
            direction=int(arc["direction"]),
            range_min=float(rng_doc["min"]),
            range_max=float(rng_doc["max"]),
            unit=str(rng_doc.get("unit", "")),
            n_major_notches=int(_require(doc, "n_major_notches")),
            needle_value=float(_require(doc, "needle_value")),
            crop_size=tuple(doc.get("crop_size", (448, 448))),
            marker_radius_factor=float(doc.get("marker_radius_factor", 0.85)),
            second_scale=second,
            n_needle_points=int(doc.get("n_needle_points", 60)),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed scene spec: {exc!r}") from None


def scene_spec_to_jsonable(spec: SceneSpec) -> dict:
    doc: dict[str, Any] = {
        "crop_size": list(spec.crop_size),
        "ellipse": {
            "center": [spec.ellipse.cx, spec.ellipse.cy],
            "a": spec.ellipse.a,
            "b": spec.ellipse.b,
            "theta": spec.ellipse.theta,
        },
        "scale_arc": {
            "start_angle": spec.arc_start,
            "end_angle": spec.arc_end,
            "direction": spec.direction,
        },
        "range": {"min": spec.range_min, "max": spec.range_max, "unit": spec.unit},
        "n_major_notches": spec.n_major_notches,
        "needle_value": spec.needle_value,
        "marker_radius_factor": spec.marker_radius_factor,
        "n_needle_points": spec.n_needle_points,
    }
    if spec.second_scale is not None:
        doc["second_scale"] = {
            "range": {
                "min": spec.second_scale.range_min,
                "max": spec.second_scale.range_max,
            },
            "radius_factor": spec.second_scale.radius_factor,
        }
    return doc


def parse_perturbation_spec(doc) -> PerturbationSpec:
    """PerturbationSpec from a JSON document; every field has a default."""
    doc = _load_doc(doc)
    try:
        affine = None
        if doc.get("affine") is not None:
            a = doc["affine"]
            affine = AffineTransform(a["linear"], a.get("translation", [0.0, 0.0]))
        return PerturbationSpec(
            keypoint_noise_sigma=float(doc.get("keypoint_noise_sigma", 0.0)),
            ocr_dropout_rate=float(doc.get("ocr_dropout_rate", 0.0)),
            n_outlier_ocr=int(doc.get("n_outlier_ocr", 0)),
            digit_corruption_rate=float(doc.get("digit_corruption_rate", 0.0)),
            affine=affine,
            rotation=float(doc.get("rotation", 0.0)),
            seed=int(doc.get("seed", 0)),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed perturbation spec: {exc!r}") from None


def perturbation_to_jsonable(spec: PerturbationSpec) -> dict:
    doc: dict[str, Any] = {
        "keypoint_noise_sigma": spec.keypoint_noise_sigma,
        "ocr_dropout_rate": spec.ocr_dropout_rate,
        "n_outlier_ocr": spec.n_outlier_ocr,
        "digit_corruption_rate": spec.digit_corruption_rate,
        "rotation": spec.rotation,
        "seed": spec.seed,
    }
    if spec.affine is not None:
        doc["affine"] = {
            "linear": spec.affine.linear.tolist(),
            "translation": spec.affine.translation.tolist(),
        }
    return doc


# ---------------------------------------------------------------------------
# Random spec sampling (for sweeps and acceptance batches)
# ---------------------------------------------------------------------------

def sample_scene_spec(
    rng: np.random.Generator,
    dual_scale_probability: float = 0.2,
    crop_size: tuple[int, int] = (448, 448),
) -> SceneSpec:
    """Draw a plausible scene: spans 120-340 degrees, value spans covering
    four decades, a mix of zero-based, negative and offset ranges, and the
    requested share of dual-scale faces."""
    w, h = crop_size
    short = min(w, h)
    a = rng.uniform(0.27, 0.36) * short
    ellipse = Ellipse(
        w / 2 + rng.uniform(-6, 6),
        h / 2 + rng.uniform(-6, 6),
        a,
        a * rng.uniform(0.6, 1.0),
        rng.uniform(0, math.pi),
    )
    direction = 1 if rng.random() < 0.5 else -1
    span = math.radians(rng.uniform(120.0, 340.0))
    arc_start = rng.uniform(0.0, TAU)

    value_span = 10.0 ** rng.uniform(-1.0, 3.0)
    style = rng.random()
    if style < 0.5:
        range_min = 0.0
    elif style < 0.75:
        range_min = -value_span * rng.uniform(0.2, 0.6)
    else:
        range_min = value_span * rng.uniform(0.1, 2.0)

    second = None
    if rng.random() < dual_scale_probability:
        span2 = 10.0 ** rng.uniform(-1.0, 3.0)
        min2 = 0.0 if rng.random() < 0.7 else -0.3 * span2
        second = SecondScale(min2, min2 + span2, radius_factor=rng.uniform(1.10, 1.16))

    return SceneSpec(
        ellipse=ellipse,
        arc_start=arc_start,
        arc_end=normalize_angle(arc_start + direction * span),
        direction=direction,
        range_min=range_min,
        range_max=range_min + value_span,
        unit=str(rng.choice(DEFAULT_UNIT_LEXICON)),
        n_major_notches=int(rng.integers(5, 14)),
        needle_value=range_min + value_span * rng.uniform(0.02, 0.98),
        crop_size=crop_size,
        marker_radius_factor=rng.uniform(0.82, 0.90),
        second_scale=second,
    )


def sample_affine(
    rng: np.random.Generator,
    max_condition: float = 3.0,
    scale_range: tuple[float, float] = (0.85, 1.15),
    max_translation: float = 25.0,
    allow_reflection: bool = False,
) -> AffineTransform:
    """Random invertible map with bounded condition number.

    Built as R(alpha) @ diag(s1, s2) @ R(beta) so the singular-value ratio
    (the condition number) is exactly the drawn value.
    """
    cond = rng.uniform(1.0, max_condition)
    overall = rng.uniform(*scale_range)
    s = np.array([overall * math.sqrt(cond), overall / math.sqrt(cond)])
    alpha, beta = rng.uniform(0.0, TAU, size=2)

    def rot(t):
        c, si = math.cos(t), math.sin(t)
        return np.array([[c, -si], [si, c]])

    linear = rot(alpha) @ np.diag(s) @ rot(beta)
    if allow_reflection and rng.random() < 0.5:
        linear = np.diag([1.0, -1.0]) @ linear
    translation = rng.uniform(-max_translation, max_translation, size=2)
    return AffineTransform(linear, translation)
