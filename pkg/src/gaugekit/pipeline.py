"""Fixture-to-reading orchestration with per-stage failure accounting.

read_gauge never raises on a valid fixture: every way the computation can
die is folded into a stage status, and the pipeline stops at the first
fatal stage so each failed report carries exactly one failure reason.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import geometry, scale_model
from .errors import (
    AmbiguousOrientation,
    DegenerateConfiguration,
    DegeneratePoints,
    InsufficientPoints,
    InvalidRange,
    IsotropicScatter,
    MissingGroundTruth,
    NoConsensus,
    NoIntersection,
    ZeroVector,
)
from .fixtures import (
    GaugeFixture,
    GaugeReadingReport,
    KeypointClass,
    MarkerUse,
    Reading,
    ScaleSide,
    Stage,
    StageStatus,
)

MIN_NOTCHES = 5


@dataclass(frozen=True)
class RansacSettings:
    iterations: int = 200
    threshold_fraction: float = 0.02
    seed: int = 0
    enabled: bool = True  # False switches to the plain least-squares baseline


@dataclass(frozen=True)
class MeanShiftSettings:
    bandwidth_fraction: float = 0.05


@dataclass(frozen=True)
class PipelineConfig:
    ransac: RansacSettings = field(default_factory=RansacSettings)
    meanshift: MeanShiftSettings = field(default_factory=MeanShiftSettings)
    unit_lexicon_path: Optional[str] = None
    failure_error_threshold_percent: float = 10.0

    @classmethod
    def from_json(cls, doc: dict) -> "PipelineConfig":
        ransac = doc.get("ransac", {})
        meanshift = doc.get("meanshift", {})
        return cls(
            ransac=RansacSettings(
                iterations=int(ransac.get("iterations", 200)),
                threshold_fraction=float(ransac.get("threshold_fraction", 0.02)),
                seed=int(ransac.get("seed", 0)),
                enabled=bool(ransac.get("enabled", True)),
            ),
            meanshift=MeanShiftSettings(
                bandwidth_fraction=float(meanshift.get("bandwidth_fraction", 0.05))
            ),
            unit_lexicon_path=doc.get("unit_lexicon_path"),
            failure_error_threshold_percent=float(
                doc.get("failure_error_threshold_percent", 10.0)
            ),
        )

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def unit_lexicon(self) -> Sequence[str]:
        if self.unit_lexicon_path is None:
            return scale_model.DEFAULT_UNIT_LEXICON
        return scale_model.load_unit_lexicon(self.unit_lexicon_path)


def _needle_segment(line: geometry.Line, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Extreme orthogonal projections of the needle pixels onto the fitted line."""
    params = line.project_parameter(points)
    return (
        line.point + line.direction * float(params.min()),
        line.point + line.direction * float(params.max()),
    )


def _wrap_and_notch_status(
    fixture: GaugeFixture, transform: geometry.AffineTransform
) -> tuple[float, StageStatus]:
    angles = {}
    for kp in fixture.keypoints:
        try:
            angles[kp] = geometry.parametric_angle(transform.apply(kp.position.as_array()))
        except ZeroVector:
            continue  # a notch at the ellipse center carries no direction
    start = fixture.keypoint_of(KeypointClass.START)
    end = fixture.keypoint_of(KeypointClass.END)

    if start in angles and end in angles:
        intermediates = [
            a for kp, a in angles.items() if kp.kind is KeypointClass.INTERMEDIATE
        ]
        try:
            return (
                scale_model.wrap_around_angle(angles[start], angles[end], intermediates),
                StageStatus.passed(),
            )
        except AmbiguousOrientation as exc:
            return exc.fallback_angle, StageStatus.failed("ambiguous_orientation")

    # Start or end missing: place the wrap in the largest notch gap.
    if not angles:  # unreachable after a successful fit, kept for totality
        return 0.0, StageStatus.failed("ambiguous_orientation")
    return (
        scale_model.wrap_from_gaps(list(angles.values())),
        StageStatus.failed("ambiguous_orientation"),
    )


def _back_map_line(line: geometry.Line, inverse: geometry.AffineTransform) -> geometry.Line:
    p = inverse.apply(line.point)
    q = inverse.apply(line.point + line.direction)
    return geometry.Line(p[0], p[1], q[0] - p[0], q[1] - p[1])


def _upright_rotation(
    ellipse: geometry.Ellipse, inverse: geometry.AffineTransform, wrap_angle: float
) -> Optional[geometry.AffineTransform]:
    wrap_img = inverse.apply(np.array([math.cos(wrap_angle), math.sin(wrap_angle)]))
    offset = wrap_img - ellipse.center
    norm = float(np.linalg.norm(offset))
    if norm == 0.0:
        return None
    return geometry.orientation_correction(offset / norm)


def read_gauge(fixture: GaugeFixture, config: Optional[PipelineConfig] = None) -> GaugeReadingReport:
    """Compute the calibrated reading(s) for one fixture.

    Stages run in order: ellipse fit over all notch keypoints, wrap-around
    from the start/end notches, needle line fit and circle intersection,
    marker projection and per-scale robust model fit, then evaluation at the
    needle angle. Each stage's outcome lands in the report; the first fatal
    failure ends the run with everything computed so far.
    """
    cfg = config or PipelineConfig()
    statuses: dict[Stage, StageStatus] = {}

    keypoints = fixture.keypoint_array()
    if len(keypoints) < MIN_NOTCHES:
        statuses[Stage.ELLIPSE] = StageStatus.failed("insufficient_notches")
        return GaugeReadingReport(stage_statuses=statuses)
    try:
        ellipse = geometry.fit_ellipse_direct(keypoints)
    except (InsufficientPoints, DegenerateConfiguration):
        statuses[Stage.ELLIPSE] = StageStatus.failed("degenerate_ellipse")
        return GaugeReadingReport(stage_statuses=statuses)
    statuses[Stage.ELLIPSE] = StageStatus.passed()

    transform = geometry.circularize(ellipse)
    inverse = transform.inverse()

    wrap, notch_status = _wrap_and_notch_status(fixture, transform)
    statuses[Stage.NOTCHES] = notch_status
    upright = _upright_rotation(ellipse, inverse, wrap)

    def finish(**kwargs) -> GaugeReadingReport:
        return GaugeReadingReport(
            stage_statuses=statuses,
            fitted_ellipse=ellipse,
            wrap_angle=wrap,
            upright_rotation=upright,
            **kwargs,
        )

    needle = fixture.needle_array()
    if len(needle) < 2:
        statuses[Stage.NEEDLE] = StageStatus.failed("insufficient_needle_points")
        return finish()
    needle_c = transform.apply(needle)
    try:
        needle_line = geometry.odr_fit_line(needle_c)
    except (InsufficientPoints, DegeneratePoints):
        statuses[Stage.NEEDLE] = StageStatus.failed("insufficient_needle_points")
        return finish()
    except IsotropicScatter:
        statuses[Stage.NEEDLE] = StageStatus.failed("isotropic_needle")
        return finish()
    needle_img = _back_map_line(needle_line, inverse)

    try:
        candidates = geometry.line_circle_intersections(needle_line)
    except NoIntersection:
        statuses[Stage.NEEDLE] = StageStatus.failed("no_intersection")
        return finish(needle_line=needle_img)
    tip = geometry.pick_needle_intersection(candidates, _needle_segment(needle_line, needle_c))
    needle_rel = scale_model.relative_angle(geometry.parametric_angle(tip), wrap)
    statuses[Stage.NEEDLE] = StageStatus.passed()

    # Project numeric OCR detections onto the circle; the rest are unit
    # candidates and need no geometry.
    markers: list[scale_model.ScaleMarker] = []
    for item in fixture.ocr_items:
        value = scale_model.parse_numeric_token(item.text)
        if value is None:
            continue
        center = transform.apply(item.box.center.as_array())
        try:
            on_circle, radius = geometry.radial_project_to_circle(center)
        except ZeroVector:
            continue
        markers.append(
            scale_model.ScaleMarker(
                angle=geometry.parametric_angle(on_circle),
                value=value,
                radius=radius,
                source_text=item.text,
            )
        )
    unit = scale_model.extract_unit(fixture.ocr_items, cfg.unit_lexicon())

    outer, inner = scale_model.split_inner_outer(markers)
    readings: list[Reading] = []
    marker_uses: list[MarkerUse] = []
    no_consensus = False
    for side, group in ((ScaleSide.OUTER, outer), (ScaleSide.INNER, inner)):
        if not group:
            continue
        rel_angles = [scale_model.relative_angle(m.angle, wrap) for m in group]
        if len(group) < 2:
            marker_uses.extend(
                MarkerUse(side, a, m.value, False, m.source_text)
                for a, m in zip(rel_angles, group)
            )
            continue
        pairs = list(zip(rel_angles, (m.value for m in group)))
        threshold = scale_model.default_inlier_threshold(
            [m.value for m in group], cfg.ransac.threshold_fraction
        )
        try:
            if cfg.ransac.enabled:
                model = scale_model.ransac_fit_linear(
                    pairs,
                    threshold,
                    iterations=cfg.ransac.iterations,
                    seed=cfg.ransac.seed,
                    wrap_angle=wrap,
                )
            else:
                model = scale_model.least_squares_fit_linear(pairs, wrap_angle=wrap)
        except NoConsensus:
            no_consensus = True
            marker_uses.extend(
                MarkerUse(side, a, m.value, False, m.source_text)
                for a, m in zip(rel_angles, group)
            )
            continue
        inlier_set = set(model.inliers)
        marker_uses.extend(
            MarkerUse(side, a, m.value, k in inlier_set, m.source_text)
            for k, (a, m) in enumerate(zip(rel_angles, group))
        )
        readings.append(Reading(side, model.value_at(needle_rel)))

    if readings:
        statuses[Stage.OCR] = StageStatus.passed()
    elif max(len(outer), len(inner)) < 2:
        statuses[Stage.OCR] = StageStatus.failed("insufficient_markers")
    elif no_consensus:
        statuses[Stage.OCR] = StageStatus.failed("no_consensus")
    else:  # unreachable defensively: a fit either succeeds or lacks consensus
        statuses[Stage.OCR] = StageStatus.failed("insufficient_markers")

    return finish(
        needle_line=needle_img,
        needle_relative_angle=needle_rel,
        markers_used=tuple(marker_uses),
        readings=tuple(readings),
        unit=unit,
    )


def compute_relative_error(
    predicted: float, truth: float, range_min: float, range_max: float
) -> float:
    """Reading error as a percentage of the full scale range."""
    if not range_max > range_min:
        raise InvalidRange(f"range_max {range_max} must exceed range_min {range_min}")
    return 100.0 * abs(predicted - truth) / (range_max - range_min)


def matched_reading(report: GaugeReadingReport, gt) -> Optional[float]:
    """Reading of the scale whose inlier marker values best match the
    ground-truth range; dual-scale gauges report one value per scale and the
    range tells them apart."""
    if not report.readings:
        return None
    if len(report.readings) == 1:
        return report.readings[0].value

    span = gt.range_max - gt.range_min

    def mismatch(reading: Reading) -> float:
        values = [
            m.value for m in report.markers_used if m.scale is reading.scale and m.inlier
        ]
        if not values:
            return math.inf
        return (
            abs(min(values) - gt.range_min) + abs(max(values) - gt.range_max)
        ) / span

    return min(report.readings, key=mismatch).value


@dataclass(frozen=True)
class EvalSummary:
    """Batch metrics: per-category mean relative error and stage failure shares."""

    n_fixtures: int
    n_readings: int
    reading_failure_share: float
    full_re_mean: Optional[float]
    ocr_success_re_mean: Optional[float]
    stage_failure_rates: dict[str, float]

    def to_jsonable(self) -> dict:
        return {
            "n_fixtures": self.n_fixtures,
            "n_readings": self.n_readings,
            "reading_failure_share": self.reading_failure_share,
            "full_re_mean_percent": self.full_re_mean,
            "ocr_success_re_mean_percent": self.ocr_success_re_mean,
            "stage_failure_rates": dict(self.stage_failure_rates),
        }

    def to_table(self) -> str:
        def fmt(v):
            return "-" if v is None else f"{v:.4f}"

        lines = [
            f"fixtures            {self.n_fixtures}",
            f"readings computed   {self.n_readings}",
            f"reading failures    {self.reading_failure_share * 100:.1f}%",
            f"full RE mean        {fmt(self.full_re_mean)}%",
            f"OCR-success RE mean {fmt(self.ocr_success_re_mean)}%",
            "stage failure rates:",
        ]
        for stage, rate in self.stage_failure_rates.items():
            lines.append(f"  {stage:<8} {rate * 100:.1f}%")
        return "\n".join(lines)


_RATE_STAGES = (Stage.NOTCHES, Stage.ELLIPSE, Stage.NEEDLE, Stage.OCR)


def evaluate_batch(
    fixtures: Sequence[GaugeFixture], config: Optional[PipelineConfig] = None
) -> EvalSummary:
    """Read every fixture and aggregate error and failure statistics.

    Every fixture must carry ground truth. A stage is charged with failure
    when it failed and either no reading came out or the reading was off by
    more than the configured error threshold (a flagged stage that still led
    to an accurate reading is not charged). An empty batch yields an empty
    summary.
    """
    cfg = config or PipelineConfig()
    for i, f in enumerate(fixtures):
        if f.ground_truth is None:
            raise MissingGroundTruth(f"fixtures[{i}] has no ground truth")

    n = len(fixtures)
    if n == 0:
        return EvalSummary(0, 0, 0.0, None, None, {s.value: 0.0 for s in _RATE_STAGES})

    full_errors: list[float] = []
    ocr_success_errors: list[float] = []
    stage_failures = {s: 0 for s in _RATE_STAGES}
    n_readings = 0

    for f in fixtures:
        gt = f.ground_truth
        report = read_gauge(f, cfg)
        predicted = matched_reading(report, gt)
        error = None
        if predicted is not None:
            n_readings += 1
            error = compute_relative_error(predicted, gt.reading, gt.range_min, gt.range_max)
            full_errors.append(error)
            ocr = report.stage_statuses.get(Stage.OCR)
            if ocr is not None and ocr.ok:
                ocr_success_errors.append(error)
        for stage in _RATE_STAGES:
            status = report.stage_statuses.get(stage)
            if status is None or status.ok:
                continue
            if error is None or error > cfg.failure_error_threshold_percent:
                stage_failures[stage] += 1

    return EvalSummary(
        n_fixtures=n,
        n_readings=n_readings,
        reading_failure_share=(n - n_readings) / n,
        full_re_mean=float(np.mean(full_errors)) if full_errors else None,
        ocr_success_re_mean=float(np.mean(ocr_success_errors)) if ocr_success_errors else None,
        stage_failure_rates={s.value: stage_failures[s] / n for s in _RATE_STAGES},
    )


def serialize_summary(summary: EvalSummary) -> bytes:
    """Deterministic JSON for an evaluation summary (9 significant digits)."""
    from .fixtures import _round_tree

    return json.dumps(_round_tree(summary.to_jsonable()), ensure_ascii=False).encode("utf-8")
