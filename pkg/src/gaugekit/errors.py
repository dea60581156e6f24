"""Exception types raised across the package.

Every failure mode callers are expected to handle gets its own class so the
reading pipeline can translate them into stage statuses without string
matching.
"""

from __future__ import annotations


class GaugeKitError(Exception):
    """Base class for all gaugekit errors."""


class FixtureSyntaxError(GaugeKitError):
    """Input is not valid UTF-8 JSON."""


class SchemaError(GaugeKitError):
    """Input is valid JSON but violates the fixture data model."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InsufficientPoints(GaugeKitError):
    """Too few points for the requested fit."""


class DegenerateConfiguration(GaugeKitError):
    """Point configuration admits no valid ellipse."""


class DegeneratePoints(GaugeKitError):
    """All points coincide; no line is defined."""


class IsotropicScatter(GaugeKitError):
    """Point scatter has no dominant axis; a line fit would be unreliable."""

    def __init__(self, eigenvalue_ratio: float):
        super().__init__(
            f"scatter is near-isotropic (eigenvalue ratio {eigenvalue_ratio:.3f})"
        )
        self.eigenvalue_ratio = eigenvalue_ratio


class NoIntersection(GaugeKitError):
    """Line misses the unit circle."""


class ZeroVector(GaugeKitError):
    """Operation undefined for the zero vector."""


class InvalidSigma(GaugeKitError):
    """Gaussian spread parameter must be positive."""


class InsufficientMarkers(GaugeKitError):
    """Fewer than two (angle, value) pairs; no scale line can be fit."""


class NoConsensus(GaugeKitError):
    """RANSAC found no model supported by at least two pairs."""


class AmbiguousOrientation(GaugeKitError):
    """Intermediate notches split evenly across both candidate arcs.

    Carries the documented fallback (the shorter arc's midpoint) so callers
    can keep going while flagging the ambiguity.
    """

    def __init__(self, fallback_angle: float):
        super().__init__(
            "intermediate notches split evenly across both arcs; "
            f"shorter-arc fallback is {fallback_angle:.6f} rad"
        )
        self.fallback_angle = fallback_angle


class InvalidRange(GaugeKitError):
    """Scale range must satisfy max > min."""


class MissingGroundTruth(GaugeKitError):
    """Batch evaluation requires ground truth on every fixture."""


class SpecError(GaugeKitError):
    """Synthetic scene or perturbation specification violates its invariants."""
