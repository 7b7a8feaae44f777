"""Exception types shared across the package."""
from __future__ import annotations

__all__ = [
    "ShadowlabError",
    "SurfaceError",
    "FieldSpecError",
    "EscapedDomain",
    "HorizonExceeded",
    "NearSingularity",
    "DegenerateField",
    "NonMonotoneWarp",
    "StabilityInconclusive",
    "UnresolvedSector",
    "GluingError",
    "ConfigError",
    "CertificateRefused",
    "WitnessRefused",
    "BudgetExceeded",
    "UpgradeError",
    "LeftCoreRegion",
]


class ShadowlabError(Exception):
    """Base class for all package-specific failures."""


class SurfaceError(ShadowlabError):
    pass


class FieldSpecError(ShadowlabError):
    pass


class EscapedDomain(ShadowlabError):
    """An orbit left the plane patch before the requested time.

    Attributes: ``exit_time`` (unsigned time of the first recorded sample
    outside the patch) and ``point`` (last in-bounds position).
    """

    def __init__(self, exit_time: float, point):
        super().__init__(f"trajectory escaped the patch at |t|~{exit_time:.6g}")
        self.exit_time = float(exit_time)
        self.point = point


class HorizonExceeded(ShadowlabError):
    pass


class NearSingularity(ShadowlabError):
    pass


class DegenerateField(ShadowlabError):
    pass


class NonMonotoneWarp(ShadowlabError):
    pass


class StabilityInconclusive(ShadowlabError):
    """Orbit neither converged nor exited by the horizon; verdict withheld."""


class UnresolvedSector(ShadowlabError):
    pass


class GluingError(ShadowlabError):
    pass


class ConfigError(ShadowlabError):
    pass


class CertificateRefused(ShadowlabError):
    pass


class WitnessRefused(ShadowlabError):
    pass


class BudgetExceeded(ShadowlabError):
    pass


class UpgradeError(ShadowlabError):
    """Precondition of the Rep(eps) upgrade violated (oriented error too big)."""


class LeftCoreRegion(ShadowlabError):
    """A curve left the region where the time-warp upgrade is justified."""

    def __init__(self, when: float, where):
        super().__init__(f"curve left the core region K~ near t={when:.6g}")
        self.when = float(when)
        self.where = where
