"""Broken-geodesic minimization over section break points and its certification."""

from app.services.minimizer.certify import (
    CertificationReport,
    PointCertificate,
    certify_interior,
    lens_gap_verdict,
)
from app.services.minimizer.descent import (
    BrokenGeodesic,
    MinimizerOptions,
    bfgs_update,
    dogleg_step,
    minimize,
)
from app.services.minimizer.functional import (
    LensMode,
    LocalFunctional,
    SectionChart,
    cancellation_bounds,
    local_functional,
    mode_coupling,
    section_lens,
)

__all__ = [
    "BrokenGeodesic",
    "CertificationReport",
    "LensMode",
    "LocalFunctional",
    "MinimizerOptions",
    "PointCertificate",
    "SectionChart",
    "bfgs_update",
    "cancellation_bounds",
    "certify_interior",
    "dogleg_step",
    "lens_gap_verdict",
    "local_functional",
    "minimize",
    "mode_coupling",
    "section_lens",
]
