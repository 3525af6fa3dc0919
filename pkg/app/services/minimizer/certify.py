"""
Certify that a minimized broken geodesic has its break points inside.

For every break point the two-segment functional is sampled on the boundary of
its section and compared with its value at the minimizer. The truncated
functional, with the section's own lens removed, gives three more diagnostics:
its spread over the active-pair disk, its growth towards the sleeper window
ends and the discount the lens gives at the section centre, which must lie within a
factor of four of its predicted size.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel

from app.services.lattice import CouplingParams
from app.services.lattice.coupling import FloatArray
from app.services.minimizer.descent import BrokenGeodesic
from app.services.minimizer.functional import LensMode, SectionChart, local_functional
from app.utils.exceptions import SolverError
from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

BOUNDARY_MARGIN = 1e-3
LENS_BALL_RADIUS = 0.5
LENS_GAP_FACTOR = 4.0


class PointCertificate(BaseModel):
    """Certification of one break point."""

    index: int
    interior_value: float
    margin: float
    margin_ok: bool
    vertical_min: float
    horizontal_min: float
    boundary_ok: bool
    flatness_spread: float
    convexity_margin: float
    convexity_ok: bool
    lens_gap: float | None = None
    lens_gap_expected: float | None = None
    lens_gap_ratio: float | None = None
    lens_ok: bool | None = None
    failed_evaluations: int = 0
    passed: bool


class CertificationReport(BaseModel):
    """Machine-readable certification of a broken geodesic."""

    grid_density: int
    points: list[PointCertificate]
    passed: bool

    @property
    def failures(self) -> list[str]:
        """Names of the failed checks, one entry per point and check."""
        out = []
        for cert in self.points:
            for name in ("margin_ok", "boundary_ok", "convexity_ok", "lens_ok"):
                if getattr(cert, name) is False:
                    out.append(f"point {cert.index}: {name.removesuffix('_ok')}")
            if cert.failed_evaluations:
                out.append(f"point {cert.index}: {cert.failed_evaluations} failed")
        return out


def _nanmin(values: FloatArray) -> float:
    finite = values[~np.isnan(values)]
    return float(finite.min()) if finite.size else math.nan


def _vertical_grid(u: FloatArray, rho: float, density: int) -> list[FloatArray]:
    out = []
    for k in range(density):
        angle = 2.0 * math.pi * k / density
        v = u.copy()
        v[:2] = rho * math.cos(angle), rho * math.sin(angle)
        out.append(v)
    return out


def _sleeper_shifts(u: FloatArray, offset: float) -> list[FloatArray]:
    out = []
    for k in range(2, u.size):
        for sign in (1.0, -1.0):
            v = u.copy()
            v[k] = sign * offset
            out.append(v)
    return out


def lens_gap_verdict(gap: float, expected: float) -> dict[str, float | bool | None]:
    """
    Compare the lens discount at a section centre with its predicted size.

    Args:
        gap: Truncated minus full functional at the centre
        expected: Predicted gap ``eps * eps^r * inf eta`` over the half-radius ball

    Returns:
        Certificate fields ``lens_gap``, ``lens_gap_expected``, ``lens_gap_ratio``
        and ``lens_ok``; the gap passes when positive and within
        ``LENS_GAP_FACTOR`` of the prediction
    """
    ratio = gap / expected if expected > 0.0 else None
    within = ratio is not None and 1.0 / LENS_GAP_FACTOR <= ratio <= LENS_GAP_FACTOR
    return {
        "lens_gap": gap,
        "lens_gap_expected": expected,
        "lens_gap_ratio": ratio,
        "lens_ok": gap > 0.0 and within,
    }


def _certify_point(
    bg: BrokenGeodesic,
    j: int,
    cp: CouplingParams | None,
    grid_density: int,
    segment_tol: float,
    integrator_tol: float | None,
    workers: int,
) -> PointCertificate:
    chart = SectionChart(bg.sections[j])
    p_prev, x, p_next = bg.points[j - 1], bg.points[j], bg.points[j + 1]
    section = chart.section
    u = chart.to_local(x)
    interior = bg.segments[j - 1].length + bg.segments[j].length

    vertical = _vertical_grid(u, section.rho_v, grid_density)
    horizontal = _sleeper_shifts(u, section.rho_h)
    disk = [np.concatenate([[0.0, 0.0], u[2:]])]
    disk += _vertical_grid(u, 0.5 * section.rho_v, grid_density)
    level = u.copy()
    level[2:] = 0.0
    convex = [level, *_sleeper_shifts(u, section.rho_h)]
    tasks: list[tuple[FloatArray, LensMode]] = [
        *((v, "with-lens") for v in vertical + horizontal),
        *((v, "truncated") for v in disk + convex),
    ]
    if cp is not None:
        center = np.zeros(chart.dim)
        tasks += [(center, "with-lens"), (center, "truncated")]

    def evaluate(task: tuple[FloatArray, LensMode]) -> float:
        v, mode = task
        try:
            return local_functional(
                p_prev,
                chart.to_point(v),
                p_next,
                section,
                cp,
                mode,
                segment_tol,
                integrator_tol,
            ).value
        except SolverError as e:
            logger.warning(f"Certification sample failed: {e}")
            return math.nan

    values = np.array(ordered_map(evaluate, tasks, workers))
    failed = int(np.count_nonzero(np.isnan(values)))
    n_v, n_h, n_d = len(vertical), len(horizontal), len(disk)
    v_vals = values[:n_v]
    h_vals = values[n_v : n_v + n_h]
    d_vals = values[n_v + n_h : n_v + n_h + n_d]
    c_vals = values[n_v + n_h + n_d : n_v + n_h + n_d + len(convex)]

    margin = chart.margin(u)
    margin_ok = margin >= BOUNDARY_MARGIN * min(section.rho_v, section.rho_h)
    vertical_min = _nanmin(v_vals)
    horizontal_min = _nanmin(h_vals)
    boundary_ok = bool(min(vertical_min, horizontal_min) > interior)
    convexity_margin = float(np.min(c_vals[1:]) - c_vals[0])
    convexity_ok = bool(convexity_margin > 0.0)

    lens: dict[str, float | bool | None] = {}
    if cp is not None:
        gap = float(values[-1] - values[-2])
        expected = cp.eps * cp.eps**cp.r * cp.bump.inf_on_ball(LENS_BALL_RADIUS)
        lens = lens_gap_verdict(gap, expected)
    passed = (
        margin_ok
        and boundary_ok
        and convexity_ok
        and lens.get("lens_ok", True) is not False
        and failed == 0
    )
    logger.info(
        f"Break point {j}: margin {margin:.3e}, boundary gap "
        f"{min(vertical_min, horizontal_min) - interior:.3e}, "
        f"convexity {convexity_margin:.3e}"
    )
    return PointCertificate(
        index=j,
        interior_value=interior,
        margin=margin,
        margin_ok=margin_ok,
        vertical_min=vertical_min,
        horizontal_min=horizontal_min,
        boundary_ok=boundary_ok,
        flatness_spread=-_nanmin(-d_vals) - _nanmin(d_vals),
        convexity_margin=convexity_margin,
        convexity_ok=convexity_ok,
        failed_evaluations=failed,
        passed=passed,
        **lens,
    )


def certify_interior(
    bg: BrokenGeodesic,
    cp: CouplingParams | None,
    grid_density: int = 8,
    segment_tol: float = 1e-9,
    integrator_tol: float | None = None,
    workers: int = 1,
) -> CertificationReport:
    """
    Check the interior-minimum mechanism at every break point.

    Args:
        bg: Minimized broken geodesic
        cp: Coupling parameters it was minimized with
        grid_density: Samples on each boundary circle
        segment_tol: Landing tolerance of the coupled segments
        integrator_tol: Tolerance of their outer integrations
        workers: Threads for the independent evaluations

    Returns:
        Report with one certificate per break point
    """
    certificates = [
        _certify_point(bg, j, cp, grid_density, segment_tol, integrator_tol, workers)
        for j in range(1, len(bg.points) - 1)
    ]
    report = CertificationReport(
        grid_density=grid_density,
        points=certificates,
        passed=all(c.passed for c in certificates),
    )
    if not report.passed:
        logger.warning(f"Certification failed: {', '.join(report.failures)}")
    return report
