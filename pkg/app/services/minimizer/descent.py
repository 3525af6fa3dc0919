"""
Minimize the length of a broken geodesic over its break points.

Break points sit on the interior sections of an itinerary; the first and last
sections carry the fixed endpoints. Each sweep visits the break points in
order (Gauss-Seidel) and improves one at a time with a trust-region step on
its two-segment functional. The model Hessian of each block is a BFGS matrix
seeded with the curvature of straight Jacobi segments, and a fraction-to-
boundary rule keeps every point strictly inside its section.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from app.services.itinerary import Itinerary, Section
from app.services.jacobi import SegmentSolution, coupled_connect
from app.services.lattice import CouplingParams
from app.services.lattice.coupling import FloatArray
from app.services.minimizer.functional import (
    LocalFunctional,
    SectionChart,
    local_functional,
)
from app.utils.exceptions import SolverError
from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

_ACCEPT_RATIO = 1e-4
_SHRINK_RATIO = 0.25
_GROW_RATIO = 0.75


@dataclass(frozen=True)
class MinimizerOptions:
    """Stopping rules and step controls of the descent."""

    tol_g: float = 1e-8
    tol_x: float = 1e-10
    max_sweeps: int = 50
    block_iterations: int = 8
    tau: float = 0.995
    segment_tol: float = 1e-9
    integrator_tol: float | None = None
    initial_radius: float | None = None
    workers: int = 1


@dataclass(eq=False)
class BrokenGeodesic:
    """Chain of segments through the break points of an itinerary."""

    points: list[FloatArray]
    sections: list[Section]
    segments: list[SegmentSolution]
    total_length: float
    grad_norm: float
    interior_margins: list[float]
    converged: bool = False
    sweeps: int = 0
    length_history: list[float] = field(default_factory=list)

    @property
    def break_points(self) -> list[FloatArray]:
        """Points on the interior sections."""
        return self.points[1:-1]

    @property
    def charts(self) -> list[SectionChart]:
        """Charts of the interior sections."""
        return [SectionChart(s) for s in self.sections[1:-1]]

    def velocity_jumps(self) -> list[FloatArray]:
        """Full velocity jump at every break point."""
        return [
            self.segments[j].v_end - self.segments[j + 1].v_start
            for j in range(len(self.segments) - 1)
        ]


def dogleg_step(g: FloatArray, B: FloatArray, radius: float) -> FloatArray:
    """
    Dogleg minimizer of ``g.s + s.B.s / 2`` over ``|s| <= radius``.

    Args:
        g: Model gradient
        B: Positive definite model Hessian
        radius: Trust radius

    Returns:
        The step
    """
    newton = -np.linalg.solve(B, g)
    if np.linalg.norm(newton) <= radius:
        return newton
    gg = float(g @ g)
    cauchy = -(gg / float(g @ B @ g)) * g
    if np.linalg.norm(cauchy) >= radius:
        return -radius * g / math.sqrt(gg)
    d = newton - cauchy
    a = float(d @ d)
    b = 2.0 * float(cauchy @ d)
    c = float(cauchy @ cauchy) - radius**2
    t = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return cauchy + t * d


def bfgs_update(B: FloatArray, s: FloatArray, y: FloatArray) -> FloatArray:
    """BFGS update of ``B``; skipped when the curvature condition fails."""
    sy = float(s @ y)
    if sy <= 1e-14 * float(np.linalg.norm(s) * np.linalg.norm(y)):
        return B
    Bs = B @ s
    return B + np.outer(y, y) / sy - np.outer(Bs, Bs) / float(s @ Bs)


def _seed_curvature(
    local: LocalFunctional, p_prev: FloatArray, x: FloatArray, p_next: FloatArray
) -> float:
    """Curvature ``|v| / |dq|`` of straight Jacobi segments, summed."""
    c_in = np.linalg.norm(local.incoming.v_end) / np.linalg.norm(x - p_prev)
    c_out = np.linalg.norm(local.outgoing.v_start) / np.linalg.norm(p_next - x)
    return float(c_in + c_out)


def _solve_chain(
    points: list[FloatArray], cp: CouplingParams | None, opts: MinimizerOptions
) -> list[SegmentSolution]:
    def solve(j: int) -> SegmentSolution:
        return coupled_connect(
            points[j],
            points[j + 1],
            cp,
            tol=opts.segment_tol,
            integrator_tol=opts.integrator_tol,
        )

    return ordered_map(solve, range(len(points) - 1), opts.workers)


def _block_step(
    chart: SectionChart,
    p_prev: FloatArray,
    x: FloatArray,
    p_next: FloatArray,
    start: LocalFunctional,
    cp: CouplingParams | None,
    opts: MinimizerOptions,
) -> tuple[FloatArray, LocalFunctional]:
    """Trust-region iterations on one break point; returns the new point."""
    section = chart.section
    u = chart.to_local(x)
    current = start
    B = _seed_curvature(start, p_prev, x, p_next) * np.eye(chart.dim)
    radius = opts.initial_radius or 0.5 * min(section.rho_v, section.rho_h)

    for _ in range(opts.block_iterations):
        g = current.gradient
        if np.linalg.norm(g) < opts.tol_g or radius < opts.tol_x:
            break
        step = dogleg_step(g, B, radius)
        reach = chart.max_step(u, step)
        step = step * min(1.0, opts.tau * reach)
        predicted = -(float(g @ step) + 0.5 * float(step @ B @ step))
        try:
            trial = local_functional(
                p_prev,
                chart.to_point(u + step),
                p_next,
                section,
                cp,
                "with-lens",
                opts.segment_tol,
                opts.integrator_tol,
            )
        except SolverError as e:
            logger.debug(f"Trial point rejected: {e}")
            radius *= _SHRINK_RATIO
            continue
        decrease = current.value - trial.value
        ratio = decrease / predicted if predicted > 0.0 else 0.0
        size = float(np.linalg.norm(step))
        if ratio < _SHRINK_RATIO:
            radius = _SHRINK_RATIO * size
        elif ratio > _GROW_RATIO and size >= 0.9 * radius:
            radius *= 2.0
        if decrease > 0.0 and ratio > _ACCEPT_RATIO:
            B = bfgs_update(B, step, trial.gradient - g)
            u = u + step
            current = trial
    return chart.to_point(u), current


def _stationarity(
    segments: list[SegmentSolution], charts: list[SectionChart]
) -> list[FloatArray]:
    return [
        chart.restrict(segments[j].v_end - segments[j + 1].v_start)
        for j, chart in enumerate(charts)
    ]


def minimize(
    itin: Itinerary,
    cp: CouplingParams | None,
    endpoints: tuple[FloatArray, FloatArray] | None = None,
    initial: list[FloatArray] | None = None,
    options: MinimizerOptions | None = None,
) -> BrokenGeodesic:
    """
    Minimize the total length over break points on the interior sections.

    Args:
        itin: Itinerary with at least three sections
        cp: Coupling parameters, ``None`` for the uncoupled lattice
        endpoints: Fixed first and last points, default the outer section centres
        initial: Initial break points, default the interior section centres
        options: Stopping rules and step controls

    Returns:
        The minimizing broken geodesic; ``converged`` is ``False`` when the
        sweep budget ran out, in which case the best iterate is returned

    Raises:
        ValueError: If the itinerary has no interior section or an initial
            point lies off its section
        SolverError: If a segment of the chain cannot be solved
    """
    opts = options or MinimizerOptions()
    sections = itin.sections
    if len(sections) < 3:
        msg = "minimization needs an itinerary with an interior section"
        raise ValueError(msg)
    first, last = endpoints or (sections[0].center, sections[-1].center)
    interior = initial or [s.center for s in sections[1:-1]]
    if len(interior) != len(sections) - 2:
        msg = f"expected {len(sections) - 2} initial points, got {len(interior)}"
        raise ValueError(msg)
    charts = [SectionChart(s) for s in sections[1:-1]]
    points = [np.asarray(first, dtype=float)]
    for chart, x in zip(charts, interior, strict=True):
        x = np.asarray(x, dtype=float)
        if not chart.section.contains(x):
            msg = "initial break point lies off its section"
            raise ValueError(msg)
        points.append(x)
    points.append(np.asarray(last, dtype=float))

    history: list[float] = []
    displacement = math.inf
    sweeps = 0
    while True:
        segments = _solve_chain(points, cp, opts)
        grads = _stationarity(segments, charts)
        grad_norm = max(float(np.linalg.norm(g)) for g in grads)
        history.append(sum(seg.length for seg in segments))
        logger.debug(
            f"Sweep {sweeps}: length {history[-1]:.12g}, gradient {grad_norm:.3e}"
        )
        converged = grad_norm < opts.tol_g and displacement < opts.tol_x
        if converged or sweeps >= opts.max_sweeps:
            break
        displacement = 0.0
        carried: SegmentSolution | None = None
        for j, chart in enumerate(charts, start=1):
            start = local_functional(
                points[j - 1],
                points[j],
                points[j + 1],
                chart.section,
                cp,
                "with-lens",
                opts.segment_tol,
                opts.integrator_tol,
                incoming=carried,
            )
            new, final = _block_step(
                chart, points[j - 1], points[j], points[j + 1], start, cp, opts
            )
            displacement = max(displacement, float(np.linalg.norm(new - points[j])))
            points[j] = new
            carried = final.outgoing
        sweeps += 1

    if converged:
        logger.info(
            f"Broken geodesic converged after {sweeps} sweeps, "
            f"length {history[-1]:.12g}"
        )
    else:
        logger.warning(
            f"Sweep budget of {opts.max_sweeps} exhausted; gradient {grad_norm:.3e}"
        )
    return BrokenGeodesic(
        points=points,
        sections=list(sections),
        segments=segments,
        total_length=history[-1],
        grad_norm=grad_norm,
        interior_margins=[
            c.margin(c.to_local(x)) for c, x in zip(charts, points[1:-1], strict=True)
        ],
        converged=converged,
        sweeps=sweeps,
        length_history=history,
    )
