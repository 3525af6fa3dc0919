"""Tests for single-pendulum dynamics and boundary-value solves."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from app.services.pendulum import (
    ArcBranch,
    PendulumState,
    arc_action,
    arc_trajectory,
    bvp_solve,
    classify_boundary,
    energy_of_time,
    kibound_constant,
    pendulum_flow,
    potential,
    rotation_period,
    rotation_period_bound,
    sensitivity_identities,
    shoot_by_integration,
    stiffness_K,
    time_of_energy,
)
from app.services.pendulum.quadrature import FlightKind, turning_integral
from app.utils.exceptions import InadmissibleBoundaryError, QuadratureError

QUAD_OPTS = {"epsabs": 1e-13, "epsrel": 1e-13, "limit": 200}


class TestPotential:
    """Test cases for the pendulum potential."""

    def test_bottom(self):
        """Test the minimum at the bottom."""
        assert potential(0.0) == -2.0

    def test_top(self):
        """Test the maximum at the top."""
        assert potential(math.pi) == pytest.approx(0.0, abs=1e-15)

    def test_quarter(self):
        """Test the value at a quarter turn."""
        assert potential(math.pi / 2) == pytest.approx(-1.0)

    def test_state_energy(self):
        """Test the energy property of a state."""
        assert PendulumState(0.0, 2.0).energy == pytest.approx(0.0, abs=1e-15)


class TestPendulumFlow:
    """Test cases for the numerical pendulum flow."""

    def test_saddle_is_fixed(self):
        """Test that the upright rest state stays put."""
        end = pendulum_flow(PendulumState(math.pi, 0.0), 5.0)
        assert end.x == pytest.approx(math.pi, abs=1e-9)
        assert end.y == pytest.approx(0.0, abs=1e-9)

    def test_separatrix_energy_conserved(self):
        """Test that the separatrix energy stays zero."""
        for t in (0.5, 1.0, 2.0, 4.0):
            end = pendulum_flow(PendulumState(0.0, 2.0), t)
            assert end.energy == pytest.approx(0.0, abs=1e-7)

    def test_one_revolution(self):
        """Test that one period at E = 1 advances the angle by 2 pi."""
        v = math.sqrt(6.0)
        end = pendulum_flow(PendulumState(0.0, v), rotation_period(1.0), tol=1e-12)
        assert end.x == pytest.approx(2 * math.pi, abs=1e-7)
        assert end.y == pytest.approx(v, abs=1e-7)

    def test_zero_time_is_identity(self):
        """Test that a zero duration returns the input."""
        state = PendulumState(0.3, -0.2)
        assert pendulum_flow(state, 0.0) == state

    def test_rejects_bad_tolerance(self):
        """Test that a non-positive tolerance is rejected."""
        with pytest.raises(ValueError, match="tol"):
            pendulum_flow(PendulumState(0.0, 1.0), 1.0, tol=0.0)


class TestClassifyBoundary:
    """Test cases for boundary classification."""

    @pytest.mark.parametrize(
        ("alpha", "beta_end", "branch"),
        [
            (0.0, 2.6, ArcBranch.BOTTOM_TO_TOP),
            (0.0, -2.6, ArcBranch.BOTTOM_TO_TOP),
            (-math.pi + 0.5, 0.5, ArcBranch.TOP_TO_BOTTOM),
            (0.3, 2 * math.pi - 0.2, ArcBranch.BOTTOM_TO_NEXT_BOTTOM),
            (0.0, 10 * math.pi + 0.3, ArcBranch.ROTATION),
            (math.pi - 0.2, math.pi + 0.3, ArcBranch.SADDLE_DWELL),
            (2 * math.pi, 2 * math.pi + 2.6, ArcBranch.BOTTOM_TO_TOP),
        ],
    )
    def test_admissible(self, alpha, beta_end, branch):
        """Test classification of admissible pairs."""
        assert classify_boundary(alpha, beta_end) is branch

    def test_inadmissible(self):
        """Test that a pair in no class is rejected."""
        with pytest.raises(InadmissibleBoundaryError):
            classify_boundary(0.0, 1.5)

    def test_branch_mismatch(self):
        """Test that a wrong declared branch is rejected."""
        with pytest.raises(InadmissibleBoundaryError, match="rotation"):
            bvp_solve(0.0, 2.6, ArcBranch.ROTATION, 5.0)

    def test_nonpositive_time(self):
        """Test that a non-positive flight time is rejected."""
        with pytest.raises(InadmissibleBoundaryError):
            bvp_solve(0.0, 2.6, None, 0.0)


class TestEnergyOfTime:
    """Test cases for the energy-time law."""

    def test_decreasing_instance(self):
        """Test the monotone law on a short pair of durations."""
        e1 = energy_of_time(0.0, 2.6, ArcBranch.BOTTOM_TO_TOP, 0.5)
        e2 = energy_of_time(0.0, 2.6, ArcBranch.BOTTOM_TO_TOP, 1.0)
        assert e1 > e2

    def test_near_heteroclinic(self):
        """Test that long arcs towards the top have nearly zero energy."""
        energy = energy_of_time(0.0, math.pi - 1.0, ArcBranch.BOTTOM_TO_TOP, 30.0)
        assert abs(energy) < 1e-3

    def test_monotone_law_randomized(self):
        """Test strict decrease over a geometric grid on fifty boundary pairs."""
        rng = np.random.default_rng(7)
        over_top, below_top = [], []
        for _ in range(10):
            a = rng.uniform(-0.9, 1.0)
            over_top.append((a, rng.uniform(math.pi, math.pi + 0.9)))
            over_top.append((a, rng.uniform(2 * math.pi - 1.0, 2 * math.pi + a - 0.01)))
            n = int(rng.integers(1, 4))
            over_top.append((a, a + 2 * math.pi * n + rng.uniform(0.0, 1.0)))
            over_top.append((-math.pi - rng.uniform(0.0, 0.9), rng.uniform(-1.0, 1.0)))
            below_top.append((rng.uniform(-0.9, 0.9), rng.uniform(math.pi - 0.9, 3.1)))
        assert len(over_top) + len(below_top) == 50
        times = np.geomspace(0.5, 30.0, 20)
        for alpha, beta_end in over_top:
            energies = [energy_of_time(alpha, beta_end, None, t) for t in times]
            assert np.all(np.diff(energies) < 0), (alpha, beta_end)
        for alpha, beta_end in below_top:
            arcs = [bvp_solve(alpha, beta_end, None, t) for t in times]
            assert all(arc.branch is ArcBranch.BOTTOM_TO_TOP for arc in arcs)
            exits = np.array([arc.v1 for arc in arcs])
            assert np.all(np.diff(exits) < 0), (alpha, beta_end)
            arriving = np.array([arc.E for arc in arcs])[exits >= 0.0]
            assert np.all(np.diff(arriving) < 0), (alpha, beta_end)

    def test_exit_velocity_decreasing_below_top(self):
        """Test that the exit velocity decreases when the end is below the top."""
        times = np.geomspace(0.5, 30.0, 20)
        exits = [bvp_solve(0.0, 2.6, None, t).v1 for t in times]
        assert np.all(np.diff(exits) < 0)
        assert exits[0] > 0 > exits[-1]

    def test_rotation_energy_positive(self):
        """Test a five-revolution arc against the shooting oracle."""
        arc = bvp_solve(0.0, 10 * math.pi + 0.3, ArcBranch.ROTATION, 15.0)
        assert arc.E > 0
        v0 = shoot_by_integration(0.0, 10 * math.pi + 0.3, 15.0, 2.001, 10.0)
        assert arc.v0 == pytest.approx(v0, rel=1e-7)

    def test_turning_arc_matches_shooting(self):
        """Test an arc that turns before reaching its end."""
        arc = bvp_solve(0.0, 2.6, ArcBranch.BOTTOM_TO_TOP, 10.0)
        assert arc.turning
        v0 = shoot_by_integration(0.0, 2.6, 10.0, arc.v0 - 1e-3, arc.v0 + 1e-3)
        assert arc.v0 == pytest.approx(v0, rel=1e-7)

    def test_reversed_arc_matches_shooting(self):
        """Test an arc starting near the top against the shooting oracle."""
        arc = bvp_solve(-math.pi + 0.5, 0.5, ArcBranch.TOP_TO_BOTTOM, 8.0)
        v0 = shoot_by_integration(
            -math.pi + 0.5, 0.5, 8.0, arc.v0 - 1e-3, arc.v0 + 1e-3
        )
        assert arc.v0 == pytest.approx(v0, rel=1e-7)

    @pytest.mark.parametrize(
        ("beta_end", "T", "sign"),
        [(2.6, 10.0, -1.0), (10 * math.pi + 0.3, 15.0, 1.0)],
    )
    def test_energy_matches_shooting_oracle(self, beta_end, T, sign):
        """Test the arc energy against bisection shooting on the initial velocity."""
        arc = bvp_solve(0.0, beta_end, None, T)
        v0 = shoot_by_integration(0.0, beta_end, T, arc.v0 - 1e-3, arc.v0 + 1e-3)
        oracle = v0**2 / 2 + potential(0.0)
        assert arc.E == pytest.approx(oracle, abs=1e-6)
        assert math.copysign(1.0, arc.E) == sign

    def test_slope_along_velocity_ray(self):
        """Test that the time-T map increases along the initial-velocity ray."""
        arc = bvp_solve(0.0, 2.6, ArcBranch.BOTTOM_TO_TOP, 10.0)
        ends = [
            pendulum_flow(PendulumState(0.0, v), 10.0, tol=1e-12).x
            for v in np.linspace(arc.v0 - 1e-3, arc.v0 + 1e-3, 5)
        ]
        assert np.all(np.diff(ends) > 0)


class TestBvpSolve:
    """Test cases for full arc solutions."""

    @pytest.mark.parametrize(
        ("alpha", "beta_end", "T"),
        [
            (0.0, 2.6, 1.0),
            (0.0, 2.6, 10.0),
            (-math.pi + 0.5, 0.5, 8.0),
            (0.3, 2 * math.pi - 0.2, 6.0),
            (math.pi - 0.2, math.pi + 0.3, 12.0),
            (math.pi + 0.3, math.pi + 0.1, 12.0),
            (0.0, -6 * math.pi, 9.0),
        ],
    )
    def test_energy_consistency(self, alpha, beta_end, T):
        """Test that both end velocities carry the arc energy."""
        arc = bvp_solve(alpha, beta_end, None, T)
        assert arc.v0**2 / 2 + potential(alpha) == pytest.approx(arc.E, abs=1e-9)
        assert arc.v1**2 / 2 + potential(beta_end) == pytest.approx(arc.E, abs=1e-9)

    def test_confinement_top_to_bottom(self):
        """Test that an arc from near the top stays in its interval."""
        arc = bvp_solve(-math.pi + 0.5, 0.5, ArcBranch.TOP_TO_BOTTOM, 8.0)
        xs = arc_trajectory(arc, np.linspace(0.0, arc.T, 400))
        assert np.all(xs >= -1 - math.pi)
        assert np.all(xs <= 1.0)
        assert xs[-1] == pytest.approx(0.5, abs=1e-4)

    def test_confinement_bottom_to_top(self):
        """Test that an arc towards the top stays below it."""
        arc = bvp_solve(0.0, 2.6, ArcBranch.BOTTOM_TO_TOP, 5.0)
        xs = arc_trajectory(arc, np.linspace(0.0, arc.T, 400))
        assert np.all(xs >= -1e-9)
        assert np.all(xs <= math.pi)

    def test_equilibrium_at_top(self):
        """Test that both ends at the top give the upright rest arc."""
        arc = bvp_solve(math.pi, math.pi, None, 5.0)
        assert arc.E == 0.0
        assert arc.v0 == 0.0
        assert arc.v1 == 0.0
        assert arc_action(arc) == 0.0

    def test_smooth_dependence(self):
        """Test that finite differences of v0 are bounded."""
        h = 1e-6
        v_plus = bvp_solve(0.0, 2.6 + h, None, 4.0).v0
        v_minus = bvp_solve(0.0, 2.6 - h, None, 4.0).v0
        assert abs(v_plus - v_minus) / (2 * h) < 10.0

    def test_action_of_rotation(self):
        """Test the abbreviated action of one revolution against quadrature."""
        T = time_of_energy(0.0, 2 * math.pi, ArcBranch.ROTATION, 1.0)
        arc = bvp_solve(0.0, 2 * math.pi, ArcBranch.ROTATION, T)
        expected, _ = quad(
            lambda x: math.sqrt(2 * (arc.E - potential(x))),
            0.0,
            2 * math.pi,
            **QUAD_OPTS,
        )
        assert arc_action(arc) == pytest.approx(expected, rel=1e-9)


class TestTimeOfEnergy:
    """Test cases for the inverse map."""

    def test_round_trip(self):
        """Test the inverse pair on a monotone arc."""
        T = time_of_energy(0.0, 2.6, ArcBranch.BOTTOM_TO_TOP, 0.5)
        energy = energy_of_time(0.0, 2.6, ArcBranch.BOTTOM_TO_TOP, T)
        assert energy == pytest.approx(0.5, rel=1e-8)

    def test_round_trip_turning(self):
        """Test the inverse pair on a turning arc."""
        T = time_of_energy(0.0, math.pi - 1.0, None, -0.01, turning=True)
        energy = energy_of_time(0.0, math.pi - 1.0, None, T)
        assert energy == pytest.approx(-0.01, rel=1e-8)

    def test_revolution_quadrature(self):
        """Test one revolution at E = 1 against direct quadrature."""
        expected, _ = quad(
            lambda x: 1.0 / math.sqrt(2 * (1.0 - potential(x))),
            0.0,
            2 * math.pi,
            **QUAD_OPTS,
        )
        T = time_of_energy(0.0, 2 * math.pi, ArcBranch.ROTATION, 1.0)
        assert T == pytest.approx(expected, rel=1e-10)

    def test_decreasing_in_energy(self):
        """Test that higher energy means a shorter flight."""
        t1 = time_of_energy(0.0, 2 * math.pi, ArcBranch.ROTATION, 0.5)
        t2 = time_of_energy(0.0, 2 * math.pi, ArcBranch.ROTATION, 1.0)
        assert t1 > t2

    def test_rejects_nonpositive_energy_over_top(self):
        """Test that a rotation arc needs positive energy."""
        with pytest.raises(InadmissibleBoundaryError):
            time_of_energy(0.0, 2 * math.pi, ArcBranch.ROTATION, 0.0)


class TestStiffnessAndPeriod:
    """Test cases for stiffness and the revolution period."""

    def test_stiffness_quadrature(self):
        """Test K over one revolution against direct quadrature."""
        integral, _ = quad(
            lambda x: (2 * (1.0 - potential(x))) ** -1.5, 0.0, 2 * math.pi, **QUAD_OPTS
        )
        assert stiffness_K(0.0, 2 * math.pi, 1.0) == pytest.approx(
            1 / integral, rel=1e-9
        )

    def test_stiffness_increases_with_energy(self):
        """Test that K grows with the energy."""
        assert stiffness_K(0.0, 2 * math.pi, 2.0) > stiffness_K(0.0, 2 * math.pi, 1.0)

    @pytest.mark.parametrize("energy", [0.05, 0.3, 1.0, 2.5, 5.0])
    @pytest.mark.parametrize("n", [1, 3, 10])
    def test_kibound(self, energy, n):
        """Test the bound K <= c E / n on the acceptance grid."""
        k = stiffness_K(0.0, 2 * math.pi * n, energy)
        assert k <= kibound_constant() * energy / n

    def test_kibound_constant(self):
        """Test the value of the bound constant."""
        assert kibound_constant() == pytest.approx(
            2 * math.pi / math.sqrt(1 + math.pi**2 / 2)
        )

    def test_stiffness_singular(self):
        """Test that an energy touching the potential is rejected."""
        with pytest.raises(InadmissibleBoundaryError):
            stiffness_K(0.0, 2 * math.pi, 0.0)
        with pytest.raises(InadmissibleBoundaryError):
            stiffness_K(0.0, 2.6, potential(2.6))

    def test_period_quadrature(self):
        """Test the period at E = 1 against direct quadrature."""
        expected, _ = quad(
            lambda x: 1 / math.sqrt(2 * (2 + math.cos(x))),
            -math.pi,
            math.pi,
            **QUAD_OPTS,
        )
        assert rotation_period(1.0) == pytest.approx(expected, rel=1e-10)

    def test_period_decreasing(self):
        """Test that the period shrinks at higher energy."""
        assert rotation_period(100.0) < rotation_period(1.0)

    def test_period_bound_near_separatrix(self):
        """Test the logarithmic period bound close to the separatrix."""
        assert rotation_period(1e-4) <= rotation_period_bound(1e-4)

    def test_period_rejects_nonpositive(self):
        """Test that no period exists at or below the separatrix."""
        with pytest.raises(InadmissibleBoundaryError):
            rotation_period(0.0)


class TestSensitivityIdentities:
    """Test cases for the closed-form sensitivities."""

    @pytest.fixture()
    def rotation_arc(self):
        T = time_of_energy(0.0, 6 * math.pi, ArcBranch.ROTATION, 1.0)
        return bvp_solve(0.0, 6 * math.pi, ArcBranch.ROTATION, T)

    def test_energy_slope(self, rotation_arc):
        """Test dE/dT against central differences."""
        rec = sensitivity_identities(rotation_arc)
        h = 1e-4 * rotation_arc.T
        fd = (
            energy_of_time(0.0, 6 * math.pi, None, rotation_arc.T + h)
            - energy_of_time(0.0, 6 * math.pi, None, rotation_arc.T - h)
        ) / (2 * h)
        assert rec.dE_dT == pytest.approx(fd, rel=1e-4)

    def test_velocity_slope(self, rotation_arc):
        """Test d(v0)/dT against central differences."""
        rec = sensitivity_identities(rotation_arc)
        h = 1e-4 * rotation_arc.T
        fd = (
            bvp_solve(0.0, 6 * math.pi, None, rotation_arc.T + h).v0
            - bvp_solve(0.0, 6 * math.pi, None, rotation_arc.T - h).v0
        ) / (2 * h)
        assert rec.dXdot_dT == pytest.approx(fd, rel=1e-4)
        assert rec.dXdot_dT < 0

    def test_time_slope(self, rotation_arc):
        """Test dT/dx at fixed energy for a single pendulum."""
        rec = sensitivity_identities(rotation_arc)
        h = 1e-5
        fd = (
            time_of_energy(h, 6 * math.pi, None, rotation_arc.E)
            - time_of_energy(-h, 6 * math.pi, None, rotation_arc.E)
        ) / (2 * h)
        assert rec.dT_dx == pytest.approx(fd, rel=1e-4)

    def test_near_heteroclinic_slope_small(self):
        """Test that a long arc over one top barely reacts to its duration."""
        arc = bvp_solve(0.5, 2 * math.pi - 0.5, None, 30.0)
        assert abs(sensitivity_identities(arc).dXdot_dT) < 1e-3

    def test_turning_arc_rejected(self):
        """Test that turning arcs have no finite stiffness."""
        arc = bvp_solve(0.0, 2.6, None, 10.0)
        with pytest.raises(InadmissibleBoundaryError):
            sensitivity_identities(arc)


class TestTurningIntegral:
    """Test cases for flights up to a turning point."""

    def test_long_turning_arc_solves(self):
        """Test an arc whose turning point is closer to the top than float spacing."""
        arc = bvp_solve(0.0, 2.6, None, 10.0)
        assert arc.turning
        assert potential(2.6) < arc.E < 0.0
        assert arc.v0**2 / 2 + potential(0.0) == pytest.approx(arc.E, abs=1e-9)

    def test_tiny_energy_is_finite(self):
        """Test the climb time at an energy far below float spacing near the top."""
        value = turning_integral(0.0, math.pi, -1e-200)
        assert math.isfinite(value)
        assert value > turning_integral(0.0, math.pi, -1e-20) > 0.0

    def test_start_at_turning_point(self):
        """Test that a climb starting at its turning point takes no time."""
        x_turn = math.pi - 2.0 * math.asin(0.5)
        assert turning_integral(x_turn, math.pi, -0.5) == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize("energy", [-0.5, -1.5])
    def test_matches_flow(self, energy):
        """Test that the flow comes to rest after the climb time."""
        t_turn = turning_integral(0.0, math.pi, energy)
        state = PendulumState(0.0, math.sqrt(2.0 * (energy - potential(0.0))))
        end = pendulum_flow(state, t_turn, tol=1e-12)
        assert end.y == pytest.approx(0.0, abs=1e-7)
        assert end.energy == pytest.approx(energy, abs=1e-9)

    def test_action_kind(self):
        """Test the action integral against quadrature below the turning point."""
        x_turn = math.pi - 2.0 * math.asin(0.5)
        expected, _ = quad(
            lambda x: math.sqrt(max(2.0 * (-0.5 - potential(x)), 0.0)),
            0.0,
            x_turn,
            **QUAD_OPTS,
        )
        value = turning_integral(0.0, math.pi, -0.5, FlightKind.ACTION)
        assert value == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize(
        ("x0", "energy"), [(2.6, -0.5), (0.0, -2.5), (0.0, 0.25), (0.0, -1e-305)]
    )
    def test_rejects_out_of_range(self, x0, energy):
        """Test that the climb needs a reachable negative energy."""
        with pytest.raises(QuadratureError) as e:
            turning_integral(x0, math.pi, energy)
        assert e.value.exit_code == 3
