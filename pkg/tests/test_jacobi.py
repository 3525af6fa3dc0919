"""Tests for energy-one connecting segments."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from app.services.jacobi import (
    coupled_connect,
    energy_vector,
    energy_vector_stability,
    length_gradient,
    segment_length,
    speed_squared_defect,
    time_gradient,
    uncoupled_connect,
)
from app.services.lattice import (
    CouplingParams,
    LatticeState,
    LensMask,
    hamiltonian,
    potential_energy,
)
from app.services.pendulum import (
    PendulumState,
    pendulum_flow,
    potential,
    rotation_period,
)
from app.services.jacobi.segments import _refine_duration
from app.utils.exceptions import BracketError, InadmissibleBoundaryError

TWO_PI = 2.0 * math.pi
CENTER = np.array([0.0, 0.0, 0.0, math.pi])


@pytest.fixture()
def perturbed_pair():
    """Endpoints near two section centres one translation apart."""
    q = CENTER + np.array([0.05, -0.03, 0.0, 0.02])
    q_end = CENTER + TWO_PI * np.array([2.0, 3.0, 1.0, 0.0])
    q_end = q_end + np.array([-0.04, 0.02, 0.0, -0.01])
    return q, q_end


class TestUncoupledConnect:
    """Test cases for the uncoupled connecting segment."""

    def test_total_energy_is_one(self, perturbed_pair):
        """Test that the site energies add up to one."""
        seg = uncoupled_connect(*perturbed_pair)
        assert seg.energies.sum() == pytest.approx(1.0, abs=1e-8)
        assert seg.T > 0.0
        assert not seg.coupled

    def test_speed_at_centre(self):
        """Test the speed where three sites rest at the bottom and one at the top."""
        q_end = CENTER + TWO_PI * np.array([2.0, 3.0, 1.0, 0.0])
        seg = uncoupled_connect(CENTER, q_end)
        assert np.linalg.norm(seg.v_start) == pytest.approx(math.sqrt(14.0), rel=1e-9)
        assert speed_squared_defect(seg) < 1e-9

    def test_arcs_reach_their_ends(self, perturbed_pair):
        """Test every arc against direct integration."""
        seg = uncoupled_connect(*perturbed_pair)
        for arc in seg.arcs[:3]:
            end = pendulum_flow(PendulumState(arc.alpha, arc.v0), seg.T)
            assert end.x == pytest.approx(arc.beta_end, abs=1e-6)

    def test_permutation_equivariance(self, perturbed_pair):
        """Test that relabelling sites permutes the energy vector."""
        q, q_end = perturbed_pair
        order = np.array([2, 0, 3, 1])
        base = energy_vector(q, q_end)
        permuted = energy_vector(q[order], q_end[order])
        np.testing.assert_allclose(permuted, base[order], rtol=1e-9, atol=1e-12)

    def test_reversal(self, perturbed_pair):
        """Test that swapping the endpoints keeps the energy vector."""
        q, q_end = perturbed_pair
        np.testing.assert_allclose(
            energy_vector(q_end, q), energy_vector(q, q_end), rtol=1e-9, atol=1e-12
        )

    def test_periodicity(self, perturbed_pair):
        """Test that a common lift of one coordinate changes nothing."""
        q, q_end = perturbed_pair
        shift = np.array([0.0, TWO_PI, 0.0, 0.0])
        np.testing.assert_allclose(
            energy_vector(q + shift, q_end + shift),
            energy_vector(q, q_end),
            rtol=1e-9,
            atol=1e-12,
        )

    def test_exact_time_hint(self, perturbed_pair):
        """Test a re-solve seeded with its own duration."""
        seg = uncoupled_connect(*perturbed_pair)
        again = uncoupled_connect(*perturbed_pair, time_hint=seg.T)
        assert again.T == pytest.approx(seg.T, rel=1e-10)
        assert again.energies.sum() == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("factor", [0.7, 1.0 + 1e-12, 1.3])
    def test_nearby_time_hint(self, perturbed_pair, factor):
        """Test that the hint only moves the starting bracket."""
        seg = uncoupled_connect(*perturbed_pair)
        again = uncoupled_connect(*perturbed_pair, time_hint=seg.T * factor)
        assert again.T == pytest.approx(seg.T, rel=1e-10)

    def test_refinement_accepts_noisy_root(self):
        """Test that an end at the root to noise survives a sign disagreement."""
        z = _refine_duration(lambda _: 1.0, 0.0, 1.0, (0.0, 1e-12), (1.0, -1.0))
        assert z == 0.0

    def test_refinement_failure_is_bracket_error(self):
        """Test that a real sign disagreement surfaces as a solver error."""
        with pytest.raises(BracketError) as e:
            _refine_duration(lambda _: 1.0, 0.0, 1.0, (0.0, 0.5), (1.0, -1.0))
        assert e.value.exit_code == 3
        assert e.value.bracket == pytest.approx((1.0, math.e))

    def test_inadmissible_pair(self):
        """Test that a pair outside every class is rejected."""
        q_end = np.array([0.5, TWO_PI, TWO_PI, math.pi])
        with pytest.raises(InadmissibleBoundaryError):
            uncoupled_connect(np.zeros(4), q_end)


class TestSegmentLength:
    """Test cases for the Maupertuis length."""

    def test_single_revolution(self):
        """Test one revolution of a single site against quadrature."""
        q = np.array([0.0, math.pi, math.pi, math.pi])
        seg = uncoupled_connect(q, q + np.array([TWO_PI, 0.0, 0.0, 0.0]))
        expected, _ = quad(
            lambda x: math.sqrt(2.0 * (1.0 - potential(x))),
            0.0,
            TWO_PI,
            epsabs=1e-13,
            epsrel=1e-13,
        )
        assert segment_length(seg) == pytest.approx(expected, rel=1e-9)
        assert seg.T == pytest.approx(rotation_period(1.0), rel=1e-9)

    def test_additivity(self):
        """Test that lengths add along a geodesic."""
        q_end = TWO_PI * np.array([2.0, 4.0, 6.0, 8.0])
        whole = uncoupled_connect(np.zeros(4), q_end)
        first = uncoupled_connect(np.zeros(4), 0.5 * q_end)
        second = uncoupled_connect(0.5 * q_end, q_end)
        assert first.T + second.T == pytest.approx(whole.T, rel=1e-9)
        assert first.length + second.length == pytest.approx(whole.length, abs=1e-7)

    def test_longer_translation_is_longer(self):
        """Test that a longer translation gives a longer segment."""
        short = uncoupled_connect(CENTER, CENTER + TWO_PI * np.array([2, 3, 1, 0]))
        long = uncoupled_connect(CENTER, CENTER + TWO_PI * np.array([4, 6, 1, 0]))
        assert long.length > short.length > 0.0


class TestLengthGradient:
    """Test cases for the endpoint gradient law."""

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_difference_quotient(self, seed):
        """Test both endpoint gradients against central differences."""
        rng = np.random.default_rng(seed)
        m, n = rng.integers(1, 4, size=2)
        q = CENTER + rng.uniform(-0.1, 0.1, size=4)
        q_end = CENTER + TWO_PI * np.array([m, n, 1.0, 0.0])
        q_end = q_end + rng.uniform(-0.1, 0.1, size=4)
        seg = uncoupled_connect(q, q_end)
        h = 1e-5
        for which, point in (("start", q), ("end", q_end)):
            numeric = np.zeros(4)
            for i in range(4):
                step = np.zeros(4)
                step[i] = h
                if which == "start":
                    plus = uncoupled_connect(point + step, q_end, seg.T)
                    minus = uncoupled_connect(point - step, q_end, seg.T)
                else:
                    plus = uncoupled_connect(q, point + step, seg.T)
                    minus = uncoupled_connect(q, point - step, seg.T)
                numeric[i] = (plus.length - minus.length) / (2.0 * h)
            np.testing.assert_allclose(
                length_gradient(seg, which), numeric, rtol=1e-5, atol=1e-6
            )

    def test_reversal_swaps_ends(self, perturbed_pair):
        """Test that reversing the segment swaps the endpoint gradients."""
        q, q_end = perturbed_pair
        seg = uncoupled_connect(q, q_end)
        rev = uncoupled_connect(q_end, q)
        np.testing.assert_allclose(
            length_gradient(rev, "start"), length_gradient(seg, "end"), atol=1e-9
        )

    def test_sleeper_component_vanishes(self):
        """Test that a site resting on the saddle contributes no gradient."""
        seg = uncoupled_connect(CENTER, CENTER + TWO_PI * np.array([2, 3, 1, 0]))
        assert length_gradient(seg, "end")[3] == pytest.approx(0.0, abs=1e-12)

    def test_bad_end(self, perturbed_pair):
        """Test that an unknown end name is rejected."""
        seg = uncoupled_connect(*perturbed_pair)
        with pytest.raises(ValueError, match="which_end"):
            length_gradient(seg, "middle")


class TestTimeGradient:
    """Test cases for the duration sensitivity identity."""

    def test_matches_difference_quotient(self):
        """Test dT/dq against central differences on a rotating segment."""
        q = np.array([0.1, 0.2, 0.3, 0.05])
        q_end = TWO_PI * np.array([2.0, 3.0, 4.0, 5.0])
        seg = uncoupled_connect(q, q_end)
        h = 1e-6
        numeric = np.zeros(4)
        for i in range(4):
            step = np.zeros(4)
            step[i] = h
            plus = uncoupled_connect(q + step, q_end, seg.T).T
            minus = uncoupled_connect(q - step, q_end, seg.T).T
            numeric[i] = (plus - minus) / (2.0 * h)
        np.testing.assert_allclose(time_gradient(seg), numeric, rtol=1e-4)


class TestEnergyVectorStability:
    """Test cases for the energy vector under small turns."""

    def test_change_shrinks_with_angle(self):
        """Test that the energy change decreases with the turning angle."""
        direction = np.array([1.0, 2.0, 3.0, 4.0])
        results = energy_vector_stability(
            np.zeros(4), direction, 50.0, [1e-2, 1e-3, 1e-4]
        )
        changes = [change for _, change in results]
        assert changes[0] > changes[1] > changes[2]
        assert changes[2] < 10.0 * 1e-4


class TestCoupledConnect:
    """Test cases for the coupled connecting segment."""

    def test_no_coupling(self, perturbed_pair):
        """Test that no coupling returns the uncoupled segment."""
        seg = coupled_connect(*perturbed_pair, None)
        base = uncoupled_connect(*perturbed_pair)
        assert seg.length == pytest.approx(base.length, abs=1e-9)
        assert not seg.coupled

    def test_masked_lenses(self):
        """Test that removing the end lenses gives the uncoupled segment."""
        q_end = CENTER + TWO_PI * np.array([1.0, 2.0, 1.0, 0.0])
        cp = CouplingParams(eps=0.2).with_masks(
            (LensMask(1, (0, 0, 0)), LensMask(1, (1, 2, 1)))
        )
        seg = coupled_connect(CENTER, q_end, cp)
        base = uncoupled_connect(CENTER, q_end)
        assert seg.length == pytest.approx(base.length, abs=1e-9)
        np.testing.assert_allclose(seg.v_start, base.v_start, atol=1e-9)

    @pytest.mark.slow
    def test_lens_shortens_segment(self):
        """Test that a segment between lens centres is shortened by the lens."""
        cp = CouplingParams(eps=0.2)
        q_end = CENTER + TWO_PI * np.array([1.0, 2.0, 1.0, 0.0])
        seg = coupled_connect(CENTER, q_end, cp)
        base = uncoupled_connect(CENTER, q_end)
        assert seg.coupled
        assert seg.residual_history[-1] < 1e-8
        assert seg.length < base.length
        start = LatticeState(CENTER, seg.v_start)
        assert hamiltonian(start, cp) == pytest.approx(1.0, abs=1e-7)
        speed_sq = 2.0 * (1.0 - potential_energy(CENTER, cp))
        assert float(np.dot(seg.v_start, seg.v_start)) == pytest.approx(
            speed_sq, abs=1e-7
        )
