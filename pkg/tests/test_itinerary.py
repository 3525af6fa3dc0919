"""Tests for sections, translation search and itinerary compilation."""

import math

import numpy as np
import pytest

from app.services.itinerary import (
    Itinerary,
    ItineraryParams,
    Role,
    asymptotic_thresholds,
    compile_itinerary,
    edge_roles,
    pick_translation,
    section_for,
    translation_form,
    validate_itinerary,
)
from app.utils.exceptions import InfeasibleTranslationError

TWO_PI = 2.0 * math.pi


@pytest.fixture()
def params():
    """Desk-scale compiler parameters."""
    return ItineraryParams(p=4, eps=0.05, n_per_string=3, l_min=10.0, theta_max=0.6)


class TestEdgeRoles:
    """Test cases for role assignment."""

    def test_right_step(self):
        """Test the roles of a right step."""
        roles = edge_roles(0, 1, 4)
        assert roles.active_pair == (0, 1)
        assert roles.facilitator == 2
        assert roles.sleepers == (3,)

    def test_roles_rotate(self):
        """Test that the next step rotates every role by one site."""
        roles = edge_roles(1, 2, 4)
        assert roles.active_pair == (1, 2)
        assert roles.facilitator == 3
        assert roles.sleepers == (0,)

    def test_left_step_mirrors(self):
        """Test that a left step mirrors the facilitator."""
        roles = edge_roles(2, 1, 4)
        assert roles.active_pair == (1, 2)
        assert roles.donor == 2
        assert roles.facilitator == 0
        assert roles.sleepers == (3,)

    def test_larger_ring(self):
        """Test that extra sites are sleepers."""
        roles = edge_roles(4, 5, 6)
        assert roles.facilitator == 0
        assert roles.sleepers == (1, 2, 3)

    @pytest.mark.parametrize(("a", "b", "p"), [(0, 2, 4), (1, 1, 4), (0, 1, 3)])
    def test_invalid(self, a, b, p):
        """Test that non-unit steps and small rings are rejected."""
        with pytest.raises(ValueError):
            edge_roles(a, b, p)


class TestSection:
    """Test cases for sections."""

    def test_centre(self):
        """Test the centre configuration of a section."""
        section = section_for(1, 2, 4, 0.05)
        np.testing.assert_allclose(section.center, [math.pi, 0.0, 0.0, 0.0])
        assert section.rho_v == pytest.approx(math.sqrt(0.05))
        assert section.free_sites == (1, 2, 0)

    def test_contains(self):
        """Test membership and boundary margins."""
        section = section_for(0, 1, 4, 0.05)
        assert section.contains(section.center)
        inside = section.center + np.array([0.1, 0.1, 0.0, 0.1])
        assert section.contains(inside)
        outside = section.center + np.array([0.3, 0.0, 0.0, 0.0])
        assert not section.contains(outside)
        assert section.vertical_margin(outside) < 0.0
        off_plane = section.center + np.array([0.0, 0.0, 0.01, 0.0])
        assert not section.contains(off_plane)


class TestPickTranslation:
    """Test cases for the translation search."""

    def test_exact_direction(self):
        """Test that a representable direction is returned exactly."""
        form = translation_form(edge_roles(0, 1, 4), edge_roles(0, 1, 4))
        vector = pick_translation(np.array([6.0, 8.0, 1.0, 0.0]), form, 10.0, 0.1)
        np.testing.assert_array_equal(vector, [6.0, 8.0, 1.0, 0.0])

    def test_axis_direction(self):
        """Test the best in-string vector towards a coordinate axis."""
        form = translation_form(edge_roles(0, 1, 4), edge_roles(0, 1, 4))
        vector = pick_translation(np.array([1.0, 0.0, 0.0, 0.0]), form, 10.0, 2.0)
        np.testing.assert_array_equal(vector, [40.0, -1.0, 1.0, 0.0])

    def test_junction_form(self):
        """Test that a junction vector has half-integer role-change entries."""
        form = translation_form(edge_roles(0, 1, 4), edge_roles(1, 2, 4))
        assert form.base == (0.5, 0.0, 1.0, 0.5)
        assert form.free == (1,)
        prev = np.array([0.38, 0.92, 0.02, 0.0])
        vector = pick_translation(prev, form, 10.0, 0.6)
        np.testing.assert_array_equal(vector[[0, 2, 3]], [0.5, 1.0, 0.5])
        assert vector[1] == round(vector[1]) and vector[1] >= 9

    def test_infeasible(self):
        """Test that too tight a turn is reported with the best angle."""
        form = translation_form(edge_roles(0, 1, 4), edge_roles(0, 1, 4))
        with pytest.raises(InfeasibleTranslationError) as info:
            pick_translation(np.array([1.0, 0.0, 0.0, 0.0]), form, 10.0, 1e-3)
        assert 1e-3 < info.value.best_angle < 0.1

    def test_bad_thresholds(self):
        """Test that non-positive thresholds are rejected."""
        form = translation_form(edge_roles(0, 1, 4), edge_roles(0, 1, 4))
        with pytest.raises(ValueError, match="positive"):
            pick_translation(np.ones(4), form, 0.0, 0.1)


class TestCompileItinerary:
    """Test cases for itinerary compilation."""

    def test_two_strings(self, params):
        """Test a monotone two-step path."""
        itin = compile_itinerary([1, 2, 3], params)
        assert len(itin.sections) == 8
        assert len(itin.translations) == 7
        assert itin.string_boundaries == [3]
        junction = itin.translations[3]
        assert junction[1] == 0.5
        assert junction[3] == 1.0
        assert junction[0] == 0.5
        assert junction[2] == round(junction[2])

    def test_compiled_itinerary_validates(self, params):
        """Test that a compiled itinerary passes every rule."""
        itin = compile_itinerary([0, 1, 2, 1], params)
        report = validate_itinerary(itin, params.l_min, params.theta_max)
        assert report.passed, report.failures

    def test_single_edge(self, params):
        """Test that one step gives one string."""
        itin = compile_itinerary([0, 1], params)
        assert len(itin.sections) == 4
        assert itin.string_boundaries == []

    @pytest.mark.parametrize("path", [[], [5]])
    def test_empty(self, params, path):
        """Test that a path without steps gives an empty itinerary."""
        itin = compile_itinerary(path, params)
        assert itin.sections == []
        assert itin.translations == []

    def test_non_unit_path(self, params):
        """Test that a jump in the path is rejected."""
        with pytest.raises(ValueError, match="unit step"):
            compile_itinerary([0, 2], params)

    def test_role_hand_off(self, params):
        """Test that the donor falls asleep and the sleeper wakes at a junction."""
        itin = compile_itinerary([0, 1, 2], params)
        before = itin.sections[3].roles
        after = itin.sections[4].roles
        assert after.role(before.donor) == Role.SLEEPER
        assert before.role(after.facilitator) == Role.SLEEPER
        assert before.receiver == after.donor

    def test_deterministic(self, params):
        """Test that compilation is reproducible."""
        first = compile_itinerary([0, 1, 2], params)
        second = compile_itinerary([0, 1, 2], params)
        for a, b in zip(first.translations, second.translations, strict=True):
            np.testing.assert_array_equal(a, b)

    def test_uniform_profile(self, params):
        """Test that a uniform string repeats one translation."""
        uniform = ItineraryParams(
            p=4, eps=0.05, n_per_string=3, l_min=10.0, transfer_profile="uniform"
        )
        itin = compile_itinerary([0, 1], uniform)
        for vector in itin.translations[1:]:
            np.testing.assert_array_equal(vector, itin.translations[0])

    def test_turning_profile_shifts_weight(self, params):
        """Test that a turning string moves weight from donor to receiver."""
        itin = compile_itinerary([0, 1], params)
        first, last = itin.translations[0], itin.translations[-1]
        assert first[0] > first[1]
        assert last[1] > last[0]

    def test_infeasible_junction_reports_index(self):
        """Test that a junction after a diagonal string is too sharp a turn."""
        short = ItineraryParams(
            p=4, eps=0.05, n_per_string=1, l_min=10.0, transfer_profile="uniform"
        )
        with pytest.raises(InfeasibleTranslationError) as info:
            compile_itinerary([0, 1, 2], short)
        assert info.value.index == 1
        assert info.value.best_angle > short.theta_max


class TestValidateItinerary:
    """Test cases for itinerary validation."""

    @staticmethod
    def _hand_built(vectors):
        section = section_for(0, 1, 4, 0.05)
        itin = Itinerary(path=[0, 1], sections=[section])
        center = section.center
        for vector in vectors:
            center = center + TWO_PI * np.asarray(vector, dtype=float)
            itin.sections.append(
                section_for(0, 1, 4, 0.05, center=center)
            )
            itin.translations.append(np.asarray(vector, dtype=float))
        return itin

    def test_short_vector_flagged(self):
        """Test that a short translation is flagged under the length rule."""
        itin = self._hand_built([[6, 8, 1, 0], [2, 2, 1, 0], [6, 8, 1, 0]])
        report = validate_itinerary(itin, 10.0, 2.0)
        failures = [(c.rule, c.index) for c in report.failures]
        assert failures == [("length", 1)]

    def test_sharp_turn_flagged(self):
        """Test that a sharp turn is flagged under the turning rule."""
        itin = self._hand_built([[6, 8, 1, 0], [8, -6, 1, 0]])
        report = validate_itinerary(itin, 10.0, 0.6)
        failures = [(c.rule, c.index) for c in report.failures]
        assert failures == [("turning", 1)]
        assert report.failures[0].value > 0.6

    def test_wrong_form_flagged(self):
        """Test that a translation moving a sleeper is flagged."""
        itin = self._hand_built([[6, 8, 1, 1]])
        report = validate_itinerary(itin, 10.0, 0.6)
        assert [c.rule for c in report.failures] == ["form"]


def test_asymptotic_thresholds():
    """Test the small-eps thresholds."""
    values = asymptotic_thresholds(0.05, 3)
    assert values["l_min"] == pytest.approx(0.05**-10)
    assert values["theta_max"] == pytest.approx(0.05**10)
    assert values["step_time"] == pytest.approx(0.05**-20)
