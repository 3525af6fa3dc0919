"""Shadowing itineraries: sections, translations and their validation."""

from app.services.itinerary.compiler import (
    TRANSITIONS,
    Itinerary,
    ItineraryParams,
    ItineraryReport,
    RuleCheck,
    TransferProfile,
    TranslationForm,
    asymptotic_thresholds,
    compile_itinerary,
    pick_translation,
    translation_form,
    validate_itinerary,
)
from app.services.itinerary.sections import (
    EdgeRoles,
    Role,
    Section,
    edge_roles,
    section_center,
    section_for,
)

__all__ = [
    "TRANSITIONS",
    "EdgeRoles",
    "Itinerary",
    "ItineraryParams",
    "ItineraryReport",
    "Role",
    "RuleCheck",
    "Section",
    "TransferProfile",
    "TranslationForm",
    "asymptotic_thresholds",
    "compile_itinerary",
    "edge_roles",
    "pick_translation",
    "section_center",
    "section_for",
    "translation_form",
    "validate_itinerary",
]
