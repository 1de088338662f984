from chewspec.constants import (
    DEFAULT_EXCLUSIONS,
    DISCREPANCY_KINDS,
    ERROR_TEMPLATES,
    FIELD_TYPE_KINDS,
    KEYWORDS,
    SWAPPED_KINDS,
)


def test_discrepancy_kinds():
    assert len(DISCREPANCY_KINDS) == 6
    assert set(FIELD_TYPE_KINDS) < set(DISCREPANCY_KINDS)
    for kind, swapped in SWAPPED_KINDS.items():
        assert SWAPPED_KINDS[swapped] == kind


def test_default_exclusions():
    assert any(pattern in DEFAULT_EXCLUSIONS for pattern in [".venv*", "build/*"])


def test_error_templates():
    assert "entry_not_found" in ERROR_TEMPLATES
    message = ERROR_TEMPLATES["budget"].format(loop="Syntax", budget=3)
    assert message == "Syntax budget of 3 exhausted"


def test_keywords():
    assert {"format", "switch", "where"} <= KEYWORDS
