import pytest

from chewspec.diff import Relation, check_implication, constraints_equivalent
from chewspec.diff.equivalence import constraint_predicate, iter_assignments
from chewspec.pfs import parse_constraint


def test_rewritten_bound_is_equivalent():
    result = constraints_equivalent("a <= 3", "a < 4", {"a": 8})
    assert result.relation == Relation.EQUIVALENT
    assert result.exhaustive
    assert result.counterexamples == {}


def test_identical_text_short_circuits():
    result = constraints_equivalent("vers == 1", "vers   ==  1", {})
    assert result.relation == Relation.EQUIVALENT


def test_one_way_implication():
    result = constraints_equivalent("a < 3", "a < 4", {"a": 8})
    assert result.relation == Relation.C1_IMPLIES_C2
    assert result.counterexamples == {"c2_not_c1": {"a": 3}}
    reverse = constraints_equivalent("a < 4", "a < 3", {"a": 8})
    assert reverse.relation == Relation.C2_IMPLIES_C1


def test_incomparable():
    result = constraints_equivalent("a == 1", "b == 1", {"a": 8, "b": 8})
    assert result.relation == Relation.INCOMPARABLE
    assert set(result.counterexamples) == {"c1_not_c2", "c2_not_c1"}
    assert str(result.relation) == "incomparable"


def test_wide_fields_are_sampled():
    result = constraints_equivalent("x != 0", "x > 0", {"x": 32})
    assert result.relation == Relation.EQUIVALENT
    assert not result.exhaustive


def test_wide_fields_still_find_boundary_counterexamples():
    result = constraints_equivalent("x < 4294967295", "x != 0", {"x": 32})
    assert result.relation == Relation.INCOMPARABLE


def test_total_len_joins_the_domain():
    result = constraints_equivalent(
        "length <= total_len", "length < total_len + 1", {"length": 8}
    )
    assert result.relation == Relation.EQUIVALENT
    assert result.exhaustive


def test_missing_width():
    with pytest.raises(ValueError, match="No width given for b"):
        constraints_equivalent("a == 1", "b == 1", {"a": 8})


def test_exhaustive_enumeration_is_complete():
    assignments, exhaustive = iter_assignments([("a", 2), ("b", 3)])
    assert exhaustive
    assert len(list(assignments)) == 32


def test_sampling_is_reproducible():
    first, exhaustive = iter_assignments([("a", 32), ("b", 32)])
    second, _ = iter_assignments([("a", 32), ("b", 32)])
    assert not exhaustive
    assert [next(first) for _ in range(50)] == [next(second) for _ in range(50)]


def test_check_implication_reports_conflict():
    premise = constraint_predicate(parse_constraint("x > 20"))
    conclusion = constraint_predicate(parse_constraint("x < 10"))
    result = check_implication([premise], conclusion, [("x", 8)])
    assert not result.implied
    assert result.conflict
    assert result.counterexamples[0] == {"x": 21}


def test_check_implication_without_premises():
    conclusion = constraint_predicate(parse_constraint("x != 0"))
    result = check_implication([], conclusion, [("x", 4)])
    assert not result.implied
    assert result.counterexamples == [{"x": 0}]
    assert not result.conflict


EQ, FWD, BACK, NONE = (
    Relation.EQUIVALENT,
    Relation.C1_IMPLIES_C2,
    Relation.C2_IMPLIES_C1,
    Relation.INCOMPARABLE,
)


@pytest.mark.parametrize(
    "c1,c2,relation",
    [
        ("x != 0", "x >= 1", EQ),
        ("x > 24", "x >= 24", FWD),
        ("x >= 24", "x > 24", BACK),
        ("x > 24", "x >= 25", EQ),
        ("x < 10", "not (x >= 10)", EQ),
        ("x == 5", "x >= 5 and x <= 5", EQ),
        ("x <= 255", "x >= 0", EQ),
        ("x == 1", "x != 1", NONE),
        ("x + 1 > 10", "x > 9", EQ),
        ("x * 2 == 6", "x == 3", EQ),
        ("x * 4 <= 255", "x <= 63", EQ),
        ("x == 0 or x == 1", "x <= 1", EQ),
        ("x == 2", "x >= 1", FWD),
        ("x < 16", "x <= 200", FWD),
        ("x > 100", "x < 50", NONE),
        ("x == 300", "x != x", EQ),
        ("x < y", "y > x", EQ),
        ("x <= y", "x < y", BACK),
        ("x == y", "x <= y and y <= x", EQ),
        ("x - y >= 0", "x >= y", EQ),
        ("x != 0 and y != 0", "x != 0", FWD),
        ("not (x == 0 or y == 0)", "x != 0 and y != 0", EQ),
        ("x == 1", "y == 1", NONE),
        ("length >= 24", "length > 23", EQ),
        ("length <= total_len", "total_len >= length", EQ),
    ],
)
def test_hand_picked_pairs_over_bytes(c1, c2, relation):
    result = constraints_equivalent(c1, c2, {"x": 8, "y": 8, "length": 8})
    assert result.exhaustive
    assert result.relation == relation, result.counterexamples
    if relation == EQ:
        assert result.counterexamples == {}
