from collections import Counter

import pytest

from chewspec.constants import SWAPPED_KINDS
from chewspec.corpus import BFD, bfd_code_spec, bfd_doc_spec
from chewspec.diff import ValidationReport, diff_specs
from chewspec.packets import check_packet
from chewspec.pfs import parse_spec
from chewspec.pfs.model import rename_fields
from tests.test_packets import ALL_FIXTURES


@pytest.fixture(scope="module")
def bfd_report():
    return diff_specs(bfd_code_spec(), bfd_doc_spec())


def pairs(report):
    return sorted((d.kind, d.location) for d in report.discrepancies)


def test_bfd_discrepancies_match_golden(bfd_report):
    golden = BFD.expected()["discrepancies"]
    assert pairs(bfd_report) == sorted((d["kind"], d["location"]) for d in golden)


def test_bfd_summary(bfd_report):
    summary = bfd_report.summary
    assert summary["total"] == 10
    assert summary["by_kind"]["MISSING_FIELD_IN_CODE"] == 6
    assert summary["by_kind"]["TYPE_MISMATCH"] == 0
    assert summary["by_category"] == {"field type": 7, "field constraint": 3}
    assert not bfd_report.clean


def test_constraint_discrepancy_details(bfd_report, bfd_code):
    missing = bfd_report.of_kind("CONSTRAINT_MISSING_IN_DOC")
    (detect,) = [d for d in missing if d.location == "detect_mult"]
    assert detect.constraint == "detect_mult != 0"
    assert detect.constraint_id == bfd_code.find_constraint("detect_mult != 0").id
    assert detect.details == {"code": "detect_mult != 0", "doc": "(none)"}
    assert detect.exhaustive is True
    assert detect.code_location.startswith("detect_mult @ ")
    assert detect.doc_location is None


def test_witnesses_separate_the_specs(bfd_report, bfd_code, bfd_doc):
    witnessed = [d for d in bfd_report.discrepancies if d.witness]
    assert any(d.location == "detect_mult" for d in witnessed)
    for d in witnessed:
        data = bytes.fromhex(d.witness)
        code_accepts = check_packet(bfd_code, data).accepted
        assert code_accepts != check_packet(bfd_doc, data).accepted


def test_detect_mult_witness_is_accepted_by_doc(bfd_report, bfd_code, bfd_doc):
    (detect,) = [d for d in bfd_report.discrepancies if d.location == "detect_mult"]
    data = bytes.fromhex(detect.witness)
    assert check_packet(bfd_doc, data).accepted
    code_result = check_packet(bfd_code, data)
    detect_id = bfd_code.find_constraint("detect_mult != 0").id
    assert code_result.failed_constraint == detect_id


def test_missing_section_details(bfd_report):
    location = "if(a == 1) / auth_type=2"
    arm = next(d for d in bfd_report.discrepancies if d.location == location)
    assert arm.details["code"] == "(absent)"
    fields = "auth_key_id, reserved, seq_num, auth_digest"
    assert arm.details["doc"] == f"auth_type=2 {{ {fields} }}"


def test_swapping_sides_swaps_kinds(bfd_report, bfd_code, bfd_doc):
    swapped = diff_specs(bfd_doc, bfd_code)
    expected = Counter(
        (SWAPPED_KINDS.get(kind, kind), where) for kind, where in pairs(bfd_report)
    )
    assert Counter(pairs(swapped)) == expected


def test_identical_specs_are_clean(bfd_code, load_spec):
    assert diff_specs(bfd_code, bfd_code).clean
    nested = load_spec("nested")
    assert diff_specs(nested, nested).discrepancies == []


def test_renaming_alone_is_clean(bfd_code):
    mapping = {"vers": "version", "detect_mult": "mult", "length": "pkt_len"}
    renamed = rename_fields(bfd_code, mapping)
    assert diff_specs(bfd_code, renamed).clean


def test_rewritten_constraint_is_clean():
    a = parse_spec("format a { len: u8 where len >= 24; }")
    b = parse_spec("format b { size: u8 where not size < 24; }")
    assert diff_specs(a, b).clean


def test_disjoint_constraints_conflict():
    a = parse_spec("format a { x: u8 where x < 10; }")
    b = parse_spec("format b { x: u8 where x > 20; }")
    report = diff_specs(a, b)
    assert report.discrepancies
    assert {d.kind for d in report.discrepancies} == {"CONSTRAINT_CONFLICT"}


def test_weaker_doc_constraint():
    a = parse_spec("format a { x: u8 where x < 10; }")
    b = parse_spec("format b { x: u8 where x < 20; }")
    report = diff_specs(a, b)
    assert pairs(report) == [("CONSTRAINT_MISSING_IN_DOC", "x")]
    witness = bytes.fromhex(report.discrepancies[0].witness)
    assert 10 <= witness[0] < 20


def test_global_constraints_are_compared(load_spec):
    ordered = load_spec("ordered")
    loose = parse_spec("format loose { a: u4; b: u4; }")
    report = diff_specs(ordered, loose)
    assert pairs(report) == [("CONSTRAINT_MISSING_IN_DOC", "<global>")]


def test_report_dict_round_trip(bfd_report):
    data = bfd_report.to_dict()
    assert data["schema_version"] == 1
    assert data["code_spec"]["name"] == "bfd_code"
    assert data["doc_spec"]["digest"].startswith("sha256:")
    assert ValidationReport.from_dict(data).to_dict() == data


def test_report_rejects_inconsistent_summary(bfd_report):
    data = bfd_report.to_dict()
    data["summary"]["by_kind"]["TYPE_MISMATCH"] = 3
    with pytest.raises(ValueError, match="summary"):
        ValidationReport.from_dict(data)


def test_diff_is_deterministic(bfd_report):
    again = diff_specs(bfd_code_spec(), bfd_doc_spec())
    assert again.to_dict() == bfd_report.to_dict()


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_self_diff_is_clean_under_renaming(fixture_spec, name):
    spec = fixture_spec(name)
    assert diff_specs(spec, spec).discrepancies == []
    mapping = {fdef.name: f"{fdef.name}_2" for _, fdef in spec.iter_fields()}
    assert diff_specs(spec, rename_fields(spec, mapping)).discrepancies == []
