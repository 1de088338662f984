from chewspec.diff import align_fields, diff_specs
from chewspec.pfs import parse_spec
from chewspec.pfs.model import rename_fields


def test_bfd_groups(bfd_code, bfd_doc):
    alignment = align_fields(bfd_code, bfd_doc)
    assert len(alignment.groups) == 10
    assert all(group.matched for group in alignment.groups)
    flags = next(g for g in alignment.groups if g.names("a") == "flags")
    assert flags.names("b") == "sta,p,f,c,a,d,m"
    assert flags.position == "0:8+8"
    assert flags.width == 8


def test_bfd_unmatched_tails(bfd_code, bfd_doc):
    alignment = align_fields(bfd_code, bfd_doc)
    assert [u.location for u in alignment.unmatched("a")] == ["auth_data"]
    assert [u.location for u in alignment.unmatched("b")] == ["if(a == 1)"]


def test_alignment_ignores_names(bfd_doc):
    mapping = {"vers": "version", "detect_mult": "mult", "auth_len": "alen"}
    renamed = rename_fields(bfd_doc, mapping)
    alignment = align_fields(renamed, bfd_doc)
    assert alignment.unmatched("a") == []
    assert alignment.unmatched("b") == []
    assert alignment.unmatched_arms == []
    assert all(group.matched for group in alignment.groups)


def test_bit_slots_inside_a_split_group(bfd_code, bfd_doc):
    alignment = align_fields(bfd_code, bfd_doc)
    doc_root = alignment.scope_pairs[0][1]
    m_slot = alignment.resolve("b", doc_root, "m")
    sta_slot = alignment.resolve("b", doc_root, "sta")
    assert (m_slot.shift, m_slot.width) == (0, 1)
    assert (sta_slot.shift, sta_slot.width) == (6, 2)
    assert m_slot.group == sta_slot.group


def test_overlapping_splits_are_a_type_mismatch():
    a = parse_spec("format a { x: u8; y: u8; }")
    b = parse_spec("format b { x: u4; y: u12; }")
    alignment = align_fields(a, b)
    assert len(alignment.groups) == 1
    assert alignment.groups[0].status == "type-mismatch"

    report = diff_specs(a, b)
    found = [(d.kind, d.location) for d in report.discrepancies]
    assert found == [("TYPE_MISMATCH", "x,y ~ x,y")]


def test_bytes_against_integer_is_a_type_mismatch():
    a = parse_spec("format a { tag: bytes[2]; }")
    b = parse_spec("format b { tag: u16; }")
    assert [d.kind for d in diff_specs(a, b).discrepancies] == ["TYPE_MISMATCH"]


def test_equivalent_guards_align(load_spec):
    spec = load_spec("optional")
    flipped = parse_spec(
        """
        format optional {
            present: u1;
            reserved: u7 where reserved == 0;
            if 1 == present {
                value: u8 where value != 0;
            }
        }
        """
    )
    alignment = align_fields(spec, flipped)
    assert alignment.unmatched("a") == [] and alignment.unmatched("b") == []
    assert len(alignment.scope_pairs) == 2
    assert diff_specs(spec, flipped).clean


def test_different_guards_do_not_align(load_spec):
    spec = load_spec("optional")
    other = parse_spec(spec_source_with_guard("present == 0"))
    alignment = align_fields(spec, other)
    assert [u.location for u in alignment.unmatched("a")] == ["if(present == 1)"]
    assert [u.location for u in alignment.unmatched("b")] == ["if(present == 0)"]


def test_arms_align_by_tag(load_spec):
    spec = load_spec("tagged")
    fewer = parse_spec(
        """
        format tagged {
            tag: u2;
            rest: u6;
            switch tag {
                1 => { y: u8 where y > 0; }
                default => { z: u8 where z == 255; }
            }
        }
        """
    )
    alignment = align_fields(spec, fewer)
    assert [(side, tag) for side, _, _, tag in alignment.unmatched_arms] == [("a", 0)]
    report = diff_specs(spec, fewer)
    found = [(d.kind, d.location) for d in report.discrepancies]
    assert found == [("MISSING_FIELD_IN_DOC", "tag=0")]


def spec_source_with_guard(guard):
    return f"""
    format optional {{
        present: u1;
        reserved: u7 where reserved == 0;
        if {guard} {{
            value: u8 where value != 0;
        }}
    }}
    """
