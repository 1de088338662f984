import json

import pytest

from chewspec.utils import (
    canonical_json,
    derive_seed,
    json_line,
    relative_posix,
    safe_write,
    sha256_hex,
)


def test_safe_write(tmp_path):
    test_file = tmp_path / "nested" / "test.txt"
    safe_write(test_file, "test content")
    assert test_file.read_text() == "test content"

    # Test overwrite protection
    with pytest.raises(FileExistsError):
        safe_write(test_file, "new content")

    safe_write(test_file, b"\x00\x01", overwrite=True)
    assert test_file.read_bytes() == b"\x00\x01"
    assert [p.name for p in test_file.parent.iterdir()] == ["test.txt"]


def test_canonical_json():
    text = canonical_json({"b": 1, "a": "é"})
    assert text == '{\n  "a": "\\u00e9",\n  "b": 1\n}\n'
    assert json.loads(text) == {"a": "é", "b": 1}
    assert canonical_json([1], indent=None) == "[1]"
    assert json_line({"b": [1, 2], "a": None}) == '{"a":null,"b":[1,2]}'


def test_derive_seed_is_stable():
    assert derive_seed("bfd", 0) == derive_seed("bfd", 0)
    assert derive_seed("bfd", 0) != derive_seed("bfd", 1)
    assert 0 <= derive_seed("x") < 1 << 64
    assert sha256_hex("abc") == sha256_hex(b"abc")
    assert sha256_hex("").startswith("e3b0c442")


def test_relative_posix(tmp_path):
    path = tmp_path / "a" / "b.c"
    assert relative_posix(path, tmp_path) == "a/b.c"
    with pytest.raises(ValueError):
        relative_posix(tmp_path, path)
