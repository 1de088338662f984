import shutil
from pathlib import Path

import pytest

from chewspec.corpus import BFD, bfd_code_spec, bfd_doc_spec
from chewspec.pfs import parse_spec

FIXTURES = Path(__file__).parent / "fixtures"
SPEC_DIR = FIXTURES / "specs"

HAVE_CC = shutil.which("cc") is not None


def pytest_collection_modifyitems(config, items):
    if HAVE_CC:
        return
    skip_cc = pytest.mark.skip(reason="needs a C compiler (cc) on PATH")
    for item in items:
        if "needs_cc" in item.keywords:
            item.add_marker(skip_cc)


def spec_text(name: str) -> str:
    return (SPEC_DIR / f"{name}.pfs").read_text(encoding="utf-8")


@pytest.fixture
def load_spec():
    """Parse one of the fixture specs by stem."""

    def _load(name: str):
        return parse_spec(spec_text(name))

    return _load


@pytest.fixture
def bfd_code():
    return bfd_code_spec()


@pytest.fixture
def bfd_doc():
    return bfd_doc_spec()


@pytest.fixture
def bfd_corpus():
    return BFD


@pytest.fixture
def fixture_spec(load_spec):
    """Any fixture spec by name, the bundled BFD pair included."""
    bundled = {"bfd_code": bfd_code_spec, "bfd_doc": bfd_doc_spec}

    def _get(name: str):
        return bundled[name]() if name in bundled else load_spec(name)

    return _get
