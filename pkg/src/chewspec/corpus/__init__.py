"""
Bundled worked corpora.

A corpus is a directory holding a source repository, the isolated module,
the fixture specs, the standard's text, recorded transcripts, the bug
catalog and golden expectations. Only BFD ships; other protocols register
a CorpusLayout of the same shape.
"""

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Union

from chewspec.diff.catalog import BugCatalog, load_catalog
from chewspec.errors import ConfigError
from chewspec.pfs.model import FormatSpec
from chewspec.pfs.parser import parse_spec

logger = logging.getLogger(__name__)

CORPUS_ROOT = Path(__file__).resolve().parent


@dataclass(frozen=True)
class CorpusLayout:
    name: str
    root: Path
    entry: str
    language: str
    code_spec: str
    doc_spec: str
    document: str
    module_file: str

    @property
    def repo(self) -> Path:
        return self.root / "repo"

    @property
    def specs(self) -> Path:
        return self.root / "specs"

    @property
    def rfc(self) -> Path:
        return self.root / "rfc" / self.document

    @property
    def module(self) -> Path:
        return self.root / "module" / self.module_file

    @property
    def transcripts(self) -> Path:
        return self.root / "transcripts"

    @property
    def catalog(self) -> Path:
        return self.root / "catalog.json"

    @property
    def golden(self) -> Path:
        return self.root / "golden" / "expected.json"

    def spec_path(self, name: str) -> Path:
        return self.specs / f"{name}.pfs"

    def load_spec(self, name: str) -> FormatSpec:
        return parse_spec(self.spec_path(name).read_text(encoding="utf-8"))

    def load_code_spec(self) -> FormatSpec:
        return self.load_spec(self.code_spec)

    def load_doc_spec(self) -> FormatSpec:
        return self.load_spec(self.doc_spec)

    def load_catalog(self) -> BugCatalog:
        return load_catalog(self.catalog)

    def document_text(self) -> str:
        return self.rfc.read_text(encoding="utf-8")

    def expected(self) -> Dict[str, Any]:
        return json.loads(self.golden.read_text(encoding="utf-8"))


BFD = CorpusLayout(
    name="bfd",
    root=CORPUS_ROOT / "bfd",
    entry="bfd_recv_cb",
    language="c",
    code_spec="bfd_code",
    doc_spec="bfd_doc",
    document="rfc5880.txt",
    module_file="bfd_module.c",
)

CORPORA: Dict[str, CorpusLayout] = {BFD.name: BFD}


def get_corpus(name: Union[str, CorpusLayout] = "bfd") -> CorpusLayout:
    if isinstance(name, CorpusLayout):
        return name
    try:
        corpus = CORPORA[name]
    except KeyError:
        available = ", ".join(sorted(CORPORA))
        message = f"Unknown corpus '{name}'. Available: {available}"
        raise ConfigError(message) from None
    if not corpus.root.is_dir():
        raise ConfigError(f"Corpus '{name}' is not installed at {corpus.root}")
    return corpus


@lru_cache(maxsize=None)
def bfd_code_spec() -> FormatSpec:
    return BFD.load_code_spec()


@lru_cache(maxsize=None)
def bfd_doc_spec() -> FormatSpec:
    return BFD.load_doc_spec()


__all__ = [
    "BFD",
    "CORPORA",
    "CorpusLayout",
    "bfd_code_spec",
    "bfd_doc_spec",
    "get_corpus",
]
