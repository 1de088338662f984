"""Syntax-tree source indexing and dependency-aware context retrieval."""

from chewspec.retrieval.index import (
    closure_from_entry,
    expand_dependencies,
    index_repo,
    lookup_definition,
    resolve_entry,
)
from chewspec.retrieval.model import ContextBundle, Definition, SourceIndex
from chewspec.retrieval.profiles import (
    CProfile,
    LanguageProfile,
    PythonProfile,
    get_profile,
)

__all__ = [
    "CProfile",
    "ContextBundle",
    "Definition",
    "LanguageProfile",
    "PythonProfile",
    "SourceIndex",
    "closure_from_entry",
    "expand_dependencies",
    "get_profile",
    "index_repo",
    "lookup_definition",
    "resolve_entry",
]
