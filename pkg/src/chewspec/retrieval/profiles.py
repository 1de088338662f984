"""
Language profiles for the source indexer.

A profile knows which files belong to its language, how to pull definitions
out of one file and how to list the identifiers a snippet uses without
defining. The C profile is built on tree-sitter; the Python profile on
astroid.
"""

import builtins
from functools import lru_cache
import logging
import re
import textwrap
from typing import Any, Dict, Iterator, List, Optional, Set, Tuple, Type

import astroid
from astroid import nodes
from tree_sitter import Language, Node, Parser
import tree_sitter_c

from chewspec.constants import C_KEYWORDS, C_STANDARD_SYMBOLS, INDEX_SUFFIXES
from chewspec.errors import SnippetParseError
from chewspec.retrieval.model import Definition

logger = logging.getLogger(__name__)

IDENTIFIER = re.compile(r"\b[A-Za-z_][A-Za-z0-9_]*")


class LanguageProfile:
    name = ""

    @property
    def suffixes(self) -> Tuple[str, ...]:
        return INDEX_SUFFIXES[self.name]

    def parse(self, source: bytes) -> Any:
        raise NotImplementedError

    def definitions(self, tree: Any, source: bytes, file: str) -> List[Definition]:
        raise NotImplementedError

    def references(self, snippet: str) -> Set[str]:
        """Identifiers ``snippet`` uses but does not define, minus standard symbols."""
        raise NotImplementedError


class CProfile(LanguageProfile):
    name = "c"
    AGGREGATES = ("struct_specifier", "union_specifier", "enum_specifier")
    PREPROC_BLOCKS = (
        "preproc_if",
        "preproc_ifdef",
        "preproc_elif",
        "preproc_else",
        "preproc_elifdef",
    )
    BARE_NAMES = ("identifier", "type_identifier")
    NAMES = BARE_NAMES + ("field_identifier",)
    DECLARING = (
        "function_definition",
        "parameter_declaration",
        "declaration",
        "type_definition",
    )

    def __init__(self) -> None:
        self.language = Language(tree_sitter_c.language())
        self.parser = Parser(self.language)

    def parse(self, source: bytes) -> Any:
        return self.parser.parse(source)

    @staticmethod
    def _text(node: Node) -> str:
        return node.text.decode("utf-8", errors="replace")

    @staticmethod
    def declared_name(node: Optional[Node]) -> Optional[Node]:
        """Innermost identifier of a declarator chain."""
        while node is not None and node.type not in CProfile.NAMES:
            inner = node.child_by_field_name("declarator")
            if inner is None:
                named = node.named_children
                inner = next((c for c in named if c.type in CProfile.BARE_NAMES), None)
            node = inner
        return node

    @staticmethod
    def is_function_declarator(node: Optional[Node]) -> bool:
        while node is not None:
            if node.type == "function_declarator":
                return True
            node = node.child_by_field_name("declarator")
        return False

    def _definition(
        self,
        name_node: Node,
        kind: str,
        span_node: Node,
        source: bytes,
        file: str,
        end: Optional[int] = None,
    ) -> Definition:
        start, end = span_node.start_byte, end or span_node.end_byte
        return Definition(
            name=self._text(name_node),
            kind=kind,
            file=file,
            start=start,
            end=end,
            line=span_node.start_point[0] + 1,
            text=source[start:end].decode("utf-8", errors="replace"),
        )

    def definitions(self, tree: Any, source: bytes, file: str) -> List[Definition]:
        return list(self._walk(tree.root_node, source, file))

    def _aggregate(
        self,
        spec: Optional[Node],
        span_node: Node,
        source: bytes,
        file: str,
        end: Optional[int] = None,
    ) -> Iterator[Definition]:
        if spec is None or spec.type not in self.AGGREGATES:
            return
        tag = spec.child_by_field_name("name")
        if tag is not None and spec.child_by_field_name("body") is not None:
            yield self._definition(tag, "type", span_node, source, file, end)

    def _walk(self, node: Node, source: bytes, file: str) -> Iterator[Definition]:
        for child in node.named_children:
            kind = child.type
            if kind == "function_definition":
                name = self.declared_name(child.child_by_field_name("declarator"))
                if name is not None:
                    yield self._definition(name, "function", child, source, file)
            elif kind in ("preproc_def", "preproc_function_def"):
                name = child.child_by_field_name("name")
                yield self._definition(name, "macro", child, source, file)
            elif kind == "type_definition":
                spec = child.child_by_field_name("type")
                yield from self._aggregate(spec, child, source, file)
                for declarator in child.children_by_field_name("declarator"):
                    name = self.declared_name(declarator)
                    if name is not None:
                        yield self._definition(name, "type", child, source, file)
            elif kind in self.AGGREGATES:
                # a bare `struct tag { ... };` keeps its semicolon
                after = child.next_sibling
                end = None
                if after is not None and after.type == ";":
                    end = after.end_byte
                yield from self._aggregate(child, child, source, file, end)
            elif kind == "declaration":
                spec = child.child_by_field_name("type")
                yield from self._aggregate(spec, child, source, file)
                if any(
                    c.type == "storage_class_specifier" and self._text(c) == "extern"
                    for c in child.children
                ):
                    continue
                for declarator in child.children_by_field_name("declarator"):
                    if self.is_function_declarator(declarator):
                        continue
                    name = self.declared_name(declarator)
                    if name is not None:
                        yield self._definition(name, "global", child, source, file)
            elif kind in self.PREPROC_BLOCKS:
                # every branch is indexed
                yield from self._walk(child, source, file)

    def references(self, snippet: str) -> Set[str]:
        source = snippet.encode("utf-8")
        tree = self.parse(source)
        if tree.root_node.has_error:
            raise SnippetParseError(f"Snippet does not parse as C: {snippet[:60]!r}")
        defined: Set[str] = set()
        used: Set[str] = set()
        self._collect(tree.root_node, defined, used)
        return used - defined - C_STANDARD_SYMBOLS - C_KEYWORDS

    def _collect(self, node: Node, defined: Set[str], used: Set[str]) -> None:
        kind = node.type
        if kind in self.DECLARING:
            for declarator in node.children_by_field_name("declarator"):
                name = self.declared_name(declarator)
                if name is not None:
                    defined.add(self._text(name))
        elif kind in ("preproc_def", "preproc_function_def"):
            defined.add(self._text(node.child_by_field_name("name")))
        elif kind == "preproc_params":
            defined.update(
                self._text(c) for c in node.named_children if c.type == "identifier"
            )
            return
        elif kind == "preproc_arg":
            used.update(IDENTIFIER.findall(self._text(node)))
            return
        elif kind in ("identifier", "type_identifier"):
            used.add(self._text(node))
            return
        for child in node.named_children:
            self._collect(child, defined, used)


class PythonProfile(LanguageProfile):
    name = "python"
    BUILTINS = frozenset(dir(builtins)) | {"__name__", "__file__", "self", "cls"}

    def parse(self, source: bytes) -> Any:
        return astroid.parse(source.decode("utf-8", errors="replace"))

    @staticmethod
    def _offsets(source: bytes) -> List[int]:
        starts = [0]
        for line in source.splitlines(keepends=True):
            starts.append(starts[-1] + len(line))
        return starts

    def definitions(self, tree: Any, source: bytes, file: str) -> List[Definition]:
        starts = self._offsets(source)
        found: List[Definition] = []

        def add(name: str, kind: str, node: nodes.NodeNG) -> None:
            first = node.decorators if getattr(node, "decorators", None) else node
            start = starts[first.lineno - 1] + first.col_offset
            end = starts[node.end_lineno - 1] + node.end_col_offset
            text = source[start:end].decode("utf-8", errors="replace")
            found.append(Definition(name, kind, file, start, end, first.lineno, text))

        for node in tree.body:
            if isinstance(node, (nodes.FunctionDef, nodes.AsyncFunctionDef)):
                add(node.name, "function", node)
            elif isinstance(node, nodes.ClassDef):
                add(node.name, "type", node)
            elif isinstance(node, (nodes.Assign, nodes.AnnAssign)):
                if isinstance(node, nodes.Assign):
                    targets = node.targets
                else:
                    targets = [node.target]
                for target in targets:
                    for assigned in target.nodes_of_class(nodes.AssignName):
                        add(assigned.name, "global", node)
        return found

    def references(self, snippet: str) -> Set[str]:
        try:
            module = astroid.parse(textwrap.dedent(snippet))
        except astroid.AstroidSyntaxError as exc:
            raise SnippetParseError(f"Snippet does not parse as Python: {exc}") from exc
        defined: Set[str] = {n.name for n in module.nodes_of_class(nodes.AssignName)}
        scopes = module.nodes_of_class((nodes.FunctionDef, nodes.ClassDef))
        defined |= {n.name for n in scopes}
        for imp in module.nodes_of_class((nodes.Import, nodes.ImportFrom)):
            defined |= {(alias or name).split(".")[0] for name, alias in imp.names}
        used = {n.name for n in module.nodes_of_class(nodes.Name)}
        return used - defined - self.BUILTINS


PROFILES: Dict[str, Type[LanguageProfile]] = {"c": CProfile, "python": PythonProfile}


@lru_cache(maxsize=None)
def get_profile(language: str) -> LanguageProfile:
    try:
        return PROFILES[language]()
    except KeyError:
        raise ValueError(
            f"Unknown language profile '{language}'; "
            f"expected one of {', '.join(PROFILES)}"
        )
