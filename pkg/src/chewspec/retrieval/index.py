"""
Dependency-aware retrieval over a source repository.

``closure_from_entry`` walks outward from the entry parsing function one
round at a time: every identifier a retrieved definition uses but does not
define is looked up, in sorted order, until nothing is left or the symbol
budget is spent.
"""

import fnmatch
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Set, Union

from chewspec.constants import (
    DEFAULT_EXCLUSIONS,
    DEFAULT_RETRIEVAL_BUDGET,
    ERROR_TEMPLATES,
)
from chewspec.errors import (
    AmbiguousEntryError,
    EntryNotFoundError,
    RepoIndexError,
    SnippetParseError,
)
from chewspec.retrieval.model import ContextBundle, Definition, SourceIndex
from chewspec.retrieval.profiles import LanguageProfile, get_profile
from chewspec.utils import relative_posix, sha256_hex

logger = logging.getLogger(__name__)


def _excluded(relative: str, patterns: Sequence[str]) -> bool:
    directories = relative.split("/")[:-1]
    return any(
        fnmatch.fnmatch(relative, pattern)
        or any(fnmatch.fnmatch(part, pattern) for part in directories)
        for pattern in patterns
    )


def discover_sources(
    root: Path,
    profile: LanguageProfile,
    exclude: Sequence[str] = DEFAULT_EXCLUSIONS,
) -> List[Path]:
    found = [
        path
        for path in root.rglob("*")
        if path.is_file()
        and path.suffix in profile.suffixes
        and not _excluded(relative_posix(path, root), exclude)
    ]
    return sorted(found, key=lambda p: relative_posix(p, root))


def index_repo(
    path: Union[str, Path],
    language: str = "c",
    exclude: Sequence[str] = DEFAULT_EXCLUSIONS,
) -> SourceIndex:
    """Index every function, type, macro and file-scope global under ``path``."""
    root = Path(path).resolve()
    if not root.is_dir():
        logger.error(f"Repository path is not a directory: {root}")
        raise RepoIndexError(f"Repository path is not a directory: {root}")
    profile = get_profile(language)
    logger.info(f"🔍 Indexing {language} sources under {root}")

    index = SourceIndex(root=root, language=language)
    for file in discover_sources(root, profile, exclude):
        relative = relative_posix(file, root)
        try:
            source = file.read_bytes()
        except OSError as exc:
            logger.warning(f"Skipping unreadable file {relative}: {exc}")
            continue
        try:
            tree = profile.parse(source)
        except Exception as exc:
            logger.warning(f"Skipping {relative}: parse failed: {exc}")
            continue
        index.files[relative] = sha256_hex(source)
        index.trees[relative] = tree
        definitions = profile.definitions(tree, source, relative)
        logger.debug(f"{relative}: {len(definitions)} definitions")
        for definition in definitions:
            index.add(definition)

    if not index.files:
        template = ERROR_TEMPLATES["empty_repo"]
        raise RepoIndexError(template.format(language=language, path=root))
    count = index.definition_count
    logger.info(f"Indexed {count} definitions in {len(index.files)} files")
    return index


def lookup_definition(index: SourceIndex, name: str) -> List[Definition]:
    """Every definition of ``name``, in file order; empty when unknown."""
    found = list(index.symbols.get(name, []))
    logger.debug(f"lookup '{name}': {len(found)} candidates")
    return found


def expand_dependencies(
    index: SourceIndex, snippet: Union[Definition, str]
) -> List[str]:
    """Names the snippet references without defining, sorted."""
    profile = get_profile(index.language)
    if isinstance(snippet, Definition):
        names = profile.references(snippet.text) - {snippet.name}
    else:
        names = profile.references(snippet)
    return sorted(names)


def resolve_entry(index: SourceIndex, entry: str) -> Definition:
    candidates = index.functions(entry)
    if not candidates:
        logger.error(f"Entry function '{entry}' not found")
        raise EntryNotFoundError(ERROR_TEMPLATES["entry_not_found"].format(name=entry))
    if len(candidates) > 1:
        raise AmbiguousEntryError(entry, [d.provenance for d in candidates])
    return candidates[0]


def closure_from_entry(
    index: SourceIndex, entry: str, budget: int = DEFAULT_RETRIEVAL_BUDGET
) -> ContextBundle:
    """Breadth-first dependency closure of ``entry``, at most ``budget`` definitions."""
    if budget < 1:
        raise ValueError("Retrieval budget must be at least 1")
    root = resolve_entry(index, entry)
    bundle = ContextBundle(entry=entry)
    bundle.add(root)
    resolved: Set[str] = {entry}
    external: Set[str] = set()
    frontier = set(expand_dependencies(index, root)) - resolved
    pending: Optional[List[str]] = None

    while frontier:
        round_names = sorted(frontier)
        upcoming: Set[str] = set()
        for position, name in enumerate(round_names):
            if len(bundle.entries) >= budget:
                later = sorted(upcoming - resolved - set(round_names))
                pending = round_names[position:] + later
                break
            definitions = lookup_definition(index, name)
            resolved.add(name)
            if not definitions:
                external.add(name)
                continue
            for definition in definitions:
                if len(bundle.entries) >= budget:
                    break
                if bundle.add(definition):
                    logger.debug(
                        f"Retrieved {definition.kind} {name} "
                        f"from {definition.provenance}"
                    )
                    try:
                        upcoming.update(expand_dependencies(index, definition))
                    except SnippetParseError as exc:
                        logger.warning(f"Not expanding {name}: {exc}")
        if pending is not None:
            break
        frontier = upcoming - resolved

    bundle.frontier = sorted(set(pending or ()) - resolved)
    bundle.external = sorted(external)
    logger.info(
        f"Closure of '{entry}': {len(bundle.entries)} definitions, "
        f"{len(bundle.frontier)} pending, {len(bundle.external)} external"
    )
    return bundle
