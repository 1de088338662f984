"""Splitting standards documents into prompt-sized chunks at numbered headings."""

import logging
import re
from dataclasses import dataclass
from typing import List, Tuple

from chewspec.constants import CHUNK_MAX_CHARS, CHUNK_OVERLAP_CHARS

logger = logging.getLogger(__name__)

# "4.1.  Generic BFD Control Packet Format" at the start of an unindented line.
HEADING = re.compile(r"^\d+(?:\.\d+)*\.?[ \t]+[A-Z][^\n]*$", re.MULTILINE)


@dataclass(frozen=True)
class DocumentChunk:
    index: int
    heading: str
    start: int  # character offset into the document
    text: str


def split_sections(text: str) -> List[Tuple[str, int, str]]:
    """(heading, start, text) per numbered section.

    Text before the first heading is a section of its own.
    """
    starts = [m.start() for m in HEADING.finditer(text)]
    sections = []
    if not starts or starts[0] > 0:
        end = starts[0] if starts else len(text)
        if text[:end].strip():
            sections.append(("", 0, text[:end]))
    for i, start in enumerate(starts):
        end = starts[i + 1] if i + 1 < len(starts) else len(text)
        body = text[start:end]
        sections.append((body.splitlines()[0].strip(), start, body))
    return sections


def _windows(text: str, max_chars: int, overlap: int) -> List[Tuple[int, str]]:
    if len(text) <= max_chars:
        return [(0, text)]
    windows = []
    start = 0
    while True:
        end = min(start + max_chars, len(text))
        if end < len(text):
            cut = text.rfind("\n\n", start + max_chars // 2, end)
            if cut != -1:
                end = cut + 1
        windows.append((start, text[start:end]))
        if end >= len(text):
            return windows
        start = max(end - overlap, start + 1)


def chunk_document(
    text: str, max_chars: int = CHUNK_MAX_CHARS, overlap: int = CHUNK_OVERLAP_CHARS
) -> List[DocumentChunk]:
    """Sections that fit stay whole; longer ones become overlapping windows."""
    if overlap >= max_chars:
        raise ValueError("Chunk overlap must be smaller than the chunk size")
    chunks: List[DocumentChunk] = []
    for heading, start, body in split_sections(text):
        windows = _windows(body, max_chars, overlap)
        for part, (offset, window) in enumerate(windows):
            label = heading if part == 0 else f"{heading} (part {part + 1})"
            chunks.append(DocumentChunk(len(chunks), label, start + offset, window))
    logger.debug(f"Split {len(text)} characters into {len(chunks)} chunks")
    return chunks
