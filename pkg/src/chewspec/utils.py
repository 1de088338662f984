import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Union

logger = logging.getLogger(__name__)


def safe_write(
    path: Path, content: Union[str, bytes], overwrite: bool = False
) -> Path:
    """Write a file atomically, creating parent directories.

    Text is always written as UTF-8 with ``\\n`` newlines so artifacts are
    byte-identical across platforms.
    """
    logger.debug(f"Attempting to write to {path}")
    path = Path(path)
    if path.exists() and not overwrite:
        logger.error(f"Cannot write: {path} exists and overwrite=False")
        raise FileExistsError(f"File already exists: {path}")

    path.parent.mkdir(parents=True, exist_ok=True)
    data = content.encode("utf-8") if isinstance(content, str) else content
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    logger.debug(f"Wrote {len(data)} bytes to {path}")
    return path


def canonical_json(obj: Any, indent: Union[int, None] = 2) -> str:
    """Deterministic JSON: sorted keys, ASCII only, trailing newline."""
    text = json.dumps(obj, sort_keys=True, indent=indent, ensure_ascii=True)
    return text + "\n" if indent is not None else text


def json_line(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_hex(data: Union[str, bytes]) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def derive_seed(*parts: Any) -> int:
    """Stable 64-bit seed from arbitrary parts; independent of PYTHONHASHSEED."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def relative_posix(path: Path, root: Path) -> str:
    """Path of ``path`` relative to ``root`` with forward slashes."""
    return Path(path).resolve().relative_to(Path(root).resolve()).as_posix()
