import logging
import shutil
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from chewspec.constants import (
    BUILD_PROFILES,
    DEFAULT_BUILD_TIMEOUT,
    DEFAULT_PACKET_TIMEOUT,
    DEFAULT_STARTUP_GRACE,
    ERROR_TEMPLATES,
)
from chewspec.errors import HarnessError
from chewspec.utils import safe_write

logger = logging.getLogger(__name__)


@dataclass
class Workspace:
    """Scratch directory where candidate modules are written and built."""

    root: Path
    build_command: Optional[List[str]] = None
    build_timeout: float = DEFAULT_BUILD_TIMEOUT
    packet_timeout: float = DEFAULT_PACKET_TIMEOUT
    startup_grace: float = DEFAULT_STARTUP_GRACE
    environment: Dict[str, str] = field(default_factory=dict)
    profile: str = "c"
    build_lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    @classmethod
    def create(
        cls,
        parent: Optional[Path] = None,
        profile: str = "c",
        build_command: Optional[List[str]] = None,
        **kwargs,
    ) -> "Workspace":
        """Fresh empty workspace; ``build_command`` defaults to the profile's."""
        if parent is not None:
            Path(parent).mkdir(parents=True, exist_ok=True)
        root = Path(tempfile.mkdtemp(prefix="chewspec-ws-", dir=parent)).resolve()
        command = build_command
        if command is None:
            command = BUILD_PROFILES.get(profile)
        logger.debug(f"Created workspace {root} (profile {profile})")
        return cls(
            root=root,
            build_command=list(command) if command else None,
            profile=profile,
            **kwargs,
        )

    def resolve(self, relative: Union[str, Path]) -> Path:
        candidate = (self.root / relative).resolve()
        if candidate != self.root and self.root not in candidate.parents:
            logger.error(f"Rejected path outside workspace: {relative}")
            raise HarnessError(ERROR_TEMPLATES["escape"].format(path=relative))
        return candidate

    def write_file(self, relative: Union[str, Path], content: str) -> Path:
        return safe_write(self.resolve(relative), content, overwrite=True)

    def read_file(self, relative: Union[str, Path]) -> str:
        return self.resolve(relative).read_text(encoding="utf-8")

    def list_files(self) -> List[str]:
        return sorted(
            p.relative_to(self.root).as_posix()
            for p in self.root.rglob("*")
            if p.is_file()
        )

    def cleanup(self) -> None:
        shutil.rmtree(self.root, ignore_errors=True)

    def __enter__(self) -> "Workspace":
        return self

    def __exit__(self, *exc_info) -> None:
        self.cleanup()
