"""
Building isolated modules from a configured command template.

Templates are argument lists; ``{output}`` names the executable to produce,
``{python}`` the running interpreter, and an argument that is exactly
``{sources}`` expands to every source path.
"""

import logging
import os
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import chewspec
from chewspec.constants import ERROR_TEMPLATES
from chewspec.errors import BuildConfigError, BuildTimeoutError
from chewspec.harness.workspace import Workspace

logger = logging.getLogger(__name__)

EXECUTABLE_NAME = "module"


@dataclass
class BuildResult:
    success: bool
    executable: Optional[Path] = None
    diagnostics: str = ""
    command: List[str] = field(default_factory=list)
    returncode: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.success


def render_command(
    template: Sequence[str], output: Path, sources: Sequence[Path]
) -> List[str]:
    command: List[str] = []
    for arg in template:
        if arg == "{sources}":
            command.extend(str(s) for s in sources)
        else:
            command.append(arg.format(output=output, python=sys.executable))
    return command


def build_environment(ws: Workspace) -> Dict[str, str]:
    """Process environment plus workspace overrides.

    chewspec itself stays importable so launchers can run under it.
    """
    env = dict(os.environ)
    env.update(ws.environment)
    package_parent = str(Path(chewspec.__file__).resolve().parent.parent)
    existing = env.get("PYTHONPATH")
    if existing:
        env["PYTHONPATH"] = os.pathsep.join([package_parent, existing])
    else:
        env["PYTHONPATH"] = package_parent
    return env


def _stage_sources(ws: Workspace, sources: Sequence[Union[str, Path]]) -> List[Path]:
    staged = []
    for source in sources:
        path = Path(source)
        if not path.is_absolute():
            path = ws.resolve(path)
        path = path.resolve()
        if ws.root not in path.parents:
            target = ws.resolve(Path("src") / path.name)
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(path, target)
            path = target
        staged.append(path)
    return staged


def build_module(ws: Workspace, sources: Sequence[Union[str, Path]]) -> BuildResult:
    """Build ``sources`` inside the workspace.

    On failure the compiler output comes back verbatim in the result.
    """
    if not sources:
        raise ValueError("build_module needs at least one source file")
    if not ws.build_command:
        logger.error(f"No build command for profile '{ws.profile}'")
        template = ERROR_TEMPLATES["build_not_configured"]
        raise BuildConfigError(template.format(profile=ws.profile))

    with ws.build_lock:
        staged = _stage_sources(ws, sources)
        output = ws.resolve(Path("build") / EXECUTABLE_NAME)
        output.parent.mkdir(parents=True, exist_ok=True)
        if output.exists():
            output.unlink()
        command = render_command(ws.build_command, output, staged)
        logger.info(f"📦 Building {len(staged)} source(s): {' '.join(command)}")
        try:
            completed = subprocess.run(
                command,
                cwd=ws.root,
                env=build_environment(ws),
                capture_output=True,
                text=True,
                timeout=ws.build_timeout,
            )
        except subprocess.TimeoutExpired as exc:
            logger.error(f"Build timed out after {ws.build_timeout}s")
            template = ERROR_TEMPLATES["build_timeout"]
            message = template.format(timeout=ws.build_timeout)
            raise BuildTimeoutError(message) from exc
        except FileNotFoundError as exc:
            logger.error(f"Build tool not found: {exc}")
            raise BuildConfigError(f"Build tool not found: {command[0]}") from exc

    diagnostics = (completed.stdout or "") + (completed.stderr or "")
    if completed.returncode != 0 or not output.exists():
        logger.warning(f"Build failed with exit code {completed.returncode}")
        logger.debug(diagnostics)
        return BuildResult(False, None, diagnostics, command, completed.returncode)
    logger.info(f"✅ Built {output}")
    return BuildResult(True, output, diagnostics, command, completed.returncode)
