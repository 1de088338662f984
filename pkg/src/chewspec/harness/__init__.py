"""Scratch workspaces and module builds, plus the runner and the semantic check."""

from chewspec.harness.build import BuildResult, build_module
from chewspec.harness.codegen import emit_python_module
from chewspec.harness.runner import HarnessVerdict, run_module
from chewspec.harness.semantic import MismatchReport, exhaustive_packets, semantic_check
from chewspec.harness.workspace import Workspace

__all__ = [
    "BuildResult",
    "HarnessVerdict",
    "MismatchReport",
    "Workspace",
    "build_module",
    "emit_python_module",
    "exhaustive_packets",
    "run_module",
    "semantic_check",
]
