"""
Build step of the ``python`` profile::

    python -m chewspec.harness.pylaunch OUTPUT MAIN [EXTRA...]

Byte-compiles every source (syntax errors go to stderr, exit 1) and writes
an executable launcher at OUTPUT that runs MAIN with this interpreter.
"""

import py_compile
import shlex
import stat
import sys
from pathlib import Path
from typing import List, Optional

USAGE = "usage: python -m chewspec.harness.pylaunch OUTPUT MAIN [EXTRA...]"


def write_launcher(output: Path, main: Path, python: str = sys.executable) -> Path:
    script = shlex.quote(str(main.resolve()))
    output.write_text(
        f'#!/bin/sh\nexec {shlex.quote(python)} {script} "$@"\n', encoding="utf-8"
    )
    output.chmod(output.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return output


def main(argv: Optional[List[str]] = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) < 2:
        print(USAGE, file=sys.stderr)
        return 2
    output, sources = Path(args[0]), [Path(a) for a in args[1:]]
    failed = False
    for source in sources:
        try:
            py_compile.compile(str(source), doraise=True)
        except py_compile.PyCompileError as exc:
            print(exc.msg, file=sys.stderr)
            failed = True
    if failed:
        return 1
    write_launcher(output, sources[0])
    return 0


if __name__ == "__main__":
    sys.exit(main())
