"""
proxylab/cli.py
─────────────────────────────────────────────────────────────────────
`python -m proxylab <command> [flags]`: the management commands with
the documented exit codes.

    0  outputs and manifest written
    1  usage error (unknown command, bad or missing flag, missing file)
    2  data or numerical error (message carries the row / parameter)

Every failure prints a single line on stderr.
"""
from __future__ import annotations

import os
import sys
from typing import List, Optional, Sequence

COMMANDS = ("simulate", "estimate", "mc", "sweep", "adf", "johansen", "vecm", "irf", "criteria")

USAGE = (
    "usage: python -m proxylab <command> [flags]\n"
    f"commands: {', '.join(COMMANDS)}\n"
    "run `python -m proxylab <command> --help` for the flags of one command\n"
)


def _one_line(message: str) -> str:
    lines = [line.strip() for line in str(message).splitlines() if line.strip()]
    return lines[-1] if lines else "error"


def setup() -> None:
    from dotenv import load_dotenv

    load_dotenv()
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "proxylab_config.settings.development")

    import django

    django.setup()


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help", "help"):
        (sys.stdout if argv else sys.stderr).write(USAGE)
        return 0 if argv else 1

    name, rest = argv[0], argv[1:]
    if name not in COMMANDS:
        sys.stderr.write(f"proxylab: unknown command '{name}' (expected one of {', '.join(COMMANDS)})\n")
        return 1

    setup()
    from django.core.management import call_command
    from django.core.management.base import CommandError

    try:
        call_command(name, *rest)
    except CommandError as exc:
        sys.stderr.write(f"proxylab {name}: {_one_line(exc)}\n")
        return getattr(exc, "returncode", 1)
    except SystemExit as exc:
        # argparse --help
        return exc.code if isinstance(exc.code, int) else 0
    return 0
