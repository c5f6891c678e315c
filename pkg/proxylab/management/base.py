"""
proxylab/management/base.py
─────────────────────────────────────────────────────────────────────
Shared plumbing for every proxylab management command.

A subclass declares which of the common flags it takes and implements
``run(options)`` returning ``(result, stem)``. This base class then:

  * resolves the output directory (``--out`` or settings.PROXYLAB["OUTPUT_DIR"]),
  * replays a recorded run when ``--from-manifest`` is given,
  * writes the report and ``manifest.json``,
  * turns ProxyLabError into CommandError(returncode=2).

Usage problems (missing flag, file that does not exist) are raised as
CommandError with returncode=1.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ..exceptions import ProxyLabError
from ..services.dgp_service import DgpConfig, load_dgp_config, simulate
from ..services.ingestion_service import read_pair_csv, read_sample_csv
from ..services.report_service import FORMATS, emit_report, read_manifest, write_manifest

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR  = 2

# Options that never go into a manifest: Django's own flags and anything
# that only decides where or how the run happens.
_DJANGO_OPTIONS = {
    "help", "version", "verbosity", "settings", "pythonpath",
    "traceback", "no_color", "force_color", "skip_checks",
}
_UNRECORDED = _DJANGO_OPTIONS | {"out", "from_manifest", "queue"}

DEFAULT_SAMPLE_SIZE = 1000


class LabCommand(BaseCommand):
    #: name written into the manifest and checked on replay
    command_name = ""
    default_stem = "report"

    takes_config = False
    takes_input  = False
    takes_seed   = False
    takes_n      = False
    takes_plot   = False

    # ── argparse ────────────────────────────────────────────────────
    def add_arguments(self, parser):
        if self.takes_config:
            parser.add_argument("--config", help="DGP parameter file (key = value lines)")
        if self.takes_input:
            parser.add_argument("--input", help="input CSV file")
        if self.takes_seed:
            parser.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
        if self.takes_n:
            parser.add_argument("--n", type=int, default=DEFAULT_SAMPLE_SIZE,
                                help=f"sample size per draw (default {DEFAULT_SAMPLE_SIZE})")
        if self.takes_plot:
            parser.add_argument("--plot", action="store_true", help="also write SVG charts")
        parser.add_argument("--format", choices=FORMATS, default="json", help="report format (default json)")
        parser.add_argument("--out", help="output directory (default settings.PROXYLAB['OUTPUT_DIR'])")
        parser.add_argument("--from-manifest", dest="from_manifest",
                            help="re-run the invocation recorded in a manifest.json")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        self._recorded = tuple(sorted(
            action.dest for action in parser._actions if action.dest not in _UNRECORDED
        ))
        return parser

    # ── subclass hook ───────────────────────────────────────────────
    def run(self, options: Dict[str, Any]) -> Tuple[Any, str]:
        raise NotImplementedError

    # ── main flow ───────────────────────────────────────────────────
    def handle(self, *args, **options):
        if options.get("from_manifest"):
            options = self._replay(options)

        out_dir = Path(options.get("out") or settings.PROXYLAB["OUTPUT_DIR"])
        try:
            result, stem = self.run(options)
            if result is None:
                return
            outputs = emit_report(result, fmt=options["format"], out_dir=out_dir, stem=stem,
                                  plot=bool(options.get("plot")))
            manifest = write_manifest(
                out_dir,
                command=self.command_name,
                args=self.recorded_args(options),
                outputs=outputs,
                seed=options.get("seed"),
                input_path=options.get("input"),
                config_path=options.get("config"),
            )
        except ProxyLabError as exc:
            logger.warning("%s failed: %s", self.command_name, exc)
            raise CommandError(str(exc), returncode=DATA_ERROR) from exc

        for path in outputs:
            self.stdout.write(f"  {path}")
        self.stdout.write(self.style.SUCCESS(f"{self.command_name}: {len(outputs)} file(s) + {manifest.name} in {out_dir}"))

    def recorded_args(self, options: Dict[str, Any]) -> Dict[str, Any]:
        return {key: options.get(key) for key in self._recorded}

    def _replay(self, options: Dict[str, Any]) -> Dict[str, Any]:
        try:
            manifest = read_manifest(options["from_manifest"])
        except ProxyLabError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR) from exc
        if manifest["command"] != self.command_name:
            raise CommandError(
                f"manifest records '{manifest['command']}', not '{self.command_name}'", returncode=USAGE_ERROR,
            )
        unknown = set(manifest["args"]) - set(self._recorded)
        if unknown:
            raise CommandError(f"manifest has unknown argument(s) {sorted(unknown)}", returncode=USAGE_ERROR)
        replayed = dict(options)
        replayed.update(manifest["args"])
        logger.info("replaying %s from %s", self.command_name, options["from_manifest"])
        return replayed

    # ── helpers for subclasses ──────────────────────────────────────
    @staticmethod
    def require_file(options: Dict[str, Any], key: str) -> Path:
        raw = options.get(key)
        if not raw:
            raise CommandError(f"--{key} is required", returncode=USAGE_ERROR)
        path = Path(raw)
        if not path.is_file():
            raise CommandError(f"--{key}: file not found: {path}", returncode=USAGE_ERROR)
        return path

    def load_config(self, options: Dict[str, Any], required: bool = True) -> Optional[DgpConfig]:
        if not options.get("config"):
            if required:
                raise CommandError("--config is required", returncode=USAGE_ERROR)
            return None
        return load_dgp_config(self.require_file(options, "config"))

    def load_pair(self, options: Dict[str, Any]):
        return read_pair_csv(self.require_file(options, "input"))

    def load_sample(self, options: Dict[str, Any], config: DgpConfig):
        """``--input`` sample CSV when given, otherwise a fresh draw from the DGP."""
        if options.get("input"):
            return read_sample_csv(self.require_file(options, "input"), seed=options.get("seed"))
        return simulate(config, options["n"], options["seed"])

    @staticmethod
    def parse_list(raw: Optional[str]) -> List[str]:
        return [token.strip() for token in str(raw or "").split(",") if token.strip()]
