"""
Diagnostics Command
Descriptive statistics and degree distributions of a network file
"""
from pathlib import Path
import logging

from estimnet.config import ExitCode, OutputFile
from estimnet.io_formats import read_arclist, write_degree_distribution, write_records
from estimnet.services.simulator import diagnostics_summary

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("diagnostics", help="summarise a network in arc list format")
    parser.add_argument("arclist", help="network file (*vertices / *arcs)")
    parser.add_argument("--out-dir", dest="out_dir", default=".", help="directory for output files")
    parser.set_defaults(handler=run)


def run(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = diagnostics_summary(read_arclist(args.arclist))
    write_records([summary.to_record()], out / OutputFile.DIAGNOSTICS)
    write_degree_distribution(summary.in_degree_histogram, summary.out_degree_histogram,
                              out / OutputFile.DEGREE_DISTRIBUTION)
    logger.info(f"Diagnostics for {args.arclist}: {summary.to_record()}")
    return ExitCode.OK
