"""
Command Handlers
One module per CLI subcommand; each exposes register(subparsers) and run(args)
"""
from pathlib import Path
from typing import Optional
import logging

from estimnet.io_formats import read_attributes
from estimnet.models.attributes import AttributeKind, AttributeSet
from estimnet.schemas.config_file import ConfigFileBase

logger = logging.getLogger(__name__)


def load_attribute_files(config: ConfigFileBase, n: int) -> Optional[AttributeSet]:
    """Attribute columns from the binattrFile, catattrFile and contattrFile keys."""
    files = (
        (AttributeKind.BINARY, config.binattr_file),
        (AttributeKind.CATEGORICAL, config.catattr_file),
        (AttributeKind.CONTINUOUS, config.contattr_file),
    )
    if all(name is None for _, name in files):
        return None
    attrs = AttributeSet(n)
    for kind, name in files:
        if name is not None:
            read_attributes(config.resolve(name), kind, attrs)
    return attrs


def output_dir(requested: Optional[str], config: ConfigFileBase) -> Path:
    out = Path(requested or config.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def add_common_arguments(parser, runs: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master random seed (overrides the config file)")
    parser.add_argument("--out-dir", dest="out_dir", default=None, help="directory for output files")
    if runs:
        parser.add_argument("--runs", type=int, default=None, help="number of independent runs per estimation")
        parser.add_argument("--workers", type=int, default=None, help="worker processes (default: ESTIMNET_MAX_WORKERS)")
