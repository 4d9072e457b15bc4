"""
Simulate Command
Draw networks from an ERGM with given parameters
"""
import logging

from estimnet.commands import add_common_arguments, load_attribute_files, output_dir
from estimnet.config import ExitCode, OutputFile
from estimnet.io_formats import format_attributes, write_arclist, write_records
from estimnet.models.attributes import AttributeKind
from estimnet.schemas.config_file import SimulationConfigFile
from estimnet.services.simulator import simulate

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="simulate networks from given parameters")
    parser.add_argument("config", help="simulation config file")
    add_common_arguments(parser, runs=False)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = SimulationConfigFile.load(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    out = output_dir(args.out_dir, config)
    spec = config.spec()

    attrs = load_attribute_files(config, spec.n)
    generated = attrs is None
    result = simulate(spec, attrs=attrs)

    prefix = config.sim_net_file_prefix
    for index, g in enumerate(result.graphs):
        write_arclist(g, out / OutputFile.SIM_NETWORK.format(prefix=prefix, index=index))
    if generated and result.attrs is not None:
        for kind in AttributeKind:
            if result.attrs.names(kind):
                path = out / OutputFile.SIM_ATTRIBUTES.format(prefix=prefix, kind=kind.value)
                path.write_text(format_attributes(result.attrs, kind))
    stats_path = out / (config.stats_file or OutputFile.SIM_STATS)
    write_records(result.summaries, stats_path)
    logger.info(f"Wrote {len(result.graphs)} network(s) and {stats_path} to {out}")
    return ExitCode.OK
