"""
Estimate Command
Estimate an ERGM on an observed network
"""
import logging

from estimnet.commands import add_common_arguments, load_attribute_files, output_dir
from estimnet.config import ExitCode
from estimnet.io_formats import emit_results, read_arclist
from estimnet.schemas.config_file import EstimationConfigFile
from estimnet.services.estimation_service import estimation_service

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("estimate", help="estimate model parameters on an observed network")
    parser.add_argument("config", help="estimation config file")
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = EstimationConfigFile.load(args.config)
    seed = args.seed if args.seed is not None else config.seed
    n_runs = args.runs if args.runs is not None else config.num_runs
    out = output_dir(args.out_dir, config)

    g = read_arclist(config.resolve(config.arclist_file))
    attrs = load_attribute_files(config, g.n)
    model = config.model_spec()
    result = estimation_service.estimate(
        g, attrs, model, config.ee_config(),
        n_runs=n_runs, seed=seed, workers=args.workers, max_degree=config.max_degree,
    )
    emit_results(result.pooled, result.runs, out, result.traces, result.observed)

    if not result.converged:
        logger.warning(f"No converged run out of {n_runs}; see {out}")
        return ExitCode.NOT_CONVERGED
    logger.info(f"Estimation converged ({result.n_converged} of {n_runs} runs); results in {out}")
    return ExitCode.OK
