"""
Validate Command
Simulation study of the estimator at known parameter values
"""
import logging

from estimnet.commands import add_common_arguments, output_dir
from estimnet.config import ExitCode, OutputFile
from estimnet.io_formats import study_frame, write_study_report
from estimnet.schemas.config_file import StudyConfigFile
from estimnet.services.experiment_harness import run_study

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="run a simulation study: bias, RMSE, coverage, error rates")
    parser.add_argument("config", help="study config file")
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = StudyConfigFile.load(args.config)
    seed = args.seed if args.seed is not None else config.seed
    n_runs = args.runs if args.runs is not None else config.num_runs
    out = output_dir(args.out_dir, config)

    model, theta = config.true_theta()
    result = run_study(
        theta, model,
        n_networks=config.num_networks,
        n_runs=n_runs,
        spec=config.sim_spec(model, theta, seed),
        cfg=config.ee_config(),
        zero_effect=config.zero_effect_label(model),
        seed=seed,
        workers=args.workers,
    )
    path = write_study_report(result, out / OutputFile.STUDY_REPORT)
    logger.info(f"Study: {result.n_converged} of {result.n_networks} networks converged\n"
                f"{study_frame(result).to_string(index=False)}")
    logger.info(f"Wrote {path}")
    return ExitCode.OK
