import argparse
import logging
import sys

from back_end.simulation_workflow.simulation_workflow import COMMANDS, SimulationWorkflow

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_NOT_CONVERGED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irs-vlc",
        description="IRS-aided MIMO VLC transceiver and association optimization",
    )
    parser.add_argument("command", choices=COMMANDS, help="Experiment to run")
    parser.add_argument("config", help="Experiment config (TOML or JSON)")
    parser.add_argument("--out", default="results", help="Output directory for CSV files")
    parser.add_argument("--seed", type=int, default=None, help="Override experiment.seed")
    parser.add_argument("--strict", action="store_true", help="Exit with code 3 if any solver did not converge")
    parser.add_argument("--threads", type=int, default=1, help="Worker processes for schemes and sweep points")
    parser.add_argument("--dump-matrices", action="store_true", help="Also write channel and design matrices")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def main(argv: list = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    # Run the simulation workflow
    simulation_workflow = SimulationWorkflow()
    input_fields = {
        "command": args.command,
        "config_path": args.config,
        "out_dir": args.out,
        "seed": args.seed,
        "threads": args.threads,
        "dump_matrices": args.dump_matrices,
    }
    simulation_workflow.load_input_data(input_fields)
    simulation_workflow.process_main_steps()

    # Show final result of main process
    if simulation_workflow.status != "Success":
        logging.error(simulation_workflow.error_message)
        simulation_workflow.reset_resources()
        return EXIT_FAILED
    for name, path in simulation_workflow.query_dict.get("output_files", {}).items():
        logging.info(f"{name}: {path}")

    # Show final result of optional process
    simulation_workflow.process_optional_steps()
    if simulation_workflow.status_of_optional_steps == "Failed":
        logging.error(simulation_workflow.error_message)
        simulation_workflow.reset_resources()
        return EXIT_FAILED

    converged = simulation_workflow.converged
    simulation_workflow.reset_resources()
    if args.strict and not converged:
        logging.warning("At least one solver run hit its iteration limit")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
