#!/usr/bin/env python3
"""
    Main HOLOGRAPH script
"""
import argparse
import contextlib
import dataclasses
import logging
import sys
from pathlib import Path

from holograph import io, sheaf
from holograph.bench import experiment
from holograph.bench import report as reporting
from holograph.optimizer import OptimizerConfig
from holograph.query.session import OracleConfig, OracleKind

try:
    from tqdm import tqdm

    _enable_fancy_progress = True
except ImportError:
    _enable_fancy_progress = False

from holograph_cli.configuration import environment

logger = logging.getLogger(__name__)


@contextlib.contextmanager
def _progress(total, desc):
    """Yields a callback to be called once per finished unit of work"""
    if _enable_fancy_progress:
        with tqdm(total=total, desc=desc, unit="run") as pbar:
            yield pbar.update
        return

    done = [0]

    def _update():
        done[0] += 1
        logger.info("%s: %d/%d", desc, done[0], total)

    yield _update


def _int_list(text):
    """Comma-separated integers"""
    return [int(item) for item in text.split(",") if item.strip()]


class ArgumentParser(argparse.ArgumentParser):
    """Overrides the error message for the argument parser to ensure the help is printed"""

    def error(self, message):
        self.print_help(sys.stderr)
        super().error(message)


class Runner:
    """Controls the running of the script
    It can be used programatically by using the flag ``interactive=True``

    After a run, ``exit_code`` is 0 only if every seed completed.
    """

    def __init__(self, interactive=False):
        # Accepted modes
        modes = [i.replace("_", "-") for i in dir(self) if not i.startswith("_")]

        self._interactive = interactive
        self.exit_code = 0

        if interactive:
            # In interactive mode no global option is parsed
            # (if the environment needs to be changed it should be done manually)
            self._parser = ArgumentParser(add_help=False)
            return

        # no abbreviations, or --output would swallow the --out of the modes
        main_parser = ArgumentParser(description=__doc__, add_help=False, allow_abbrev=False)
        main_parser.add_argument("--output", type=Path, help="Default directory for results")
        main_parser.add_argument("--verbose", action="store_true", help="Increase verbosity level")

        self._parser = ArgumentParser(parents=[main_parser])
        main_parser.add_argument("mode", help=f"One of {modes}", type=str)

        main_args, remaining_args = main_parser.parse_known_args()

        if main_args.output:
            environment.output = main_args.output
        if main_args.verbose:
            environment.debug_logger()

        prog_mode = main_args.mode
        self._parser.prog += f" {prog_mode}"

        mode = getattr(self, prog_mode.replace("-", "_"), None)
        if prog_mode.startswith("_") or not callable(mode):
            main_parser.error(f"Unknown mode '{prog_mode}' ({' '.join(remaining_args)})")
        mode(*remaining_args)

    def _finish(self, record, out_dir):
        if record.failed:
            self.exit_code = 1
            logger.error("Some seeds failed, see %s", out_dir / "record.json")
        if self._interactive:
            return record
        print(io.dumps(record.aggregate), end="")

    def run(self, *extra_args):
        """Run an experiment described by a JSON or YAML configuration file"""
        run_args = self._parser.add_argument_group("run arguments")
        run_args.add_argument("--config", type=Path, required=True, help="Experiment configuration")
        run_args.add_argument("--out", type=Path, help="Output directory")
        args = self._parser.parse_args(extra_args)

        fields = [f.name for f in dataclasses.fields(experiment.ExperimentConfig)]
        config = experiment.ExperimentConfig.from_dict(io.load_config(args.config, fields))
        if config.oracle.kind is OracleKind.LLM:
            config = dataclasses.replace(
                config,
                oracle=dataclasses.replace(
                    config.oracle, endpoint=environment.endpoint(config.oracle.endpoint)
                ),
            )
        out_dir = args.out or environment.output / f"{config.name}-{config.ablation.value}"
        with _progress(len(config.seeds), config.name) as update:
            record = experiment.run_experiment(config, out_dir, on_done=update)
        return self._finish(record, out_dir)

    def bench(self, *extra_args):
        """Run a benchmark preset under one ablation"""
        bench_args = self._parser.add_argument_group("bench arguments")
        bench_args.add_argument(
            "--dataset", required=True, choices=sorted(experiment.PRESETS), help="Dataset preset"
        )
        bench_args.add_argument(
            "--ablation",
            default="full",
            choices=[a.value for a in experiment.Ablation],
            help="Pipeline variant",
        )
        bench_args.add_argument("--seeds", type=_int_list, help="Comma-separated seeds")
        bench_args.add_argument(
            "--oracle", default="simulated", choices=[k.value for k in OracleKind], help="Oracle"
        )
        bench_args.add_argument("--max-steps", type=int, help="Optimization steps")
        bench_args.add_argument("--sachs-path", type=Path, help="Sachs adjacency CSV")
        bench_args.add_argument("--workers", type=int, default=1, help="Seeds run in parallel")
        bench_args.add_argument("--out", type=Path, help="Output directory")
        args = self._parser.parse_args(extra_args)

        overrides = dict(ablation=experiment.Ablation(args.ablation), workers=args.workers)
        if args.seeds:
            overrides["seeds"] = tuple(args.seeds)
        if args.sachs_path is not None:
            overrides["sachs_path"] = str(args.sachs_path)
        if args.max_steps is not None:
            overrides["optimizer"] = dataclasses.replace(
                OptimizerConfig(), max_steps=args.max_steps
            )
        oracle = OracleConfig(kind=OracleKind(args.oracle))
        if oracle.kind is OracleKind.LLM:
            oracle = dataclasses.replace(oracle, endpoint=environment.endpoint())
            if not environment.has_api_key:
                logger.warning("No API key found in the environment")
        overrides["oracle"] = oracle
        config = experiment.preset(args.dataset, **overrides)

        out_dir = args.out or environment.output / f"{args.dataset}-{args.ablation}"
        with _progress(len(config.seeds), config.name) as update:
            record = experiment.run_experiment(config, out_dir, on_done=update)
        return self._finish(record, out_dir)

    def sheaf_check(self, *extra_args):
        """Check the presheaf axioms on random causal states"""
        check_args = self._parser.add_argument_group("sheaf-check arguments")
        check_args.add_argument(
            "--sizes", type=_int_list, default=[30, 50, 100], help="Comma-separated sizes"
        )
        check_args.add_argument("--seeds", type=int, default=5, help="Number of seeds")
        check_args.add_argument("--label", default="X1", help="Suite label")
        check_args.add_argument("--workers", type=int, default=1, help="Cells run in parallel")
        check_args.add_argument("--out", type=Path, help="Output directory")
        args = self._parser.parse_args(extra_args)

        with _progress(len(args.sizes) * args.seeds, "sheaf-check") as update:
            reports = sheaf.run_exactness_suite(
                args.sizes,
                list(range(args.seeds)),
                label=args.label,
                workers=args.workers,
                on_done=update,
            )
        out_dir = args.out or environment.output / "sheaf"
        reporting.write_suite(reports, out_dir)
        if self._interactive:
            return reports
        print(sheaf.summarize_suite(reports).to_string())

    def report(self, *extra_args):
        """Collect experiment records into tables and plots"""
        report_args = self._parser.add_argument_group("report arguments")
        report_args.add_argument("--in", dest="in_dir", type=Path, required=True, help="Records directory")
        report_args.add_argument("--out", type=Path, help="Output directory")
        args = self._parser.parse_args(extra_args)

        records = reporting.load_records(args.in_dir)
        if not records:
            logger.error("No record.json found below %s", args.in_dir)
            self.exit_code = 1
            return None
        written = reporting.report(records, args.out or args.in_dir / "report")
        if any(r.failed for r in records):
            self.exit_code = 1
        if self._interactive:
            return written
        for path in written:
            print(path)


def main():
    runner = Runner()
    sys.exit(runner.exit_code)


if __name__ == "__main__":
    main()
