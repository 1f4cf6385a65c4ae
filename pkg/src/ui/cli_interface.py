# src/ui/cli_interface.py
"""
Command Line Interface (CLI) for the training and evaluation pipeline.

Parses the subcommand, hands it to the TaskExecutor and maps errors onto
process exit codes:

    0  success
    2  configuration error, feature-dimension mismatch or invalid dataset labels
    3  I/O error or unreadable feature file / checkpoint
    4  non-finite loss during training
    1  any other failure
"""

import argparse
import logging
import sys

from src.utils.errors import (CheckpointError, ConfigError, DatasetError, DimensionMismatchError,
                              FeatureFileError, NonFiniteLossError, StatewiseError)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NON_FINITE = 4


def exit_code_for(error):
    if isinstance(error, (DimensionMismatchError, ConfigError, DatasetError)):
        return EXIT_CONFIG
    if isinstance(error, NonFiniteLossError):
        return EXIT_NON_FINITE
    if isinstance(error, (OSError, FeatureFileError, CheckpointError)):
        return EXIT_IO
    return EXIT_FAILURE


def _int_list(text):
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got '{text}'") from e


class CommandLineInterface:
    def __init__(self, task_executor):
        self.executor = task_executor
        self.parser = self.build_parser()
        logging.info("Command Line Interface initialized.")

    @staticmethod
    def build_parser():
        parser = argparse.ArgumentParser(prog='statewise',
                                         description='State-invariant dual-embedding training and evaluation')
        sub = parser.add_subparsers(dest='command', required=True)

        synth = sub.add_parser('synth', help='generate a synthetic feature file')
        synth.add_argument('--config', required=True)
        synth.add_argument('--out', required=True)
        synth.add_argument('--seed', type=int)

        train = sub.add_parser('train', help='train the dual encoder')
        train.add_argument('--config', required=True)
        train.add_argument('--features', required=True)
        train.add_argument('--out-dir', required=True)
        train.add_argument('--resume')
        train.add_argument('--seed', type=int)

        evaluate = sub.add_parser('eval', help='score a checkpoint on the eight tasks')
        evaluate.add_argument('--checkpoint', required=True)
        evaluate.add_argument('--features', required=True)
        evaluate.add_argument('--out', required=True)
        evaluate.add_argument('--classifier', choices=['nn', 'centroid'])
        evaluate.add_argument('--run-id')

        bench = sub.add_parser('bench', help='time the pair-sampling strategies')
        bench.add_argument('--objects-per-category', type=_int_list)
        bench.add_argument('--categories', type=int)
        bench.add_argument('--dim', type=int)
        bench.add_argument('--repeats', type=int)
        bench.add_argument('--seed', type=int, default=0)
        bench.add_argument('--out', required=True)

        export = sub.add_parser('export', help='export per-image embeddings as CSV')
        export.add_argument('--checkpoint', required=True)
        export.add_argument('--features', required=True)
        export.add_argument('--out', required=True)

        ablate = sub.add_parser('ablate', help='train and score every arm of an ablation')
        ablate.add_argument('--config', required=True)
        ablate.add_argument('--features', required=True)
        ablate.add_argument('--out-dir', required=True)
        ablate.add_argument('--axis', choices=['schedule', 'architecture'], default='schedule')
        ablate.add_argument('--classifier', choices=['nn', 'centroid'])
        ablate.add_argument('--seed', type=int)
        return parser

    def dispatch(self, args):
        if args.command == 'synth':
            dataset = self.executor.synth(args.config, args.out, seed=args.seed)
            print(f"Wrote {args.out}: {dataset.summary()}")
        elif args.command == 'train':
            _, metrics = self.executor.train(args.config, args.features, args.out_dir,
                                             resume=args.resume, seed=args.seed)
            last = metrics[-1]
            print(f"Trained {last.epoch} epochs; final l_joint={last.l_joint:.6f} tau_info={last.tau_info:.3f}")
        elif args.command == 'eval':
            report = self.executor.evaluate(args.checkpoint, args.features, args.out,
                                            classifier=args.classifier, run_id=args.run_id)
            print(report.to_table())
        elif args.command == 'bench':
            rows = self.executor.bench(args.out, objects_per_category=args.objects_per_category,
                                       n_categories=args.categories, dim=args.dim, repeats=args.repeats,
                                       seed=args.seed)
            for per_category, strategy, ns in rows:
                print(f"{per_category:>8} {strategy:>4} {ns:>14.1f} ns/object")
        elif args.command == 'export':
            n_rows = self.executor.export(args.checkpoint, args.features, args.out)
            print(f"Wrote {n_rows} rows to {args.out}")
        elif args.command == 'ablate':
            results = self.executor.ablate(args.config, args.features, args.out_dir, axis=args.axis,
                                           classifier=args.classifier, seed=args.seed)
            for result in results:
                print(f"[{result.name}]\n{result.report.to_table()}")

    def run(self, argv=None):
        """Parses `argv`, executes the command and returns the process exit code."""
        args = self.parser.parse_args(argv)
        logging.info(f"Running command '{args.command}'")
        try:
            self.dispatch(args)
        except (StatewiseError, OSError, ValueError) as e:
            code = exit_code_for(e)
            logging.error(f"Command '{args.command}' failed with exit code {code}: {e}", exc_info=True)
            print(f"Error: {e}", file=sys.stderr)
            return code
        return EXIT_OK
