# src/task_manager/task_executor.py
"""
Executes the command-line tasks: synth, train, eval, bench, export, ablate.

Inputs:
- The process-wide settings from config.yaml
- Per-command arguments (config files, feature files, output paths)

Outputs:
- The command's artifacts plus a RunManifest JSON written next to them.

Errors from the underlying packages propagate unchanged; the CLI maps them
onto exit codes.
"""

import csv
import dataclasses
import logging
import os

from src.curriculum.benchmark import BENCH_COLUMNS, bench_sampling
from src.dataset.feature_io import manifest_path_for, read_features, write_features
from src.dataset.splits import split_by_state
from src.dataset.synthetic import SynthConfig, generate
from src.encoder.params import load_checkpoint
from src.evaluator.export import export_embeddings
from src.evaluator.tasks import TaskReport, run_eight_tasks
from src.trainer.ablation import ARCHITECTURE_ARMS, SCHEDULE_ARMS, run_ablation
from src.trainer.training_loop import FINAL_CHECKPOINT, METRICS_FILE, TrainConfig, run_training
from src.utils.config_loader import build_config, config_to_dict, load_config, resolve_seed
from src.utils.run_manifest import RunManifest

logger = logging.getLogger(__name__)

RUN_MANIFEST_FILE = 'run_manifest.json'
ABLATION_ARMS = {'schedule': SCHEDULE_ARMS, 'architecture': ARCHITECTURE_ARMS}


def run_manifest_path_for(path):
    return f"{path}.run.json"


class TaskExecutor:
    def __init__(self, settings=None):
        self.settings = settings or {}
        self.evaluation = self.settings.get('evaluation', {})
        self.bench_defaults = self.settings.get('bench', {})
        logging.info("Task Executor initialized.")

    def load_synth_config(self, config_path, seed=None):
        config = build_config(SynthConfig, load_config(config_path))
        return dataclasses.replace(config, seed=resolve_seed(config.seed, seed))

    def load_train_config(self, config_path, seed=None):
        config = build_config(TrainConfig, load_config(config_path))
        resolved = resolve_seed(config.seed, seed)
        if resolved != config.seed:
            encoder = dataclasses.replace(config.encoder, seed=resolved)
            config = dataclasses.replace(config, seed=resolved, encoder=encoder)
        return config

    def synth(self, config_path, out_path, seed=None):
        """Generates a synthetic dataset, splits it by state and writes the feature file."""
        config = self.load_synth_config(config_path, seed)
        manifest = RunManifest('synth', config_to_dict(config), seed=config.seed)
        manifest.add_input('config', config_path)

        dataset = generate(config)
        manifest.mark('generate')
        dataset = split_by_state(dataset, config.test_ratio, seed=config.seed)
        write_features(out_path, dataset)
        manifest.mark('write')

        manifest.add_output('features', out_path)
        manifest.add_output('feature_manifest', manifest_path_for(out_path))
        manifest.write(run_manifest_path_for(out_path))
        logger.info(f"Synthetic dataset: {dataset.summary()}")
        return dataset

    def train(self, config_path, features_path, out_dir, resume=None, seed=None):
        config = self.load_train_config(config_path, seed)
        dataset = read_features(features_path)
        manifest = RunManifest('train', config_to_dict(config), seed=config.seed)
        manifest.add_input('config', config_path)
        manifest.add_input('features', features_path)
        if resume:
            manifest.add_input('resume', resume)

        params, metrics = run_training(config, dataset, out_dir=out_dir, resume=resume)
        manifest.mark('train')
        manifest.add_output('metrics', os.path.join(out_dir, METRICS_FILE))
        manifest.add_output('checkpoint', os.path.join(out_dir, FINAL_CHECKPOINT))
        manifest.write(os.path.join(out_dir, RUN_MANIFEST_FILE))
        return params, metrics

    def evaluate(self, checkpoint_path, features_path, out_path, classifier=None, run_id=None):
        """Scores a checkpoint on the eight tasks; writes the report CSV and returns the TaskReport."""
        classifier = classifier or self.evaluation.get('classifier', 'nn')
        params = load_checkpoint(checkpoint_path)
        dataset = read_features(features_path, expected_dim=params.config.input_dim)
        manifest = RunManifest('eval', {'classifier': classifier, 'encoder': dataclasses.asdict(params.config)})
        manifest.add_input('checkpoint', checkpoint_path)
        manifest.add_input('features', features_path)

        report = run_eight_tasks(params, dataset, classifier=classifier)
        manifest.mark('evaluate')
        run_id = run_id or os.path.splitext(os.path.basename(checkpoint_path))[0]
        _write_text(out_path, report.to_csv(run_id))
        manifest.add_output('report', out_path)
        manifest.write(run_manifest_path_for(out_path))
        return report

    def bench(self, out_path, objects_per_category=None, n_categories=None, dim=None, repeats=None, seed=0):
        grid = objects_per_category or self.bench_defaults.get('objects_per_category', [100, 400, 1600])
        n_categories = n_categories or self.bench_defaults.get('categories', 4)
        dim = dim or self.bench_defaults.get('dim', 64)
        repeats = repeats or self.bench_defaults.get('repeats', 3)
        config = {'objects_per_category': list(grid), 'categories': n_categories, 'dim': dim,
                  'repeats': repeats, 'seed': seed}
        manifest = RunManifest('bench', config, seed=seed)

        rows = bench_sampling(grid, n_categories=n_categories, dim=dim, seed=seed, repeats=repeats)
        manifest.mark('bench')
        _ensure_parent(out_path)
        with open(out_path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(BENCH_COLUMNS)
            for per_category, strategy, ns in rows:
                writer.writerow([per_category, strategy, format(ns, '.1f')])
        manifest.add_output('bench', out_path)
        manifest.write(run_manifest_path_for(out_path))
        return rows

    def export(self, checkpoint_path, features_path, out_path):
        params = load_checkpoint(checkpoint_path)
        dataset = read_features(features_path, expected_dim=params.config.input_dim)
        manifest = RunManifest('export', {'encoder': dataclasses.asdict(params.config)})
        manifest.add_input('checkpoint', checkpoint_path)
        manifest.add_input('features', features_path)
        n_rows = export_embeddings(params, dataset, out_path)
        manifest.add_output('embeddings', out_path)
        manifest.write(run_manifest_path_for(out_path))
        return n_rows

    def ablate(self, config_path, features_path, out_dir, axis='schedule', classifier=None, seed=None):
        """Trains every arm of one ablation axis and writes ablation.csv (one report row per arm)."""
        if axis not in ABLATION_ARMS:
            raise ValueError(f"Unknown ablation axis '{axis}', expected one of {sorted(ABLATION_ARMS)}")
        classifier = classifier or self.evaluation.get('classifier', 'nn')
        config = self.load_train_config(config_path, seed)
        dataset = read_features(features_path)
        manifest = RunManifest('ablate', {'axis': axis, 'classifier': classifier,
                                          'train': config_to_dict(config)}, seed=config.seed)
        manifest.add_input('config', config_path)
        manifest.add_input('features', features_path)

        results = run_ablation(config, dataset, ABLATION_ARMS[axis], out_dir=out_dir, classifier=classifier)
        manifest.mark('ablate')
        out_path = os.path.join(out_dir, 'ablation.csv')
        _ensure_parent(out_path)
        with open(out_path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(TaskReport.csv_header())
            for result in results:
                writer.writerow(result.report.csv_row(result.name))
        manifest.add_output('ablation', out_path)
        manifest.write(os.path.join(out_dir, RUN_MANIFEST_FILE))
        return results


def _ensure_parent(path):
    parent = os.path.dirname(str(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def _write_text(path, text):
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
