import csv
import json

import numpy as np
import pytest

from src.dataset import Dataset, write_features
from src.task_manager.task_executor import TaskExecutor
from src.ui.cli_interface import (EXIT_CONFIG, EXIT_FAILURE, EXIT_IO, EXIT_NON_FINITE, EXIT_OK,
                                  CommandLineInterface, exit_code_for)
from src.utils.errors import (CheckpointError, ConfigError, DatasetError, DimensionMismatchError, EvaluationError,
                              NonFiniteLossError, TruncatedFileError)
from src.utils.run_manifest import file_digest

SYNTH = {'n_categories': 2, 'objects_per_category': 4, 'states_per_object': 3, 'views_per_state': 2,
         'feature_dim': 8, 'test_ratio': 0.25, 'seed': 0}
TRAIN = {'epochs': 2, 'pairs_per_minibatch': 4, 'learning_rate': 0.001, 'lr_halving_period': 2,
         'checkpoint_period': 2, 'seed': 0,
         'curriculum': {'views': 2, 'top_k': 2},
         'encoder': {'embed_dim': 8, 'n_attention_layers': 1, 'n_heads': 1}}


def _write_json(path, payload):
    path.write_text(json.dumps(payload), encoding='utf-8')
    return str(path)


@pytest.fixture
def cli():
    return CommandLineInterface(TaskExecutor({'bench': {'repeats': 1}}))


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv('OWSC_SEED', raising=False)


@pytest.fixture
def features(tmp_path, cli):
    out = str(tmp_path / 'toy.owsf')
    assert cli.run(['synth', '--config', _write_json(tmp_path / 'synth.json', SYNTH), '--out', out]) == EXIT_OK
    return out


@pytest.fixture
def trained(tmp_path, cli, features):
    out_dir = tmp_path / 'run'
    config = _write_json(tmp_path / 'train.json', TRAIN)
    assert cli.run(['train', '--config', config, '--features', features, '--out-dir', str(out_dir)]) == EXIT_OK
    return out_dir


class TestSynth:
    def test_rerun_is_byte_identical(self, tmp_path, cli, features):
        again = str(tmp_path / 'again.owsf')
        assert cli.run(['synth', '--config', str(tmp_path / 'synth.json'), '--out', again]) == EXIT_OK
        assert file_digest(again) == file_digest(features)
        assert (tmp_path / 'toy.owsf.manifest.json').exists()
        manifest = json.loads((tmp_path / 'toy.owsf.run.json').read_text(encoding='utf-8'))
        assert manifest['command'] == 'synth'
        assert manifest['seed'] == 0

    def test_missing_field(self, tmp_path, cli, capsys):
        config = {k: v for k, v in SYNTH.items() if k != 'views_per_state'}
        code = cli.run(['synth', '--config', _write_json(tmp_path / 'bad.json', config),
                        '--out', str(tmp_path / 'x.owsf')])
        assert code == EXIT_CONFIG
        assert 'views_per_state' in capsys.readouterr().err

    def test_unknown_field(self, tmp_path, cli):
        config = dict(SYNTH, colour='blue')
        code = cli.run(['synth', '--config', _write_json(tmp_path / 'bad.json', config),
                        '--out', str(tmp_path / 'x.owsf')])
        assert code == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path, cli):
        code = cli.run(['synth', '--config', str(tmp_path / 'nope.json'), '--out', str(tmp_path / 'x.owsf')])
        assert code == EXIT_IO


class TestTrainAndEvaluate:
    def test_train_writes_run_artifacts(self, trained):
        manifest = json.loads((trained / 'run_manifest.json').read_text(encoding='utf-8'))
        assert manifest['config']['margins'] == {'alpha': 0.25, 'beta': 1.0, 'theta': 0.25, 'gamma': 4.0}
        assert len(manifest['config_hash']) == 64
        assert set(manifest['input_digests']) == {'config', 'features'}
        with open(trained / 'metrics.csv', newline='', encoding='utf-8') as f:
            assert len(list(csv.reader(f))) == 3
        assert (trained / 'checkpoint_final.owsp').exists()

    def test_eval_reports_eight_scores(self, tmp_path, cli, features, trained, capsys):
        out = tmp_path / 'report.csv'
        code = cli.run(['eval', '--checkpoint', str(trained / 'checkpoint_final.owsp'), '--features', features,
                        '--out', str(out), '--run-id', 'toy'])
        assert code == EXIT_OK
        with open(out, newline='', encoding='utf-8') as f:
            header, row = list(csv.reader(f))
        assert row[0] == 'toy'
        scores = [float(v) for v in row[1:9]]
        assert len(scores) == 8
        assert all(0.0 <= s <= 100.0 for s in scores)
        assert 'mAP' in capsys.readouterr().out

    def test_eval_dimension_mismatch(self, tmp_path, cli, trained):
        wide = str(tmp_path / 'wide.owsf')
        cli.run(['synth', '--config', _write_json(tmp_path / 'wide.json', dict(SYNTH, feature_dim=16)),
                 '--out', wide])
        code = cli.run(['eval', '--checkpoint', str(trained / 'checkpoint_final.owsp'), '--features', wide,
                        '--out', str(tmp_path / 'r.csv')])
        assert code == EXIT_CONFIG

    def test_object_under_two_categories(self, tmp_path, cli, capsys):
        bad = tmp_path / 'bad.owsf'
        write_features(bad, Dataset(object_ids=[0, 0, 1, 1], category_ids=[0, 1, 1, 1], state_ids=[0, 1, 0, 1],
                                    splits=[0, 1, 0, 1], features=np.zeros((4, 8))))
        code = cli.run(['train', '--config', _write_json(tmp_path / 'train.json', TRAIN),
                        '--features', str(bad), '--out-dir', str(tmp_path / 'run')])
        assert code == EXIT_CONFIG
        assert 'categories' in capsys.readouterr().err

    def test_missing_features(self, tmp_path, cli):
        code = cli.run(['train', '--config', _write_json(tmp_path / 'train.json', TRAIN),
                        '--features', str(tmp_path / 'missing.owsf'), '--out-dir', str(tmp_path / 'run')])
        assert code == EXIT_IO

    def test_export(self, tmp_path, cli, features, trained):
        out = tmp_path / 'emb.csv'
        code = cli.run(['export', '--checkpoint', str(trained / 'checkpoint_final.owsp'), '--features', features,
                        '--out', str(out)])
        assert code == EXIT_OK
        with open(out, newline='', encoding='utf-8') as f:
            # header + obj and cat rows for 2 x 4 objects x 3 states x 2 views
            assert len(list(csv.reader(f))) == 1 + 2 * 48


class TestBench:
    def test_rows_per_grid_point(self, tmp_path, cli):
        out = tmp_path / 'bench.csv'
        code = cli.run(['bench', '--objects-per-category', '10,20', '--categories', '2', '--dim', '4',
                        '--out', str(out)])
        assert code == EXIT_OK
        with open(out, newline='', encoding='utf-8') as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['n_obj_per_cat', 'strategy', 'ns_per_object']
        assert len(rows) == 1 + 2 * 3

    def test_bad_grid(self, tmp_path, cli):
        with pytest.raises(SystemExit):
            cli.run(['bench', '--objects-per-category', '10,x', '--out', str(tmp_path / 'b.csv')])


class TestSeed:
    def test_env_overrides_file_and_flag_overrides_env(self, tmp_path, monkeypatch):
        executor = TaskExecutor()
        path = _write_json(tmp_path / 'synth.json', SYNTH)
        assert executor.load_synth_config(path).seed == 0
        monkeypatch.setenv('OWSC_SEED', '7')
        assert executor.load_synth_config(path).seed == 7
        assert executor.load_synth_config(path, seed=9).seed == 9

    def test_train_seed_reaches_encoder(self, tmp_path, monkeypatch):
        monkeypatch.setenv('OWSC_SEED', '5')
        config = TaskExecutor().load_train_config(_write_json(tmp_path / 'train.json', TRAIN))
        assert config.seed == 5
        assert config.encoder.seed == 5

    def test_bad_env_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv('OWSC_SEED', 'seven')
        with pytest.raises(ConfigError):
            TaskExecutor().load_synth_config(_write_json(tmp_path / 'synth.json', SYNTH))


@pytest.mark.parametrize('error, code', [
    (ConfigError('x'), EXIT_CONFIG),
    (DimensionMismatchError('x'), EXIT_CONFIG),
    (DatasetError('x'), EXIT_CONFIG),
    (NonFiniteLossError('x'), EXIT_NON_FINITE),
    (TruncatedFileError('x'), EXIT_IO),
    (CheckpointError('x'), EXIT_IO),
    (FileNotFoundError('x'), EXIT_IO),
    (EvaluationError('x'), EXIT_FAILURE),
    (ValueError('x'), EXIT_FAILURE),
])
def test_exit_codes(error, code):
    assert exit_code_for(error) == code
