"""
This test file is part of corpus-align.

It runs the `corpus-align` command on a small simulated collection:
simulation, training, evaluation, comparison and alignment export.

Usage:
This file is meant to be run from the root directory of corpus-align,
by any of the following commands
$ py.test tests/test_cli.py
$ py.test

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import copy
import csv
import json
import os
import shutil

import pytest

from corpus_align.cli import main
from corpus_align.study import plotter

from conftest import TINY_SIMULATION


@pytest.fixture
def simulated(tmp_path, tiny_simulation):
    out = str(tmp_path / 'data')
    assert main(['simulate', '--config', tiny_simulation, '--out', out]) == 0
    return out


def _train(manifest, out, config, regimen, *extra):
    assert main(['train', manifest, '--regimen', regimen, '--config', config,
                 '--out', out] + list(extra)) == 0


def test_simulate_writes_a_reproducible_collection(tmp_path, simulated,
                                                   tiny_simulation):
    names = sorted(os.listdir(simulated))
    assert names == ['exp_a.csv', 'exp_b.csv', 'manifest.json',
                     'oracle.json', 'ref.csv']
    manifest = json.loads(open(os.path.join(simulated, 'manifest.json')).read())
    assert [d['name'] for d in manifest['datasets']] == ['ref', 'exp_a',
                                                         'exp_b']
    again = str(tmp_path / 'again')
    assert main(['simulate', '--config', tiny_simulation, '--out', again]) == 0
    for name in names:
        with open(os.path.join(simulated, name), 'rb') as a, \
                open(os.path.join(again, name), 'rb') as b:
            assert a.read() == b.read()
    # The latents only live in the oracle file
    with open(os.path.join(simulated, 'ref.csv')) as f:
        assert 'latent' not in f.readline()


def test_simulate_refuses_to_overwrite(simulated, tiny_simulation, capsys):
    assert main(['simulate', '--config', tiny_simulation,
                 '--out', simulated]) == 1
    assert 'already exists' in capsys.readouterr().err
    assert main(['simulate', '--config', tiny_simulation, '--out', simulated,
                 '--force']) == 0


def test_simulate_reports_missing_keys(tmp_path, capsys):
    config = copy.deepcopy(TINY_SIMULATION)
    del config['experiments'][2]['severity']
    path = tmp_path / 'broken.json'
    path.write_text(json.dumps(config))
    assert main(['simulate', '--config', str(path),
                 '--out', str(tmp_path / 'out')]) == 1
    err = capsys.readouterr().err
    assert err == 'corpus-align: error: missing config key: severity\n'


def test_usage_errors(simulated, tiny_train_config):
    manifest = os.path.join(simulated, 'manifest.json')
    with pytest.raises(SystemExit) as e:
        main(['train', manifest, '--regimen', 'individual'])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(['train', manifest, '--regimen', 'all', '--dataset', 'exp_a'])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(['train', manifest, '--regimen', 'everything'])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(['simulate', '--benchmark', '--config', tiny_train_config])
    assert e.value.code == 2


def test_train_is_reproducible(tmp_path, simulated, tiny_train_config):
    manifest = os.path.join(simulated, 'manifest.json')
    runs = []
    for label in ('first', 'second'):
        out = str(tmp_path / label)
        _train(manifest, out, tiny_train_config, 'all-mdf-alignnet',
               '--seed', '5')
        runs.append(os.path.join(out, 'all-mdf-alignnet-seed5'))
    for name in ('checkpoint.json', 'train_log.jsonl', 'config.json'):
        with open(os.path.join(runs[0], name), 'rb') as a, \
                open(os.path.join(runs[1], name), 'rb') as b:
            assert a.read() == b.read()
    with open(os.path.join(runs[0], 'config.json')) as f:
        assert json.load(f)['seed'] == 5


def test_individual_run_directory(tmp_path, simulated, tiny_train_config):
    manifest = os.path.join(simulated, 'manifest.json')
    out = str(tmp_path / 'runs')
    _train(manifest, out, tiny_train_config, 'individual',
           '--dataset', 'exp_b')
    assert os.listdir(out) == ['individual-exp_b-seed0']
    # A second run into the same directory needs --force
    assert main(['train', manifest, '--regimen', 'individual', '--dataset',
                 'exp_b', '--config', tiny_train_config, '--out', out]) == 1


def test_evaluate_compare_and_export(tmp_path, simulated, tiny_train_config,
                                     capsys):
    pytest.importorskip('matplotlib')
    manifest = os.path.join(simulated, 'manifest.json')
    oracle = os.path.join(simulated, 'oracle.json')
    out = str(tmp_path / 'runs')
    _train(manifest, out, tiny_train_config, 'all')
    _train(manifest, out, tiny_train_config, 'all-mdf-alignnet')
    run_all = os.path.join(out, 'all-seed0')
    run_align = os.path.join(out, 'all-mdf-alignnet-seed0')
    for run in (run_all, run_align):
        assert main(['evaluate', os.path.join(run, 'checkpoint.json'),
                     manifest, '--oracle', oracle]) == 0
        for name in ('report.json', 'predictions.csv', 'report.txt'):
            assert os.path.isfile(os.path.join(run, name))
    with open(os.path.join(run_align, 'report.json')) as f:
        report = json.load(f)
    assert set(report['per_dataset']) == {'ref', 'exp_a', 'exp_b'}
    assert set(report['latent_lcc']) == {'ref', 'exp_a', 'exp_b'}
    capsys.readouterr()

    assert main(['compare', run_align, run_align]) == 0
    assert 'improved *' not in capsys.readouterr().out
    assert main(['compare', run_align, run_all,
                 '--out', str(tmp_path / 'comparison')]) == 0
    with open(str(tmp_path / 'comparison' / 'comparison.json')) as f:
        comparison = json.load(f)
    assert {c['dataset'] for c in comparison} == {'ref', 'exp_a', 'exp_b',
                                                 'All'}

    # Dropping a test item breaks the pairing
    broken = str(tmp_path / 'broken')
    shutil.copytree(run_all, broken)
    path = os.path.join(broken, 'predictions.csv')
    with open(path) as f:
        lines = f.readlines()
    with open(path, 'w', newline='') as f:
        f.writelines(lines[:-1])
    capsys.readouterr()
    assert main(['compare', run_align, broken]) == 1
    assert capsys.readouterr().err.startswith('corpus-align: error:')

    assert main(['export-alignments', os.path.join(run_align,
                                                   'checkpoint.json'),
                 manifest, '--oracle', oracle, '--grid-size', '25']) == 0
    for name in ('alignments.csv', 'alignments.json', 'alignments.svg'):
        assert os.path.isfile(os.path.join(run_align, name))
    with open(os.path.join(run_align, 'alignments.csv'), newline='') as f:
        rows = list(csv.DictReader(f))
    reference = [r for r in rows if r['dataset'] == 'ref']
    assert len(reference) == 25
    assert all(r['intermediate'] == r['aligned'] for r in reference)
    with open(os.path.join(run_align, 'alignments.json')) as f:
        summary = json.load(f)
    assert summary['ref']['is_reference']
    assert 'max_deviation' in summary['exp_a']

    assert main(['export-alignments', os.path.join(run_all, 'checkpoint.json'),
                 manifest]) == 1


def test_simulate_benchmark(tmp_path, capsys):
    out = str(tmp_path / 'benchmark')
    assert main(['simulate', '--benchmark', '--seed', '2', '--out', out]) == 0
    assert sorted(os.listdir(out)) == ['exp_a.csv', 'exp_b.csv', 'exp_c.csv',
                                       'manifest.json', 'oracle.json',
                                       'ref.csv']
    with open(os.path.join(out, 'manifest.json')) as f:
        manifest = json.load(f)
    assert manifest['seed'] == 2 and manifest['feature_dim'] == 16
    assert 'Simulated 4 datasets' in capsys.readouterr().out
    # One of --benchmark and --config is required
    with pytest.raises(SystemExit) as e:
        main(['simulate', '--out', str(tmp_path / 'nothing')])
    assert e.value.code == 2


def test_export_without_matplotlib(tmp_path, simulated, tiny_train_config,
                                   monkeypatch, capsys):
    manifest = os.path.join(simulated, 'manifest.json')
    out = str(tmp_path / 'runs')
    _train(manifest, out, tiny_train_config, 'all-mdf-alignnet')
    run = os.path.join(out, 'all-mdf-alignnet-seed0')
    monkeypatch.setattr(plotter, 'matplotlib_installed', False)
    capsys.readouterr()
    assert main(['export-alignments', os.path.join(run, 'checkpoint.json'),
                 manifest]) == 1
    err = capsys.readouterr().err
    assert err.startswith('corpus-align: error: Failed to import')
    assert 'matplotlib' in err
    assert not os.path.exists(os.path.join(run, 'alignments.csv'))
