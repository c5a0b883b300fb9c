"""
This test file is part of corpus-align.

It checks the files of a collection (dataset CSVs and manifest), the
written reports and predictions, and the results tables.

Usage:
This file is meant to be run from the root directory of corpus-align,
by any of the following commands
$ py.test tests/test_data_reader.py
$ py.test

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import json

import numpy as np
import pytest

from corpus_align import AlignNetStudy
from corpus_align.study.corpus_sim import build_collection, specs_from_config
from corpus_align.study.data_reader import DataReader
from corpus_align.study.data_reader.csv_reader import (
    read_dataset_csv, write_dataset_csv, read_manifest, write_manifest)
from corpus_align.study.errors import ConfigurationError, ShapeError
from corpus_align.study.metrics import (POOLED, DatasetScores, EvalReport,
                                        SignificanceResult, evaluate)
from corpus_align.study.report import (format_results_table, format_report,
                                       format_significance, write_report,
                                       read_report, write_predictions,
                                       read_predictions)

from conftest import TINY_SIMULATION


def write_tiny_collection(directory):
    specs, seed, common_fraction = specs_from_config(TINY_SIMULATION)
    collection, oracle = build_collection(specs, seed, common_fraction)
    for dataset in collection:
        write_dataset_csv(str(directory / ('%s.csv' % dataset.name)), dataset)
    write_manifest(str(directory / 'manifest.json'), collection, seed)
    return collection, oracle


def test_dataset_csv_round_trip_is_exact(tmp_path):
    collection, _ = write_tiny_collection(tmp_path)
    dataset = collection['exp_a']
    file_ids, scores, features = read_dataset_csv(
        str(tmp_path / 'exp_a.csv'), feature_dim=4)
    assert tuple(file_ids) == dataset.file_ids
    np.testing.assert_array_equal(scores, dataset.scores)
    np.testing.assert_array_equal(features, dataset.features)
    raw = (tmp_path / 'exp_a.csv').read_bytes()
    assert b'\r' not in raw
    assert raw.startswith(b'file_id,score,f0,f1,f2,f3\n')
    with pytest.raises(ShapeError):
        read_dataset_csv(str(tmp_path / 'exp_a.csv'), feature_dim=5)


def test_dataset_csv_errors(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('id,score,f0\na,1,2\n')
    with pytest.raises(ConfigurationError):
        read_dataset_csv(str(path))
    path.write_text('file_id,score,f0\na,1\n')
    with pytest.raises(ShapeError):
        read_dataset_csv(str(path))
    path.write_text('file_id,score,f0\na,good,2\n')
    with pytest.raises(ConfigurationError):
        read_dataset_csv(str(path))


def test_manifest(tmp_path):
    collection, _ = write_tiny_collection(tmp_path)
    manifest = read_manifest(str(tmp_path / 'manifest.json'))
    assert manifest['feature_dim'] == 4
    assert [d['name'] for d in manifest['datasets']] == collection.names

    broken = dict(manifest)
    del broken['seed']
    (tmp_path / 'broken.json').write_text(json.dumps(broken))
    with pytest.raises(ConfigurationError) as e:
        read_manifest(str(tmp_path / 'broken.json'))
    assert 'seed' in str(e.value)

    two_references = json.loads((tmp_path / 'manifest.json').read_text())
    two_references['datasets'][1]['is_reference'] = True
    (tmp_path / 'two.json').write_text(json.dumps(two_references))
    with pytest.raises(ConfigurationError):
        read_manifest(str(tmp_path / 'two.json'))


def test_reader_rebuilds_the_collection(tmp_path):
    collection, _ = write_tiny_collection(tmp_path)
    with pytest.raises(ConfigurationError):
        DataReader('hdf5')
    loaded = DataReader('csv').read_collection(str(tmp_path / 'manifest.json'))
    assert loaded.names == collection.names
    assert loaded.reference.name == 'ref'
    for a, b in zip(loaded, collection):
        np.testing.assert_array_equal(a.scores, b.scores)
        for split in ('train', 'validation', 'test'):
            np.testing.assert_array_equal(a.split[split], b.split[split])


def test_study_from_manifest(tmp_path, tiny_config):
    write_tiny_collection(tmp_path)
    study = AlignNetStudy(str(tmp_path / 'manifest.json'))
    assert study.datasets == ['ref', 'exp_a', 'exp_b']
    sizes = study.iterate(lambda dataset: len(study.collection[dataset]))
    assert sizes == {'ref': 60, 'exp_a': 40, 'exp_b': 40}
    assert list(sizes) == study.datasets
    assert study.iterate(lambda scale, dataset: scale * len(
        study.collection[dataset]), 2, datasets='exp_b') == {'exp_b': 80}
    with pytest.raises(ConfigurationError):
        study.iterate(len, dataset='ref')

    result = study.train('all-mdf-alignnet', tiny_config)
    curve = study.get_alignment(result.model, 'exp_a', n_points=20)
    assert len(curve) == 20 and curve.fitted is not None
    reference = study.get_alignment(result.model, 'ref', n_points=20)
    np.testing.assert_array_equal(reference.aligned, reference.intermediate)
    with pytest.raises(ConfigurationError):
        study.get_alignment(result.model, 'nowhere')
    with pytest.raises(ConfigurationError):
        study.train('individual', tiny_config, dataset='nowhere')


def test_study_individual_row(tmp_path, tiny_config):
    collection, _ = write_tiny_collection(tmp_path)
    study = AlignNetStudy(collection)
    results = study.train_individual_all(tiny_config)
    assert list(results) == ['ref', 'exp_a', 'exp_b']
    assert results['exp_a'].model.dataset_names == ['exp_a']
    row = study.evaluate_individual(results)
    grid = study.cross_evaluate(results)
    for name in study.datasets:
        assert row.scores(name) == grid[name].scores(name)
    assert row.pooled.n == sum(len(d.test) for d in collection)
    table = format_results_table({'individual': row,
                                  'all': study.evaluate(results['ref'].model)})
    assert 'individual' in table


def _report(values):
    per = {name: DatasetScores(r, e, 10) for name, (r, e) in values.items()}
    return EvalReport(per, DatasetScores(0.5, 1., 20))


def test_results_table_marks_best_and_second():
    reports = {'all': _report({'a': (0.70, 0.60), 'b': (0.50, 0.90)}),
               'mdf': _report({'a': (0.80, 0.50), 'b': (0.40, 0.95)}),
               'bal': _report({'a': (0.60, 0.70), 'b': (None, 1.20)})}
    significance = {'mdf': {('mdf vs all:lcc', 'a'):
                            SignificanceResult('lcc', 0.1, 0.02, 0.18)}}
    table = format_results_table(reports, baseline='all',
                                 significance=significance)
    lines = table.splitlines()
    lcc_rows = {line.split()[0]: line for line in lines[1:4]}
    assert '[0.800]*' in lcc_rows['mdf']
    assert '(0.700)' in lcc_rows['all']
    assert '[0.500]' in lcc_rows['all']
    assert 'n/a' in lcc_rows['bal']
    rmse_rows = {line.split()[0]: line for line in lines[6:9]}
    assert '[0.500]' in rmse_rows['mdf']
    assert '*' not in rmse_rows['mdf']
    assert POOLED in lines[0]
    with pytest.raises(ConfigurationError):
        format_results_table(reports, baseline='individual')


def test_report_and_predictions_files(tmp_path, small_collection):
    report = evaluate(lambda features, indicator: features[:, 0] + 3.,
                      small_collection)
    write_report(report, str(tmp_path / 'report.json'))
    loaded = read_report(str(tmp_path / 'report.json'))
    assert loaded.per_dataset == report.per_dataset

    write_predictions(report, str(tmp_path / 'predictions.csv'))
    predictions = read_predictions(str(tmp_path / 'predictions.csv'))
    assert list(predictions) == small_collection.names
    for name, pred in predictions.items():
        np.testing.assert_array_equal(pred.estimates,
                                      report.predictions[name].estimates)
        assert pred.file_ids == report.predictions[name].file_ids

    text = format_report(report, title='echo')
    assert text.startswith('echo\n')
    assert 'LCC' in text and 'RMSE' in text


def test_significance_lines():
    results = {('a vs b:rmse', 'x'): SignificanceResult('rmse', -0.2, -0.3,
                                                        -0.1),
               ('a vs b:lcc', 'x'): SignificanceResult('lcc', -0.1, -0.2,
                                                       -0.01),
               ('a vs b:lcc', 'y'): SignificanceResult('lcc', 0.01, -0.02,
                                                       0.04)}
    lines = format_significance(results).splitlines()
    assert lines[1].endswith('improved *')
    assert lines[2].endswith('worse')
    assert lines[3].endswith('not significant')
