"""
This file is part of corpus-align.

It defines the text renderings of evaluation results (aligned tables with
best/second-best markers and significance stars) and the files in which
reports and test-set predictions are stored.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import csv
import json
from collections import OrderedDict

import numpy as np

from .errors import ConfigurationError
from .metrics import EvalReport, Predictions, POOLED
from .utilities import format_float

METRICS = ('lcc', 'rmse')
PREDICTION_HEADER = ['dataset', 'file_id', 'target', 'estimate',
                     'intermediate']


def _cell(value):
    return 'n/a' if value is None else '%.3f' % value


def _ranks(values, metric):
    """Indices of the best and second-best defined values."""
    defined = [(v, i) for i, v in enumerate(values) if v is not None]
    if metric == 'lcc':
        defined.sort(key=lambda vi: -vi[0])
    else:
        defined.sort(key=lambda vi: vi[0])
    best = defined[0][1] if len(defined) > 0 else None
    second = defined[1][1] if len(defined) > 1 else None
    return best, second


def _improved(significance, metric, dataset):
    if not significance:
        return False
    for (label, name), result in significance.items():
        if name == dataset and label.endswith(':' + metric):
            return result.improved
    return False


def format_results_table(reports, baseline=None, significance=None):
    """
    Render several regimens side by side: LCC in the upper block, RMSE in
    the lower block, one row per regimen, one column per dataset plus 'All'

    In every column the best value is wrapped in [ ] and the second best
    in ( ); a * marks a significant improvement over the baseline row.

    Parameters
    ----------
    reports: dict regimen -> EvalReport (row order is kept)

    baseline: string, optional
        The row the significance marks refer to

    significance: dict regimen -> dict as returned by
        `metrics.compare_predictions` (regimen vs baseline)

    Returns
    -------
    A string
    """
    if not reports:
        raise ConfigurationError('No report to format')
    if baseline is not None and baseline not in reports:
        raise ConfigurationError('Baseline %r is not among the reports'
                                 % baseline)
    significance = significance or {}
    rows = list(reports)
    columns = list(next(iter(reports.values())).names) + [POOLED]
    row_width = max(len(r) for r in rows + ['RMSE'])
    col_width = max([len(c) for c in columns] + [9])

    lines = []
    for metric in METRICS:
        lines.append(metric.upper().ljust(row_width) + ''.join(
            ('  ' + c.rjust(col_width)) for c in columns))
        cells = {r: [] for r in rows}
        for column in columns:
            values = [getattr(reports[r].scores(column), metric)
                      for r in rows]
            best, second = _ranks(values, metric)
            for i, r in enumerate(rows):
                text = _cell(values[i])
                if i == best:
                    text = '[%s]' % text
                elif i == second:
                    text = '(%s)' % text
                else:
                    text = ' %s ' % text
                if r != baseline and _improved(significance.get(r),
                                               metric, column):
                    text += '*'
                cells[r].append(text)
        for r in rows:
            lines.append(r.ljust(row_width) + ''.join(
                ('  ' + c.rjust(col_width)) for c in cells[r]))
        lines.append('')
    return '\n'.join(lines)


def format_report(report, title=None):
    """Single-regimen table, with latent-recovery LCC when available."""
    columns = report.names + [POOLED]
    lines = []
    if title:
        lines.append(title)
    lines.append('%-8s' % '' + ''.join('%12s' % c for c in columns))
    for metric in METRICS:
        lines.append('%-8s' % metric.upper() + ''.join(
            '%12s' % _cell(getattr(report.scores(c), metric))
            for c in columns))
    lines.append('%-8s' % 'n' + ''.join('%12d' % report.scores(c).n
                                        for c in columns))
    if report.latent_lcc:
        lines.append('%-8s' % 'latent' + ''.join(
            '%12s' % _cell(report.latent_lcc.get(c)) for c in report.names))
    for flag in report.flags:
        lines.append('flag: %s' % flag)
    return '\n'.join(lines) + '\n'


def format_significance(results):
    """
    One line per (comparison, dataset): difference, interval, verdict
    """
    lines = ['%-40s %-8s %10s %22s  %s'
             % ('comparison', 'dataset', 'diff', 'interval', 'verdict')]
    for (label, name), res in results.items():
        if res.improved:
            verdict = 'improved *'
        elif res.significant:
            verdict = 'worse'
        else:
            verdict = 'not significant'
        lines.append('%-40s %-8s %10.4f [%9.4f, %9.4f]  %s'
                     % (label, name, res.difference, res.ci_low, res.ci_high,
                        verdict))
    return '\n'.join(lines) + '\n'


def write_report(report, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(report.to_dict(), sort_keys=True, indent=1) + '\n')


def read_report(path):
    with open(path, encoding='utf-8') as f:
        return EvalReport.from_dict(json.load(f))


def write_predictions(report, path):
    """Test-set targets and estimates of every dataset, as CSV."""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(PREDICTION_HEADER)
        for name, pred in report.predictions.items():
            for row in zip(pred.file_ids, pred.targets, pred.estimates,
                           pred.intermediate):
                writer.writerow([name, row[0]] + [format_float(x)
                                                  for x in row[1:]])


def read_predictions(path):
    """
    Inverse of `write_predictions`

    Returns
    -------
    An OrderedDict name -> Predictions, in file order
    """
    columns = OrderedDict()
    with open(path, encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != PREDICTION_HEADER:
            raise ConfigurationError('%s is not a predictions file' % path)
        for row in reader:
            entry = columns.setdefault(row[0], ([], [], [], []))
            entry[0].append(row[1])
            for k in range(3):
                entry[k + 1].append(float(row[k + 2]))
    return OrderedDict(
        (name, Predictions(tuple(ids), np.array(t), np.array(e), np.array(i)))
        for name, (ids, t, e, i) in columns.items())
