"""
This file is part of corpus-align.

It defines the `corpus-align` command: dataset simulation, regimen
training, evaluation, significance comparison and alignment export.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import argparse
import csv
import json
import logging
import os
import sys

from .study.corpus_sim import (default_benchmark_config, specs_from_config,
                               build_collection, load_simulation_config,
                               OracleBundle)
from .study.data_reader.csv_reader import write_dataset_csv, write_manifest
from .study.errors import CorpusAlignException, ConfigurationError
from .study.main import AlignNetStudy
from .study.metrics import compare_predictions
from .study.model import AlignModel, save_checkpoint, load_checkpoint
from .study.plotter import check_matplotlib
from .study.report import (format_report, format_results_table,
                           format_significance, write_report, read_report,
                           write_predictions, read_predictions)
from .study.training import TrainConfig, RegimenKind
from .study.utilities import format_float
from .__version__ import __version__

logger = logging.getLogger('corpus_align')

PROG = 'corpus-align'
CHECKPOINT = 'checkpoint.json'
TRAIN_LOG = 'train_log.jsonl'
REPORT = 'report.json'
PREDICTIONS = 'predictions.csv'


def _claim(path, force, what='directory'):
    """Refuse to overwrite existing outputs unless --force is given."""
    if os.path.exists(path) and not force:
        raise ConfigurationError('%s %s already exists (use --force to '
                                 'overwrite)' % (what, path))


def _write_json(path, obj):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(obj, sort_keys=True, indent=1) + '\n')


def cmd_simulate(args):
    if args.benchmark:
        config = default_benchmark_config()
    else:
        config = load_simulation_config(args.config)
    if args.seed is not None:
        config['seed'] = args.seed
    specs, seed, common_fraction = specs_from_config(config)
    manifest_path = os.path.join(args.out, 'manifest.json')
    _claim(manifest_path, args.force, 'manifest')
    collection, oracle = build_collection(specs, seed, common_fraction)
    os.makedirs(args.out, exist_ok=True)
    for dataset in collection:
        write_dataset_csv(os.path.join(args.out, '%s.csv' % dataset.name),
                          dataset)
    write_manifest(manifest_path, collection, seed)
    oracle.save(os.path.join(args.out, 'oracle.json'))
    print('Simulated %d datasets (%s) into %s'
          % (len(collection), ', '.join(collection.names), args.out))
    return 0


def _train_config(args):
    config = TrainConfig.from_json(args.config) if args.config \
        else TrainConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.progress:
        config.show_progress = True
    config.validate()
    return config


def cmd_train(args):
    kind = RegimenKind.parse(args.regimen)
    config = _train_config(args)
    if kind is RegimenKind.INDIVIDUAL:
        run_name = '%s-%s-seed%d' % (kind.value, args.dataset, config.seed)
    else:
        run_name = '%s-seed%d' % (kind.value, config.seed)
    run_dir = os.path.join(args.out, run_name)
    _claim(run_dir, args.force)
    study = AlignNetStudy(args.manifest)
    result = study.train(kind, config, dataset=args.dataset)
    os.makedirs(run_dir, exist_ok=True)
    save_checkpoint(result.model, os.path.join(run_dir, CHECKPOINT),
                    regimen=kind.value)
    result.log.write(os.path.join(run_dir, TRAIN_LOG))
    _write_json(os.path.join(run_dir, 'config.json'), config.to_dict())
    print('%s: best validation loss %.6g at epoch %d (%d epochs run)'
          % (run_name, result.best_val_loss, result.best_epoch,
             result.epochs_run))
    if result.bal_activation_epoch is not None:
        print('BAL activated at epoch %d' % result.bal_activation_epoch)
    print('Run written to %s' % run_dir)
    return 0


def cmd_evaluate(args):
    model = load_checkpoint(args.checkpoint)
    out = args.out_explicit or os.path.dirname(os.path.abspath(args.checkpoint))
    _claim(os.path.join(out, REPORT), args.force, 'report')
    oracle = OracleBundle.load(args.oracle) if args.oracle else None
    study = AlignNetStudy(args.manifest)
    report = study.evaluate(model, oracle=oracle)
    os.makedirs(out, exist_ok=True)
    write_report(report, os.path.join(out, REPORT))
    write_predictions(report, os.path.join(out, PREDICTIONS))
    text = format_report(report, title=os.path.basename(out))
    with open(os.path.join(out, 'report.txt'), 'w', encoding='utf-8',
              newline='\n') as f:
        f.write(text)
    print(text, end='')
    return 0


def _load_run(path):
    """Report and predictions of a run directory."""
    if not os.path.isdir(path):
        raise ConfigurationError('%s is not a run directory' % path)
    label = os.path.basename(os.path.normpath(path))
    return (label, read_report(os.path.join(path, REPORT)),
            read_predictions(os.path.join(path, PREDICTIONS)))


def cmd_compare(args):
    label_a, report_a, pred_a = _load_run(args.run_a)
    label_b, report_b, pred_b = _load_run(args.run_b)
    if label_a == label_b:
        label_a, label_b = args.run_a, args.run_b
    comparison = '%s vs %s' % (label_a, label_b)
    results = compare_predictions(pred_a, pred_b, comparison,
                                  n_boot=args.n_boot, level=args.level,
                                  seed=args.seed or 0)
    print(format_results_table({label_a: report_a, label_b: report_b},
                               baseline=label_b,
                               significance={label_a: results}))
    print(format_significance(results), end='')
    if args.out_explicit:
        os.makedirs(args.out_explicit, exist_ok=True)
        path = os.path.join(args.out_explicit, 'comparison.json')
        _claim(path, args.force, 'comparison')
        _write_json(path, [dict(comparison=label, dataset=name, **r.to_dict())
                           for (label, name), r in results.items()])
    return 0


def cmd_export_alignments(args):
    model = load_checkpoint(args.checkpoint)
    if not isinstance(model, AlignModel):
        raise ConfigurationError('%s holds a bare AudioNet; only AlignNet '
                                 'checkpoints have alignment functions'
                                 % args.checkpoint)
    check_matplotlib()
    out = args.out_explicit or os.path.dirname(os.path.abspath(args.checkpoint))
    _claim(os.path.join(out, 'alignments.csv'), args.force, 'export')
    oracle = OracleBundle.load(args.oracle) if args.oracle else None
    study = AlignNetStudy(args.manifest)
    curves = [study.get_alignment(model, name, args.grid_size)
              for name in study.datasets]
    os.makedirs(out, exist_ok=True)

    summary = {}
    for curve in curves:
        entry = {'xmin': curve.xmin, 'xmax': curve.xmax,
                 'below_nominal': curve.below_nominal,
                 'above_nominal': curve.above_nominal,
                 'is_reference': curve.is_reference,
                 'fitted': (curve.fitted.to_list()
                            if curve.fitted is not None else None)}
        if oracle is not None:
            truth = oracle.distortions[curve.name]
            entry['max_deviation'] = curve.max_deviation(truth)
            if curve.fitted is not None:
                entry['max_deviation_fit'] = curve.max_deviation(
                    truth, use_fit=True)
        summary[curve.name] = entry
    _write_json(os.path.join(out, 'alignments.json'), summary)

    with open(os.path.join(out, 'alignments.csv'), 'w', encoding='utf-8',
              newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['dataset', 'intermediate', 'aligned', 'fitted'])
        for name, x, y, z in study.plotter.curve_table(curves):
            writer.writerow([name, format_float(x), format_float(y),
                             format_float(z)])
    study.plotter.show_alignment_curves(
        curves, os.path.join(out, 'alignments.svg'), oracle)
    for name, entry in summary.items():
        line = '%-12s observed [%.3f, %.3f]' % (name, entry['xmin'],
                                               entry['xmax'])
        if 'max_deviation' in entry:
            line += '  max deviation from truth %.3f' % entry['max_deviation']
        print(line)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG, description='Train and compare score-alignment regimens '
        'on collections of rated datasets.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None,
                        help='random seed (overrides the config)')
    common.add_argument('--out', dest='out_explicit', default=None,
                        help='output directory')
    common.add_argument('--force', action='store_true',
                        help='overwrite existing outputs')
    common.add_argument('-v', '--verbose', action='count', default=0)
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('simulate', parents=[common],
                       help='generate a synthetic dataset collection')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', help='simulation config (JSON)')
    source.add_argument('--benchmark', action='store_true',
                        help='use the built-in four-experiment benchmark')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('train', parents=[common], help='train one regimen')
    p.add_argument('manifest')
    p.add_argument('--regimen', required=True,
                   choices=[k.value for k in RegimenKind])
    p.add_argument('--dataset', help='dataset (individual regimen only)')
    p.add_argument('--config', help='training config (JSON)')
    p.add_argument('--progress', action='store_true',
                   help='show a progress bar')
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('evaluate', parents=[common],
                       help='score a checkpoint on the test splits')
    p.add_argument('checkpoint')
    p.add_argument('manifest')
    p.add_argument('--oracle', help='oracle file written by simulate')
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('compare', parents=[common],
                       help='significance of the differences between two '
                       'evaluated runs')
    p.add_argument('run_a')
    p.add_argument('run_b')
    p.add_argument('--n-boot', type=int, default=1000)
    p.add_argument('--level', type=float, default=0.95)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser('export-alignments', parents=[common],
                       help='sample, fit and plot the learned alignments')
    p.add_argument('checkpoint')
    p.add_argument('manifest')
    p.add_argument('--grid-size', type=int, default=100)
    p.add_argument('--oracle', help='oracle file written by simulate')
    p.set_defaults(func=cmd_export_alignments)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'train':
        if args.regimen == RegimenKind.INDIVIDUAL.value and not args.dataset:
            parser.error('the individual regimen requires --dataset')
        if args.regimen != RegimenKind.INDIVIDUAL.value and args.dataset:
            parser.error('--dataset only applies to the individual regimen')
    args.out = args.out_explicit or '.'
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else
        logging.INFO if args.verbose else logging.WARNING,
        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except (CorpusAlignException, OSError) as e:
        message = ' '.join(str(e).split())
        print('%s: error: %s' % (PROG, message), file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
