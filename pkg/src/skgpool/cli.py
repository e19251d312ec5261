"""
skgpool command line.

    skgpool ingest --dataset MUTAG --root data/
    skgpool crossval --dataset MUTAG --method geometric --seed 7 --out runs/mutag_gp
    skgpool ablate-metric --dataset PTC_MR --metrics euclidean,inner_product,cosine
    skgpool report --reports runs/a/report.json,runs/b/report.json

Settings resolve as built-in defaults < --config FILE (key=value lines) < explicit flags.
Every command writes manifest.json next to its outputs.
"""
import os
import sys
import logging
import argparse
import numpy as np
from . import __version__
from .methods.data_handling import parse_tudataset
from .methods.model import ModelConfig, GPoolNet, count_parameters
from .methods.training import (TrainConfig, RunReport, run_cross_validation, train_single_run, resolve_k,
                               fold_split, run_seeds)
from .methods.diagnostics import dropped_histogram, central_fraction, collect_dropped_values, entropy_trace, \
    comparison_table, render_table
from .methods.pooling import METHODS, METRICS
from .methods.layers import ACTIVATIONS
from .methods.util import (read_config_file, parse_bool, parse_list, write_json, write_csv, write_text,
                           write_manifest, read_reports, reports_frame)

logger = logging.getLogger(__name__)

COMMANDS = ('ingest', 'train', 'crossval', 'ablate-metric', 'histogram', 'entropy', 'params', 'report')


class UsageError(Exception):
    pass


def _optional_int(value):
    if value is None or str(value).strip().lower() == 'none':
        return None
    return int(value)


def _optional_str(value):
    if value is None or str(value).strip().lower() == 'none':
        return None
    return str(value)


def _int_list(value):
    return parse_list(value, int)


def _str_list(value):
    return parse_list(value, str)


def _value_range(value):
    lo, hi = parse_list(value, float)
    return [lo, hi]


# option name -> (converter, default)
OPTIONS = {
    'dataset': (_optional_str, None),
    'root': (str, '.'),
    'out': (str, '.'),
    'method': (str, 'geometric'),
    'metric': (str, 'euclidean'),
    'k': (_optional_int, None),
    'alpha': (float, 2.0),
    'literal_eq3': (parse_bool, False),
    'widths': (_int_list, [32, 32, 32, 32, 1]),
    'activation': (str, 'tanh'),
    'include_input': (parse_bool, False),
    'hidden': (int, 128),
    'lambda': (float, 0.0),
    'epochs': (int, 200),
    'lr': (float, 1e-3),
    'optimizer': (str, 'adam'),
    'batch_size': (int, 32),
    'folds': (int, 10),
    'repeats': (int, 10),
    'seed': (int, 0),
    'jobs': (int, 1),
    'percentile': (float, 0.6),
    'bins': (int, 50),
    'range': (_value_range, [-1.0, 1.0]),
    'metrics': (_str_list, list(METRICS)),
    'reports': (_str_list, []),
    'row_by': (str, 'label'),
    'summary': (_optional_str, None),
    'label': (_optional_str, None),
    'verbose': (parse_bool, False),
}

# estimator parameter names written by GPOOL.save_run_params
ALIASES = {'learning_rate': 'lr', 'lambda_': 'lambda', 'conv_widths': 'widths', 'random_seed': 'seed'}

FLAGS = ('include_input', 'literal_eq3', 'verbose')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', dest='config', help='key=value settings file', type=str, default=None)
    common.add_argument('--dataset', '--name', dest='dataset', help='TUDataset name, e.g. MUTAG', type=str, default=None)
    common.add_argument('--root', dest='root', help='directory holding the dataset folder', type=str, default=None)
    common.add_argument('--out', dest='out', help='output directory', type=str, default=None)
    common.add_argument('--method', dest='method', help='pooling method', choices=METHODS, default=None)
    common.add_argument('--metric', dest='metric', help='geometric pooling metric', choices=METRICS, default=None)
    common.add_argument('--k', dest='k', help='retained nodes (default: 60%% rule on node counts)', type=_optional_int, default=None)
    common.add_argument('--alpha', dest='alpha', help='mixed pooling intermediate width ratio', type=float, default=None)
    common.add_argument('--literal-eq3', dest='literal_eq3', help='keep the most similar nodes instead', action='store_const', const=True, default=None)
    common.add_argument('--widths', dest='widths', help='conv layer widths, comma separated', type=_int_list, default=None)
    common.add_argument('--activation', dest='activation', help='conv nonlinearity', choices=ACTIVATIONS, default=None)
    common.add_argument('--include-input', dest='include_input', help='concatenate raw node features too', action='store_const', const=True, default=None)
    common.add_argument('--hidden', dest='hidden', help='readout hidden width', type=int, default=None)
    common.add_argument('--lambda', dest='lambda', help='KL-to-uniform penalty weight', type=float, default=None)
    common.add_argument('--epochs', dest='epochs', help='training epochs', type=int, default=None)
    common.add_argument('--lr', dest='lr', help='learning rate', type=float, default=None)
    common.add_argument('--optimizer', dest='optimizer', help='optimizer', choices=('adam', 'sgd'), default=None)
    common.add_argument('--batch-size', dest='batch_size', help='graphs per gradient update', type=int, default=None)
    common.add_argument('--folds', dest='folds', help='cross-validation folds', type=int, default=None)
    common.add_argument('--repeats', dest='repeats', help='cross-validation repetitions', type=int, default=None)
    common.add_argument('--seed', dest='seed', help='random seed', type=int, default=None)
    common.add_argument('--jobs', dest='jobs', help='parallel runs for crossval', type=int, default=None)
    common.add_argument('--percentile', dest='percentile', help='fraction of graphs larger than k', type=float, default=None)
    common.add_argument('--bins', dest='bins', help='histogram bins', type=int, default=None)
    common.add_argument('--range', dest='range', help='histogram range: LO HI', nargs=2, type=float, metavar=('LO', 'HI'), default=None)
    common.add_argument('--metrics', dest='metrics', help='metrics for ablate-metric', type=_str_list, default=None)
    common.add_argument('--reports', dest='reports', help='report.json files for report', type=_str_list, default=None)
    common.add_argument('--row-by', dest='row_by', help='report attribute naming the table rows', type=str, default=None)
    common.add_argument('--summary', dest='summary', help='path of the ingest summary JSON', type=str, default=None)
    common.add_argument('--label', dest='label', help='row label stored in the report', type=str, default=None)
    common.add_argument('--verbose', dest='verbose', help='INFO logging and progress bars', action='store_const', const=True, default=None)

    parser = argparse.ArgumentParser(prog='skgpool', description='Graph classification with geometric, sort and mixed pooling')
    parser.add_argument('--version', action='version', version='%(prog)s '+__version__)
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=command+' command')
    return parser


def resolve_options(args):
    options = {name: default for name, (_, default) in OPTIONS.items()}
    if args.config is not None:
        for key, value in read_config_file(args.config).items():
            key = ALIASES.get(key, key)
            if key not in OPTIONS:
                raise UsageError("unknown setting '"+key+"' in "+args.config)
            options[key] = OPTIONS[key][0](value)
    for name in OPTIONS:
        value = getattr(args, name, None)
        if value is not None:
            options[name] = value
    options['command'] = args.command
    return options


def model_config(options, metric=None):
    return ModelConfig(options['method'], options['k'], options['metric'] if metric is None else metric,
                       options['alpha'], options['literal_eq3'], tuple(options['widths']), options['activation'],
                       options['include_input'], options['hidden'])


def train_config(options):
    return TrainConfig(epochs=options['epochs'], learning_rate=options['lr'], optimizer=options['optimizer'],
                       lambda_=options['lambda'], folds=options['folds'], repeats=options['repeats'],
                       seed=options['seed'], batch_size=options['batch_size'], verbose=options['verbose'])


def load_dataset(options):
    if options['dataset'] is None:
        raise UsageError("--dataset is required for '"+options['command']+"'")
    return parse_tudataset(options['root'], options['dataset'])


def out_path(options, filename):
    return os.path.join(options['out'], filename)


def run_ingest(options):
    ds = load_dataset(options)
    if options['summary'] is None:
        write_json(out_path(options, 'summary.json'), ds.summary(options['percentile']))
        return options['out']
    out_dir = os.path.dirname(os.path.abspath(options['summary']))
    os.makedirs(out_dir, exist_ok=True)
    write_json(options['summary'], ds.summary(options['percentile']))
    return out_dir


def run_train(options):
    ds = load_dataset(options)
    mcfg, tcfg = model_config(options), train_config(options)
    k = resolve_k(ds, mcfg)
    net, history, accuracy, _, _ = train_single_run(ds, mcfg, tcfg, 0, 0, k, track_eval=True)
    report = RunReport(options['label'] or mcfg.method, ds.name, mcfg.method, mcfg.metric, mcfg.activation,
                       float(tcfg.lambda_), int(k), count_parameters(net),
                       [{'repeat': 0, 'fold': 0, 'accuracy': accuracy,
                         'train_loss': [float(v) for v in history['Train Loss']]}])
    write_text(out_path(options, 'report.json'), report.to_json() + "\n")
    write_csv(out_path(options, 'history.csv'), history)


def run_crossval(options):
    ds = load_dataset(options)
    report = run_cross_validation(ds, model_config(options), train_config(options), options['jobs'], options['label'])
    write_text(out_path(options, 'report.json'), report.to_json() + "\n")
    write_csv(out_path(options, 'summary.csv'), report.summary_frame())


def run_ablate_metric(options):
    ds = load_dataset(options)
    tcfg = train_config(options)
    reports = []
    for metric in options['metrics']:
        if metric not in METRICS:
            raise UsageError("unknown metric '"+metric+"'")
        report = run_cross_validation(ds, model_config(options, metric), tcfg, options['jobs'], metric)
        write_text(out_path(options, 'report_'+metric+'.json'), report.to_json() + "\n")
        reports.append(report)
    table = comparison_table(reports, row_by='metric')
    write_csv(out_path(options, 'metric_ablation.csv'), table, index=True)
    write_text(out_path(options, 'metric_ablation.txt'), render_table(table))


def run_histogram(options):
    ds = load_dataset(options)
    net, _, _, _, _ = train_single_run(ds, model_config(options), train_config(options), 0, 0)
    histogram = dropped_histogram(net, ds, None, options['bins'], options['range'])
    logger.info("central fraction |v| < 0.1: %.4f", central_fraction(collect_dropped_values(net, ds)))
    write_csv(out_path(options, 'histogram.csv'), histogram)


def run_entropy(options):
    ds = load_dataset(options)
    mcfg, tcfg = model_config(options), train_config(options)
    train_idx, test_idx = fold_split(ds, tcfg, 0, 0)
    init_rng, shuffle_rng = run_seeds(tcfg.seed, 0, 0)
    net = GPoolNet(ds.feature_dim, ds.class_count, resolve_k(ds, mcfg), mcfg, init_rng)
    trace = entropy_trace(net, ds.subset(test_idx), ds.subset(train_idx), tcfg, shuffle_rng)
    write_csv(out_path(options, 'entropy.csv'), trace)


def run_params(options):
    ds = load_dataset(options)
    mcfg = model_config(options)
    k = resolve_k(ds, mcfg)
    net = GPoolNet(ds.feature_dim, ds.class_count, k, mcfg, np.random.default_rng(options['seed']))
    write_json(out_path(options, 'params.json'),
               {'method': mcfg.method, 'dataset': ds.name, 'k': int(k), 'parameter_count': count_parameters(net)})


def run_report(options):
    if not options['reports']:
        raise UsageError("--reports is required for 'report'")
    reports = read_reports(options['reports'])
    table = comparison_table(reports, row_by=options['row_by'])
    write_csv(out_path(options, 'summary.csv'), reports_frame(reports))
    write_csv(out_path(options, 'comparison.csv'), table, index=True)
    write_text(out_path(options, 'comparison.txt'), render_table(table))


RUNNERS = {'ingest': run_ingest, 'train': run_train, 'crossval': run_crossval, 'ablate-metric': run_ablate_metric,
           'histogram': run_histogram, 'entropy': run_entropy, 'params': run_params, 'report': run_report}


def dispatch(argv=None):
    """
    Run one command. Returns 0 on success, 2 for usage errors, 1 for runtime failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    try:
        options = resolve_options(args)
        logging.basicConfig(level=logging.INFO if options['verbose'] else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        os.makedirs(options['out'], exist_ok=True)
        out_dir = RUNNERS[args.command](options) or options['out']
        config = {key: value for key, value in options.items() if key not in ('command', 'out', 'verbose')}
        write_manifest(out_dir, args.command, config, options['seed'], __version__)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print("skgpool "+args.command+": error: "+str(e), file=sys.stderr)
        return 2
    except Exception as e:
        logger.debug("%s failed", args.command, exc_info=True)
        print("skgpool "+args.command+": error: "+type(e).__name__+": "+str(e), file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
