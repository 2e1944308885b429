"""Command line entry point: copula-multiplier <command> [options]."""
import argparse
import logging
import sys

from . import harness
from .config import RunConfig
from .exceptions import CopulaMultiplierError
from .version import MULTIPLIER_BOOTSTRAP_VERSION

logger = logging.getLogger('copula_multiplier')

# command line flag -> setting key
FLAG_SETTINGS = {
    'mult_method': 'MULT_METHOD',
    'mult_kernel': 'MULT_KERNEL',
    'phi_kernel': 'PHI_KERNEL',
    'ell': 'ELL',
    'M': 'M',
    'seed': 'SEED',
    'psi': 'PSI',
    'pd_variant': 'PD_VARIANT',
    'workers': 'WORKERS',
    'model': 'MODEL',
    'copula': 'COPULA',
    'theta': 'THETA',
    'theta_after': 'THETA_AFTER',
    'break_at': 'BREAK_AT',
    'n': 'N',
    'seeds': 'SEEDS',
    'statistic': 'STATISTIC',
}


def _add_multiplier_flags(parser):
    parser.add_argument('--mult-method', help='moving-average or covariance-matrix')
    parser.add_argument('--mult-kernel', help='truncated, bartlett, parzen, flattop:<c> or usum:<p>')
    parser.add_argument('--phi-kernel', help='covariance function assumed by the bandwidth estimator')
    parser.add_argument('--ell', help='multiplier bandwidth, or auto')
    parser.add_argument('--M', help='number of multiplier replicates')
    parser.add_argument('--psi', help='aggregation of marginal lags: median, mean, min or max')
    parser.add_argument('--pd-variant', help='partial derivative estimator')


def _add_model_flags(parser):
    parser.add_argument('--model', help='iid, ar1, nar, expar or garch')
    parser.add_argument('--copula', help='independence, clayton or gumbel')
    parser.add_argument('--theta', help='copula parameter')
    parser.add_argument('--theta-after', help='copula parameter after the break')
    parser.add_argument('--break-at', help='break position as a fraction of n')
    parser.add_argument('--n', help='sample size')


def _add_experiment_flags(parser):
    parser.add_argument('--seeds', help='number of simulated samples')
    parser.add_argument('--workers', help='worker processes of the outer loop')
    parser.add_argument('--statistic', help='cvm or ks')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='copula-multiplier',
        description='Dependent multiplier bootstrap for the sequential empirical copula process',
    )
    parser.add_argument('--version', action='version', version=MULTIPLIER_BOOTSTRAP_VERSION)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='settings file of key = value lines')
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', help='override one setting')
    common.add_argument('--seed', help='root seed')
    common.add_argument('--out', help='output file; a manifest is written next to it')
    common.add_argument('-v', '--verbose', action='store_true', help='debug logging')

    commands = parser.add_subparsers(dest='command', required=True)

    cpd = commands.add_parser('cpd-test', parents=[common], help='change-point test on a data file')
    cpd.add_argument('data', help='comma or tab separated data, one row per time index')
    cpd.add_argument('--dump-surfaces', action='store_true', help='write the observed D_n surface as TSV')
    _add_multiplier_flags(cpd)

    table1 = commands.add_parser('table1', parents=[common], help='plug-in bandwidth means and deviations')
    _add_multiplier_flags(table1)
    _add_model_flags(table1)
    _add_experiment_flags(table1)

    for name, text in (('mse-sweep', 'quantile MSE against ell'),
                       ('imse-sweep', 'multiplier covariance IMSE against ell'),
                       ('quantile-mse', 'quantile bias and MSE at one ell')):
        sweep = commands.add_parser(name, parents=[common], help=text)
        _add_multiplier_flags(sweep)
        _add_model_flags(sweep)
        _add_experiment_flags(sweep)

    simulate = commands.add_parser('simulate', parents=[common], help='simulate one sample of a data model')
    _add_model_flags(simulate)

    return parser


def config_from_args(args):
    """RunConfig from the settings file, then --set overrides, then dedicated flags."""

    if args.config:
        config = RunConfig.from_file(args.config)
        config.command = args.command
    else:
        config = RunConfig(args.command)

    for item in args.set:
        key, separator, value = item.partition('=')
        if not separator:
            raise argparse.ArgumentTypeError(f'--set expects KEY=VALUE, got {item!r}')
        config.set_setting(key, value)

    for flag, key in FLAG_SETTINGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            config.set_setting(key, value)

    if getattr(args, 'dump_surfaces', False):
        config.set_setting('DUMP_SURFACES', True)

    return config


def _default_output(command):
    return {
        'cpd-test': 'cpd_test.tsv',
        'table1': 'table1.tsv',
        'mse-sweep': 'mse_sweep.tsv',
        'imse-sweep': 'imse_sweep.tsv',
        'quantile-mse': 'quantile_mse.tsv',
        'simulate': 'sample.csv',
    }.get(command)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    try:
        config = config_from_args(args)
        output = args.out or _default_output(args.command)

        if args.command == 'cpd-test':
            harness.run_cpd_test(config, args.data, output)
        elif args.command == 'table1':
            harness.run_table1(config, output)
        elif args.command in ('mse-sweep', 'imse-sweep'):
            harness.run_sweeps(config, output, args.command)
        elif args.command == 'quantile-mse':
            harness.run_quantile_mse(config, output)
        else:
            harness.run_simulate(config, output)

    except (CopulaMultiplierError, OSError, argparse.ArgumentTypeError) as exp:
        print(f'copula-multiplier: error: {exp}', file=sys.stderr)
        return 2

    return 0


if __name__ == '__main__':
    sys.exit(main())
