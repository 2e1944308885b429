"""Run settings.

Settings are declared once in SETTINGS (name, description, default and an
optional validator or list of choices). A RunConfig stores canonical text
values and parses them on access, so the on-disk form round-trips exactly.
"""
import hashlib
import json
import logging

from .exceptions import ConfigurationError
from .models import KernelRole, KernelSpec

logger = logging.getLogger('copula_multiplier')

COMMANDS = ('cpd-test', 'table1', 'mse-sweep', 'imse-sweep', 'quantile-mse', 'simulate')


def str2bool(text, test=True):
    """Test if a string 'looks' like a boolean value.

    - test=True checks for truthy values
    - test=False checks for falsy values
    """

    if test:
        return str(text).strip().lower() in ('1', 'y', 'yes', 't', 'true', 'ok', 'on')
    return str(text).strip().lower() in ('0', 'n', 'no', 'none', 'f', 'false', 'off', '')


def _boolean(text):
    if str2bool(text):
        return True
    if str2bool(text, test=False):
        return False
    raise ValueError(f'not a boolean: {text!r}')


def _positive_int(text):
    value = int(str(text).strip())
    if value < 1:
        raise ValueError(f'expected a positive integer, got {value}')
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise ValueError(f'expected a number in (0, 1), got {value}')
    return value


def _optional_float(text):
    text = str(text).strip()
    if text.lower() in ('', 'none'):
        return None
    return float(text)


def _ell(text):
    text = str(text).strip().lower()
    if text == 'auto':
        return 'auto'
    return _positive_int(text)


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [_positive_int(item) for item in text]
    return [_positive_int(item) for item in str(text).split(',') if item.strip()]


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(item) for item in text]
    return [float(item) for item in str(text).split(',') if item.strip()]


def _fraction_list(text):
    values = _float_list(text)
    for value in values:
        if not 0.0 < value < 1.0:
            raise ValueError(f'expected numbers in (0, 1), got {value}')
    return values


def _kernel(text):
    return KernelSpec.parse(text, KernelRole.WEIGHT_KAPPA)


def _optional_kernel(text):
    if isinstance(text, KernelSpec):
        return text
    if str(text).strip().lower() in ('', 'none', 'auto'):
        return None
    return _kernel(text)


def _kernel_list(text):
    if isinstance(text, (list, tuple)):
        return [_kernel(item) for item in text]
    return [_kernel(item) for item in str(text).split(',') if item.strip()]


SETTINGS = {
    'MULT_METHOD': {
        'name': 'Multiplier construction',
        'description': 'How dependent multiplier sequences are generated',
        'choices': [('moving-average', 'Moving average of i.i.d. variables'),
                    ('covariance-matrix', 'Square root of the multiplier covariance matrix')],
        'default': 'moving-average',
    },
    'MULT_KERNEL': {
        'name': 'Multiplier kernel',
        'description': 'Moving average weights kappa, or covariance function phi for the covariance matrix construction',
        'validator': _kernel,
        'default': 'parzen',
    },
    'PHI_KERNEL': {
        'name': 'Bandwidth covariance function',
        'description': 'Covariance function phi assumed by the automatic bandwidth estimator; '
                       'empty to take the one of MULT_METHOD and MULT_KERNEL',
        'validator': _optional_kernel,
        'default': '',
    },
    'PHI_KERNELS': {
        'name': 'Bandwidth covariance functions',
        'description': 'Comma separated covariance functions tabulated by table1',
        'validator': _kernel_list,
        'default': 'parzen,usum:8',
    },
    'ELL': {
        'name': 'Bandwidth',
        'description': 'Multiplier bandwidth ell, or auto for the plug-in estimate',
        'validator': _ell,
        'default': 'auto',
    },
    'M': {
        'name': 'Replicates',
        'description': 'Number of multiplier replicates',
        'validator': _positive_int,
        'default': 1000,
    },
    'SEED': {
        'name': 'Seed',
        'description': 'Root seed of every random stream of the run',
        'validator': int,
        'default': 1,
    },
    'PSI': {
        'name': 'Lag aggregation',
        'description': 'Aggregation of the marginal negligible lags into the truncation lag L',
        'choices': [('median', 'Median'), ('mean', 'Mean'), ('min', 'Minimum'), ('max', 'Maximum')],
        'default': 'median',
    },
    'GRID_SIZE': {
        'name': 'Bandwidth grid size',
        'description': 'Number g of lattice points used by the bandwidth estimator',
        'validator': _positive_int,
        'default': 25,
    },
    'U_GRID_PER_AXIS': {
        'name': 'Statistic grid',
        'description': 'Points per axis of the lattice approximating integrals and suprema over u',
        'validator': _positive_int,
        'default': 20,
    },
    'PD_VARIANT': {
        'name': 'Partial derivative estimator',
        'description': 'Finite-difference estimator of the copula partial derivatives',
        'choices': [('remillard-scaillet', 'Central differences'),
                    ('boundary-corrected', 'Central differences with clamped increments'),
                    ('bucher-ruppert', 'One-sided differences near the boundary')],
        'default': 'remillard-scaillet',
    },
    'BASE_LAW': {
        'name': 'Multiplier base law',
        'description': 'Law of the i.i.d. variables the multipliers are built from',
        'choices': [('normal', 'Standard normal'), ('rademacher', 'Rademacher')],
        'default': 'normal',
    },
    'STATISTIC': {
        'name': 'Statistic',
        'description': 'Statistic of the quantile experiments',
        'choices': [('cvm', 'Cramer-von Mises'), ('ks', 'Kolmogorov-Smirnov')],
        'default': 'cvm',
    },
    'CPD_STATISTIC': {
        'name': 'Change-point statistic',
        'description': 'Functional of the change-point process used by cpd-test',
        'choices': [('changepoint-ks', 'Supremum of |D_n|'), ('changepoint-cvm', 'Mean of D_n squared')],
        'default': 'changepoint-ks',
    },
    'MODEL': {
        'name': 'Data model',
        'description': 'Data generating process of the simulations',
        'choices': [('iid', 'i.i.d.'), ('ar1', 'AR1'), ('nar', 'NAR'), ('expar', 'EXPAR'), ('garch', 'GARCH')],
        'default': 'ar1',
    },
    'COPULA': {
        'name': 'Copula',
        'description': 'Copula of the innovations',
        'choices': [('independence', 'Independence'), ('clayton', 'Clayton'), ('gumbel', 'Gumbel-Hougaard')],
        'default': 'gumbel',
    },
    'THETA': {
        'name': 'Copula parameter',
        'description': 'Parameter of the innovation copula',
        'validator': float,
        'default': 1.5,
    },
    'THETAS': {
        'name': 'Copula parameters',
        'description': 'Comma separated copula parameters tabulated by table1',
        'validator': _float_list,
        'default': '1.5,3',
    },
    'THETA_AFTER': {
        'name': 'Copula parameter after the break',
        'description': 'When set, innovations after the break are drawn with this parameter',
        'validator': _optional_float,
        'default': '',
    },
    'BREAK_AT': {
        'name': 'Break position',
        'description': 'Fraction of the sample after which the copula changes',
        'validator': _fraction,
        'default': 0.5,
    },
    'N': {
        'name': 'Sample size',
        'description': 'Length of simulated samples',
        'validator': _positive_int,
        'default': 200,
    },
    'NS': {
        'name': 'Sample sizes',
        'description': 'Comma separated sample sizes tabulated by table1',
        'validator': _int_list,
        'default': '100,200,400',
    },
    'SEEDS': {
        'name': 'Monte Carlo samples',
        'description': 'Number of simulated data sets per experiment cell',
        'validator': _positive_int,
        'default': 300,
    },
    'WORKERS': {
        'name': 'Worker processes',
        'description': 'Size of the process pool of the outer Monte Carlo loop',
        'validator': _positive_int,
        'default': 1,
    },
    'ELL_LIST': {
        'name': 'Bandwidth sweep',
        'description': 'Comma separated bandwidths of the sweeps',
        'validator': _int_list,
        'default': ','.join(str(ell) for ell in range(1, 40, 2)),
    },
    'P_SET': {
        'name': 'Quantile orders',
        'description': 'Comma separated quantile orders',
        'validator': _fraction_list,
        'default': '0.25,0.5,0.75,0.9,0.95,0.99',
    },
    'REFERENCE_REPS': {
        'name': 'Reference samples',
        'description': 'Samples of the oracle runs giving reference quantiles and sigma_C',
        'validator': _positive_int,
        'default': 20000,
    },
    'REFERENCE_N': {
        'name': 'Reference sample size',
        'description': 'Length of the samples of the oracle runs',
        'validator': _positive_int,
        'default': 500,
    },
    'DUMP_SURFACES': {
        'name': 'Dump surfaces',
        'description': 'Write the observed change-point surface as TSV next to the report',
        'validator': _boolean,
        'default': False,
    },
}


def _canonical(value):
    """Text form of a parsed setting value."""

    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, KernelSpec):
        return value.name
    if isinstance(value, (list, tuple)):
        return ','.join(_canonical(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_setting(key, value):
    """Validate a raw value for a setting and return the parsed value."""

    try:
        setting = SETTINGS[key]
    except KeyError:
        raise ConfigurationError(f'unknown setting {key}') from None

    if 'choices' in setting:
        text = str(value).strip().lower()
        allowed = [choice for choice, _ in setting['choices']]
        if text not in allowed:
            raise ConfigurationError(f'{key} must be one of {", ".join(allowed)}, got {value!r}')
        return text

    validator = setting.get('validator', str)

    try:
        if validator is float or validator is int:
            return validator(str(value).strip())
        return validator(value)
    except ConfigurationError as exp:
        raise ConfigurationError(f'{key}: {exp}') from None
    except (TypeError, ValueError) as exp:
        raise ConfigurationError(f'invalid value {value!r} for {key}: {exp}') from None


class RunConfig:
    """Command plus settings of one run."""

    def __init__(self, command=None, values=None):
        if command is not None and command not in COMMANDS:
            raise ConfigurationError(f'unknown command {command!r}')

        self.command = command
        self.values = {}

        for key, value in (values or {}).items():
            self.set_setting(key, value)

    def set_setting(self, key, value):
        key = key.strip().upper()
        self.values[key] = _canonical(parse_setting(key, value))

    def get_setting(self, key, default=None):
        """Parsed value of a setting; unset settings fall back to default, then to the declared default."""

        key = key.upper()

        if key in self.values:
            return parse_setting(key, self.values[key])
        if default is not None:
            return default
        return parse_setting(key, SETTINGS[key]['default'])

    def resolved(self):
        """Canonical text of every setting, defaults included."""
        return {key: _canonical(self.get_setting(key)) for key in sorted(SETTINGS)}

    def config_hash(self):
        payload = {'command': self.command, 'settings': self.resolved()}
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def to_text(self):
        lines = []
        if self.command:
            lines.append(f'command = {self.command}')
        for key in sorted(self.values):
            lines.append(f'{key} = {self.values[key]}')
        return '\n'.join(lines) + '\n'

    def to_file(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_text())

    @classmethod
    def from_text(cls, text):
        command = None
        values = {}

        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue

            key, separator, value = line.partition('=')
            if not separator:
                raise ConfigurationError(f'line {number}: expected key = value, got {raw!r}')

            key = key.strip()
            if key.lower() == 'command':
                command = value.strip()
            else:
                values[key.upper()] = value.strip()

        return cls(command, values)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding='utf-8') as f:
            config = cls.from_text(f.read())

        logger.debug(f'loaded {len(config.values)} settings from {path}')
        return config

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.command == other.command and self.values == other.values

    def __repr__(self):
        return f'RunConfig(command={self.command!r}, values={self.values!r})'
