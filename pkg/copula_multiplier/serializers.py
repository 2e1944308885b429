"""Reading data files and writing reports, tables and run manifests."""
import csv
import hashlib
import io
import json
import logging

import numpy as np
import pandas as pd

from .exceptions import DataFormatError
from .models import DataMatrix
from .version import MULTIPLIER_BOOTSTRAP_VERSION

logger = logging.getLogger('copula_multiplier')


class ReportSerializer:
    """Flat report row built from a result object.

    Subclasses list the output keys in Meta.fields. A key is filled by a
    get_<key>(instance) method when one exists, else by the attribute of
    the same name.
    """

    class Meta:
        fields = []

    def __init__(self, instance, **context):
        self.instance = instance
        self.context = context

    @property
    def data(self):
        row = {}

        for field in self.Meta.fields:
            getter = getattr(self, f'get_{field}', None)
            row[field] = getter(self.instance) if getter else getattr(self.instance, field)

        return row


class BootstrapResultSerializer(ReportSerializer):
    """Report of one multiplier test"""

    class Meta:
        fields = [
            'statistic',
            'p_value',
            'ell',
            'kernel',
            'method',
            'M',
            'n',
            'seed',
            'pd_variant',
            'quantiles',
        ]

    def get_ell(self, result):
        return result.meta.get('ell')

    def get_kernel(self, result):
        return result.meta.get('kernel')

    def get_method(self, result):
        return result.meta.get('method')

    def get_n(self, result):
        return result.meta.get('n')

    def get_seed(self, result):
        return result.meta.get('seed')

    def get_pd_variant(self, result):
        return result.meta.get('pd_variant')

    def get_quantiles(self, result):
        return {f'{p:g}': value for p, value in sorted(result.quantiles.items())}


class BandwidthEstimateSerializer(ReportSerializer):
    """Report of one plug-in bandwidth estimate"""

    class Meta:
        fields = [
            'n',
            'ell_opt',
            'ell_raw',
            'L_used',
            'gamma_bar_sq',
            'delta_bar',
            'phi_second_derivative',
            'phi_integral_of_square',
            'grid_size',
        ]

    def get_phi_second_derivative(self, estimate):
        return estimate.phi_constants[0]

    def get_phi_integral_of_square(self, estimate):
        return estimate.phi_constants[1]


def _sniff_delimiter(first_line):
    if '\t' in first_line:
        return '\t'
    return ','


def read_data_matrix(path):
    """Read a comma or tab separated sample, one row per time index, header optional.

    Non-numeric or missing entries raise DataFormatError with their file
    row and column.
    """

    with open(path, encoding='utf-8') as f:
        numbered = [(number, line) for number, line in enumerate(f.read().splitlines(), start=1) if line.strip()]

    if not numbered:
        raise DataFormatError(f'{path} contains no data')

    delimiter = _sniff_delimiter(numbered[0][1])
    first = next(csv.reader([numbered[0][1]], delimiter=delimiter))

    try:
        [float(cell) for cell in first]
        header = None
    except ValueError:
        header = 0

    # file line of every data row
    line_numbers = [number for number, _ in numbered[0 if header is None else 1:]]
    text = '\n'.join(line for _, line in numbered)

    try:
        frame = pd.read_csv(io.StringIO(text), sep=delimiter, header=header, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exp:
        raise DataFormatError(f'malformed delimited file {path}: {exp}') from None

    values = np.empty(frame.shape, dtype=np.float64)

    for (row, column), cell in np.ndenumerate(frame.to_numpy()):
        try:
            values[row, column] = float(cell)
        except (TypeError, ValueError):
            raise DataFormatError(f'cannot parse {cell!r} as a number', row=line_numbers[row], column=column + 1) from None

        if not np.isfinite(values[row, column]):
            raise DataFormatError(f'non-finite value {cell!r}', row=line_numbers[row], column=column + 1)

    logger.debug(f'read {values.shape[0]} x {values.shape[1]} sample from {path}')

    return DataMatrix(values)


def write_data_matrix(path, data, header=None):
    """Write a sample in the comma separated form read_data_matrix accepts."""

    frame = pd.DataFrame(np.asarray(getattr(data, 'values', data)))
    frame.to_csv(path, index=False, header=header if header is not None else False, float_format='%.17g')


def write_table(path, table):
    """Write a result table as TSV."""

    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame(table)
    frame.to_csv(path, sep='\t', index=False, float_format='%.10g')


def file_digest(path):
    with open(path, 'rb') as f:
        return hashlib.sha256(f.read()).hexdigest()


def write_manifest(output_path, config, extra=None):
    """Write <output>.manifest.json with the settings, their hash, the library version and the output digest."""

    manifest = {
        'command': config.command,
        'settings': config.resolved(),
        'config_hash': config.config_hash(),
        'version': MULTIPLIER_BOOTSTRAP_VERSION,
        'seed': config.get_setting('SEED'),
        'output': str(output_path),
        'output_sha256': file_digest(output_path),
    }

    if extra:
        manifest.update(extra)

    manifest_path = f'{output_path}.manifest.json'
    with open(manifest_path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write('\n')

    return manifest_path
