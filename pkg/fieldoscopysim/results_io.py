"""Saving and loading simulation results.

Every experiment writes plain CSV tables (comma separated, '.' decimal
separator, LF line endings) whose headers are fixed per table kind, a
``run.json`` manifest describing how the tables were produced, and
optionally one SVG line plot per table.

Floats are written with ``repr``, which round-trips exactly and does not
depend on the locale, so reruns of the same configuration produce
byte-identical files.
"""

import csv
import json
import logging
import os

import numpy as np

from fieldoscopysim.errors import ConfigurationError

logger = logging.getLogger(__name__)

SCALING_HEADER = ('mean_photons', 'raw_mean', 'raw_std', 'norm_mean',
                  'norm_std', 'kind', 'coherent_fraction', 'shots', 'seed')
SCAN_HEADER = ('delay_fs', 'mean_signal', 'std_signal')
SPECTRUM_HEADER = ('freq_phz', 'magnitude')
GABOR_HEADER = ('window_label', 'window_center_fs', 'mean_photons',
                'norm_mean', 'norm_std', 'a_hat')
CEP_HEADER = ('delay_fs', 'stabilized', 'averaged')

MANIFEST_NAME = 'run.json'


def format_value(value):
    """Text form of one table cell."""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def gen_table(columns):
    """Organize equal-length columns in a table of rows.

    Parameters
    ----------
    columns : sequence of array_like
        The columns of the table, in header order. Scalars are repeated
        on every row.

    Returns
    -------
    list of tuple
        One tuple per row.

    Raises
    ------
    ConfigurationError
        If the array columns do not all have the same length.
    """
    if not columns:
        return []
    lengths = {len(column) for column in columns if not np.isscalar(column)}
    if len(lengths) > 1:
        raise ConfigurationError('Columns must have the same length.')
    if not lengths:
        # only scalars, so a single row
        return [tuple(columns)]
    length = lengths.pop()
    expanded = [[column] * length if np.isscalar(column) else list(column)
                for column in columns]
    return list(zip(*expanded))


def save_table(rows, header, output_path):
    """Save rows to a CSV file.

    Parameters
    ----------
    rows : iterable of sequence
        The rows to be saved, each with one value per header column.
    header : sequence of str
        Column names.
    output_path : string
        Path to the file to be saved.
    """
    header = list(header)
    with open(output_path, 'w', newline='', encoding='utf-8') as stream:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ConfigurationError(
                    'row has {} values for {} columns'.format(
                        len(row), len(header)))
            writer.writerow([format_value(value) for value in row])
    logger.info('wrote %s', output_path)


def load_table(table_path, expected_header=None):
    """Load a CSV table written by ``save_table``.

    Parameters
    ----------
    table_path : string
        Path to the CSV file.
    expected_header : sequence of str, optional
        If given, the file's header must match it exactly.

    Returns
    -------
    header : list of str
    rows : list of list of str
    """
    with open(table_path, newline='', encoding='utf-8') as stream:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(
                '{} is empty'.format(table_path), key='scan_path')
        rows = [row for row in reader if row]
    if expected_header is not None and header != list(expected_header):
        raise ConfigurationError(
            '{} has header {}, expected {}'.format(
                table_path, ','.join(header), ','.join(expected_header)),
            key='scan_path')
    return header, rows


def load_columns(table_path, expected_header):
    """Numeric columns of a CSV table, keyed by column name."""
    header, rows = load_table(table_path, expected_header)
    try:
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    except ValueError:
        raise ConfigurationError(
            '{} contains non-numeric values'.format(table_path),
            key='scan_path')
    return {name: data[:, index] for index, name in enumerate(header)}


def write_manifest(output_dir, command, config, seed, version, files):
    """Write ``run.json`` describing a finished run.

    Parameters
    ----------
    output_dir : string
        Directory the run wrote into.
    command : str
    config : dict
        The fully resolved configuration.
    seed : int
    version : str
        Package version.
    files : sequence of str
        Names of the emitted files, relative to ``output_dir``.

    Returns
    -------
    str
        Path of the manifest.
    """
    manifest = {
        'command': command,
        'config': config,
        'seed': seed,
        'version': version,
        'files': sorted(files),
    }
    path = os.path.join(output_dir, MANIFEST_NAME)
    with open(path, 'w', encoding='utf-8') as stream:
        stream.write(json.dumps(manifest, indent=2, sort_keys=True))
        stream.write('\n')
    logger.info('wrote %s', path)
    return path


def save_line_plot(x, series, xlabel, ylabel, output_path, log_x=False):
    """Save a line plot of one or more series as SVG.

    Parameters
    ----------
    x : array_like
        Shared abscissa.
    series : dict
        Maps a legend label to the values plotted against ``x``.
    xlabel, ylabel : str
        Axis labels.
    output_path : string
        Path of the SVG file.
    log_x : bool, optional
        Use a logarithmic abscissa.

    Returns
    -------
    str or None
        The path written, or None if matplotlib is not installed.
    """
    try:
        from matplotlib.figure import Figure
    except ImportError:
        logger.warning('matplotlib is not installed; skipping %s', output_path)
        return None

    figure = Figure(figsize=(6, 4))
    axes = figure.add_subplot(1, 1, 1)
    for label, values in series.items():
        axes.plot(x, values, label=label)
    if log_x:
        axes.set_xscale('log')
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    if len(series) > 1:
        axes.legend()
    figure.savefig(output_path, format='svg', metadata={'Date': None})
    logger.info('wrote %s', output_path)
    return output_path
