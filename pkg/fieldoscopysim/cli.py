"""Command-line front end.

Each run executes one experiment and writes its CSV tables, a
``run.json`` manifest and, if requested, SVG plots into an output
directory::

    fieldoscopysim scaling --kind poisson --grid paper-table --seed 42
    fieldoscopysim --preset figS4 --output-dir out/figS4
    fieldoscopysim trace --config scan.yaml --seed 7

Parameters come from, in increasing precedence, the built-in defaults, a
preset, a flat YAML config file and command-line flags. Every config key
has a flag of the same name with dashes for underscores.

Exit status is 0 on success, 2 for an invalid configuration and 3 when a
numerical procedure fails.
"""

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass

import yaml

from fieldoscopysim import __version__, field_model, gabor_analysis, \
    ghost_mc, photon_stats, results_io, streams, trace_sim
from fieldoscopysim.errors import ConfigurationError, EstimationError, \
    NumericError
from fieldoscopysim.field_model import DetectionSpec, PulseSpec
from fieldoscopysim.gabor_analysis import CoherenceProfile
from fieldoscopysim.photon_stats import PhotonDistribution

logger = logging.getLogger(__name__)

COMMANDS = ('scaling', 'trace', 'spectrum', 'intrapulse', 'compare',
            'cep-check')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

GRID_ALIASES = {
    'paper-table': photon_stats.REFERENCE_MEAN_PHOTONS,
}
ENERGY_ALIASES = {
    'paper-table': photon_stats.REFERENCE_ENERGIES_ZJ,
    'intrapulse-table': gabor_analysis.INTRAPULSE_ENERGY_GRID_ZJ,
}

# few-cycle pulses centered at 750 nm
FEW_CYCLE_CARRIER = 0.3997
FEW_CYCLE_FWHM = 3.0

PRESETS = {
    'fig3': {
        'command': 'scaling',
        'kind': 'poisson,bose-einstein,mixture',
        'coherent_fraction': 0.5,
        'grid': 'paper-table',
        'shots': 100000,
    },
    'fig4': {
        'command': 'intrapulse',
        'coherence_mode': 'intensity_linked',
        'a0': 1.0,
        'decoherence': 0.5,
        'classical_noise': 0.0,
        'energies_zj': 'intrapulse-table',
        'shots_per_point': 1000,
    },
    'figS3': {
        'command': 'compare',
        'kind': 'poisson',
        'grid': list(photon_stats.REFERENCE_MEAN_PHOTONS)
        + [5000.0, 10000.0],
        'shots': 100000,
    },
    'figS4': {
        'command': 'trace',
        'peak_mean_photons': trace_sim.YOCTOJOULE_PEAK_PHOTONS,
        'cep_stable': False,
        'classical_noise': 0.05,
        'noise_floor': 0.0,
        'shots_per_point': 2000,
    },
    'fig1-cep': {
        'command': 'cep-check',
        'carrier_freq': FEW_CYCLE_CARRIER,
        'fwhm': FEW_CYCLE_FWHM,
        'cep_stable': False,
        'delay_min': -10.0,
        'delay_max': 10.0,
        'delay_step': 0.05,
        'cep_draws': 10000,
    },
    'oscillator': {
        'command': 'trace',
        'peak_mean_photons': trace_sim.OSCILLATOR_PEAK_PHOTONS,
        'cep_stable': False,
        'classical_noise': 0.05,
        'shots_per_point': 2000,
    },
}
PRESETS['yoctojoule'] = PRESETS['figS4']


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one run.

    ``detection_freq`` of None means the test carrier frequency.
    """

    command: str = 'scaling'
    output_dir: str = '.'
    seed: int = 0
    emit_plots: bool = False
    # scaling sweeps
    kind: tuple = (photon_stats.POISSON,)
    coherent_fraction: float = 1.0
    grid: tuple = photon_stats.REFERENCE_MEAN_PHOTONS
    shots: int = ghost_mc.DEFAULT_SHOTS
    sampling_mean: float = ghost_mc.DEFAULT_SAMPLING_MEAN
    # pulses
    carrier_freq: float = field_model.OSCILLATOR_CARRIER
    fwhm: float = field_model.OSCILLATOR_FWHM
    test_cep: float = 0.0
    sampling_cep: float = 0.0
    cep_stable: bool = True
    test_field: float = 1.0
    sampling_field: float = 1.0
    peak_mean_photons: float = trace_sim.OSCILLATOR_PEAK_PHOTONS
    # detection
    lo_order: int = 2
    mix_order: int = 2
    detection_freq: float = None
    classical_noise: float = 0.05
    noise_floor: float = 0.0
    shots_per_point: int = 1000
    delay_min: float = trace_sim.DEFAULT_DELAY_MIN
    delay_max: float = trace_sim.DEFAULT_DELAY_MAX
    delay_step: float = trace_sim.DEFAULT_DELAY_STEP
    # intrapulse coherence
    coherence_mode: str = gabor_analysis.CONSTANT
    a0: float = 1.0
    decoherence: float = 0.0
    energies_zj: tuple = gabor_analysis.INTRAPULSE_ENERGY_GRID_ZJ
    # analysis
    cep_draws: int = 10000
    smoothing: int = 0
    scan_path: str = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(
                'unknown command {!r}, expected one of {}'.format(
                    self.command, ', '.join(COMMANDS)), key='command')
        streams.validate_seed(self.seed)
        for kind in self.kind:
            if kind not in photon_stats.KINDS:
                raise ConfigurationError(
                    'unknown distribution {!r}'.format(kind), key='kind')
        if not self.kind:
            raise ConfigurationError('no distribution given', key='kind')
        if not 0.0 <= self.coherent_fraction <= 1.0:
            raise ConfigurationError(
                'must lie in [0, 1], got {}'.format(self.coherent_fraction),
                key='coherent_fraction')
        if not self.grid:
            raise ConfigurationError('the <n> grid is empty', key='grid')
        if self.shots < 1:
            raise ConfigurationError('must be >= 1', key='shots')
        if not self.sampling_mean > 0:
            raise ConfigurationError('must be > 0', key='sampling_mean')
        for key in ('test_field', 'sampling_field'):
            if not getattr(self, key) >= 0:
                raise ConfigurationError('must be >= 0', key=key)
        if not self.peak_mean_photons >= 0:
            raise ConfigurationError('must be >= 0', key='peak_mean_photons')
        if self.detection_freq is not None and not self.detection_freq > 0:
            raise ConfigurationError('must be > 0', key='detection_freq')
        if not self.delay_max > self.delay_min:
            raise ConfigurationError('must exceed delay_min', key='delay_max')
        if not self.delay_step > 0:
            raise ConfigurationError('must be > 0', key='delay_step')
        if self.cep_draws < 1:
            raise ConfigurationError('must be >= 1', key='cep_draws')
        if self.smoothing < 0:
            raise ConfigurationError('must be >= 0', key='smoothing')
        if any(energy < 0 for energy in self.energies_zj):
            raise ConfigurationError('energies must be >= 0',
                                     key='energies_zj')
        # the owning types check the remaining ranges
        self.test_pulse()
        self.sampling_pulse()
        self.detection()
        self.coherence()

    def test_pulse(self):
        return PulseSpec(self.carrier_freq, self.fwhm, self.test_field,
                         self.test_cep, self.cep_stable,
                         self.peak_mean_photons)

    def sampling_pulse(self):
        return PulseSpec(self.carrier_freq, self.fwhm, self.sampling_field,
                         self.sampling_cep, self.cep_stable,
                         self.sampling_mean)

    def detection(self):
        detection_freq = self.detection_freq
        if detection_freq is None:
            detection_freq = self.carrier_freq
        return DetectionSpec(self.lo_order, self.mix_order, detection_freq,
                             self.classical_noise, self.noise_floor,
                             self.shots_per_point, self.seed)

    def coherence(self):
        return CoherenceProfile(self.coherence_mode, self.a0,
                                self.decoherence)

    def delays(self):
        return trace_sim.default_delays(self.delay_min, self.delay_max,
                                        self.delay_step)

    def as_dict(self):
        """Plain mapping for the manifest, lists instead of tuples."""
        resolved = dataclasses.asdict(self)
        for key, value in resolved.items():
            if isinstance(value, tuple):
                resolved[key] = list(value)
        return resolved


CONFIG_KEYS = tuple(config_field.name
                    for config_field in dataclasses.fields(RunConfig))

_INT_KEYS = {'seed', 'shots', 'lo_order', 'mix_order', 'shots_per_point',
             'cep_draws', 'smoothing'}
_BOOL_KEYS = {'emit_plots', 'cep_stable'}
_STR_KEYS = {'command', 'output_dir', 'coherence_mode'}
_OPTIONAL_STR_KEYS = {'scan_path'}
_OPTIONAL_FLOAT_KEYS = {'detection_freq'}
_TRUE = {'true', 'yes', 'on', '1'}
_FALSE = {'false', 'no', 'off', '0'}


def _type_error(key, value, expected):
    return ConfigurationError(
        'expected {}, got {!r}'.format(expected, value), key=key)


def _to_int(key, value):
    if isinstance(value, bool):
        raise _type_error(key, value, 'an integer')
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
        # YAML 1.1 and argparse both leave 1e5 as a string
        try:
            value = float(value)
        except ValueError:
            raise _type_error(key, value, 'an integer')
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, int):
        return value
    raise _type_error(key, value, 'an integer')


def _to_float(key, value):
    if isinstance(value, bool):
        raise _type_error(key, value, 'a number')
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            pass
    raise _type_error(key, value, 'a number')


def _to_bool(key, value):
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in _TRUE | _FALSE:
        return value.strip().lower() in _TRUE
    raise _type_error(key, value, 'true or false')


def _to_floats(key, value, aliases):
    if isinstance(value, str):
        text = value.strip()
        if text in aliases:
            return tuple(float(item) for item in aliases[text])
        value = [item for item in text.split(',') if item.strip()]
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)):
        raise _type_error(key, value, 'a list of numbers or one of {}'.format(
            ', '.join(sorted(aliases))))
    return tuple(_to_float(key, item) for item in value)


def _to_kinds(key, value):
    if isinstance(value, str):
        value = value.split(',')
    if not isinstance(value, (list, tuple)):
        raise _type_error(key, value, 'a distribution name or list of names')
    return tuple(str(item).strip() for item in value)


def coerce_value(key, value):
    """Convert a raw config or flag value to the type of ``key``.

    Raises
    ------
    ConfigurationError
        If ``key`` is unknown or ``value`` has the wrong type.
    """
    if key not in CONFIG_KEYS:
        raise ConfigurationError('unknown configuration key', key=key)
    if key in _INT_KEYS:
        return _to_int(key, value)
    if key in _BOOL_KEYS:
        return _to_bool(key, value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise _type_error(key, value, 'a string')
        return value
    if key in _OPTIONAL_STR_KEYS:
        if value is None or (isinstance(value, str)
                             and value.lower() in ('', 'none')):
            return None
        if not isinstance(value, str):
            raise _type_error(key, value, 'a path')
        return value
    if key in _OPTIONAL_FLOAT_KEYS:
        if value is None or (isinstance(value, str)
                             and value.lower() in ('none', 'carrier')):
            return None
        return _to_float(key, value)
    if key == 'kind':
        return _to_kinds(key, value)
    if key == 'grid':
        return _to_floats(key, value, GRID_ALIASES)
    if key == 'energies_zj':
        return _to_floats(key, value, ENERGY_ALIASES)
    return _to_float(key, value)


def load_config_file(config_path):
    """Read a flat YAML mapping of config keys."""
    try:
        with open(config_path, encoding='utf-8') as stream:
            loaded = yaml.safe_load(stream)
    except OSError as error:
        raise ConfigurationError(str(error), key='config')
    except yaml.YAMLError as error:
        raise ConfigurationError(
            'not valid YAML: {}'.format(error), key='config')
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ConfigurationError('must contain a mapping of keys',
                                 key='config')
    return loaded


def build_parser():
    """Argument parser with one flag per config key."""
    parser = argparse.ArgumentParser(
        prog='fieldoscopysim',
        description='Simulate field-resolved detection of weak light pulses.')
    parser.add_argument('command', nargs='?', choices=COMMANDS)
    parser.add_argument('--config', help='flat YAML file of config keys')
    parser.add_argument('--preset', choices=sorted(PRESETS))
    parser.add_argument('--version', action='version', version=__version__)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true')
    verbosity.add_argument('-q', '--quiet', action='store_true')
    for key in CONFIG_KEYS:
        if key == 'command':
            continue
        flags = ['--' + key.replace('_', '-')]
        if key == 'scan_path':
            flags.append('--scan')
        if key in _BOOL_KEYS:
            parser.add_argument(*flags, dest=key, nargs='?', const='true',
                                default=None)
        else:
            parser.add_argument(*flags, dest=key, default=None)
    return parser


def parse_config(argv=None):
    """Resolve the run configuration from a preset, a file and flags.

    Parameters
    ----------
    argv : list of str, optional
        Command-line arguments, defaulting to ``sys.argv[1:]``.

    Returns
    -------
    config : RunConfig
    log_level : int

    Raises
    ------
    ConfigurationError
        For unknown keys, values of the wrong type or out of range.
    """
    args = build_parser().parse_args(argv)
    resolved = {}
    if args.preset is not None:
        resolved.update(PRESETS[args.preset])
    if args.config is not None:
        resolved.update(load_config_file(args.config))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    if args.command is not None:
        resolved['command'] = args.command

    values = {key: coerce_value(key, value) for key, value in resolved.items()}
    config = RunConfig(**values)

    if args.verbose:
        log_level = logging.DEBUG
    elif args.quiet:
        log_level = logging.WARNING
    else:
        log_level = logging.INFO
    return config, log_level


def _emit_scaling(curves, output_dir, name, emit_plots):
    path = os.path.join(output_dir, name + '.csv')
    ghost_mc.write_scaling_csv(curves, path)
    files = [name + '.csv']
    if emit_plots:
        series = {}
        for curve in curves:
            series['{} mean'.format(curve.kind)] = curve.column('norm_mean')
            series['{} std'.format(curve.kind)] = curve.column('norm_std')
        if len({len(curve.points) for curve in curves}) == 1 and \
                results_io.save_line_plot(
                    curves[0].mean_photons, series, 'mean photon number',
                    'normalized value', os.path.join(output_dir, name + '.svg'),
                    log_x=True):
            files.append(name + '.svg')
    return files


def _plot_columns(output_dir, name, x, series, xlabel, ylabel):
    path = os.path.join(output_dir, name + '.svg')
    if results_io.save_line_plot(x, series, xlabel, ylabel, path):
        return [name + '.svg']
    return []


def run_scaling(config):
    curves = []
    for kind in config.kind:
        base = ghost_mc.McConfig(
            PhotonDistribution.poisson(config.sampling_mean),
            PhotonDistribution(kind, 1.0, config.coherent_fraction),
            config.shots, config.seed)
        curves.append(ghost_mc.scaling_sweep(base, config.grid))
    return _emit_scaling(curves, config.output_dir, 'scaling',
                         config.emit_plots)


def _emit_spectra(scan, config):
    files = []
    for which in (trace_sim.MEAN, trace_sim.STD):
        spec = trace_sim.spectrum(scan, which, config.smoothing)
        name = 'spectrum_' + which
        trace_sim.write_spectrum_csv(spec, os.path.join(config.output_dir,
                                                        name + '.csv'))
        files.append(name + '.csv')
        logger.info('%s spectrum peaks at %.4f PHz', which,
                    trace_sim.spectral_peak(spec))
        if config.emit_plots:
            files += _plot_columns(config.output_dir, name, spec.freqs,
                                   {which: spec.magnitude}, 'frequency (PHz)',
                                   'magnitude')
    return files


def run_trace(config):
    statistics = PhotonDistribution(config.kind[0], 0.0,
                                    config.coherent_fraction)
    scan = trace_sim.simulate_scan(config.test_pulse(),
                                   config.sampling_pulse(), config.detection(),
                                   config.delays(),
                                   test_statistics=statistics)
    trace_sim.write_scan_csv(scan, os.path.join(config.output_dir, 'scan.csv'))
    files = ['scan.csv']
    if config.emit_plots:
        files += _plot_columns(config.output_dir, 'scan', scan.delays,
                               {'mean': scan.mean_signal,
                                'std': scan.std_signal},
                               'delay (fs)', 'signal')
    return files + _emit_spectra(scan, config)


def run_spectrum(config):
    if config.scan_path is None:
        raise ConfigurationError('the spectrum command needs a scan.csv',
                                 key='scan_path')
    scan = trace_sim.load_scan_csv(config.scan_path)
    return _emit_spectra(scan, config)


def run_intrapulse(config):
    test = config.test_pulse()
    sampling = config.sampling_pulse()
    det = config.detection()
    delays = config.delays()
    windows = gabor_analysis.default_windows(test)
    energies = [energy * photon_stats.ZEPTOJOULE
                for energy in config.energies_zj]
    curves = gabor_analysis.intrapulse_sweep(
        test, sampling, det, energies, windows, config.coherence(), delays)
    a_hats = {}
    for window in windows:
        try:
            a_hats[window.label] = gabor_analysis.estimate_window_fraction(
                curves[window.label], window, test, sampling, det, energies,
                delays)
        except (ConfigurationError, EstimationError) as error:
            logger.warning('no coherent fraction for window %s: %s',
                           window.label, error)
            continue
        logger.info('window %s: coherent fraction %.2f', window.label,
                    a_hats[window.label])
    gabor_analysis.write_gabor_csv(curves, windows,
                                   os.path.join(config.output_dir,
                                                'gabor.csv'), a_hats)
    files = ['gabor.csv']
    if config.emit_plots:
        for window in windows:
            curve = curves[window.label]
            files += _plot_columns(
                config.output_dir, 'gabor_' + window.label,
                curve.mean_photons, {'mean': curve.column('norm_mean'),
                                     'std': curve.column('norm_std')},
                'mean photon number', 'normalized value')
    return files


def run_compare(config):
    field_curve, intensity_curve = trace_sim.detection_comparison(
        config.kind[0], config.grid, config.shots, config.seed,
        config.coherent_fraction, config.sampling_mean)
    return (_emit_scaling([field_curve], config.output_dir, 'compare_field',
                          config.emit_plots)
            + _emit_scaling([intensity_curve], config.output_dir,
                            'compare_intensity', config.emit_plots))


def run_cep_check(config):
    test = config.test_pulse()
    sampling = config.sampling_pulse()
    detection = config.detection()
    delays = config.delays()
    stabilized = field_model.heterodyne_trace(test, sampling, detection,
                                              delays)
    averaged = field_model.cep_averaged_trace(
        test, sampling, detection, delays, config.cep_draws,
        rng=streams.derive_rng(config.seed, 'cep'))
    results_io.save_table(results_io.gen_table([delays, stabilized, averaged]),
                          results_io.CEP_HEADER,
                          os.path.join(config.output_dir, 'cep.csv'))
    peak = field_model.trace_peak(stabilized)
    if peak > 0:
        logger.info('averaged/stabilized peak ratio %.4f',
                    field_model.trace_peak(averaged) / peak)
    files = ['cep.csv']
    if config.emit_plots:
        files += _plot_columns(config.output_dir, 'cep', delays,
                               {'stabilized': stabilized,
                                'averaged': averaged},
                               'delay (fs)', 'signal')
    return files


RUNNERS = {
    'scaling': run_scaling,
    'trace': run_trace,
    'spectrum': run_spectrum,
    'intrapulse': run_intrapulse,
    'compare': run_compare,
    'cep-check': run_cep_check,
}


def run(config):
    """Execute the configured experiment and write its outputs.

    Returns
    -------
    list of str
        Names of the files written, manifest included.
    """
    try:
        os.makedirs(config.output_dir, exist_ok=True)
    except OSError as error:
        raise ConfigurationError(str(error), key='output_dir')
    logger.info('running %s with seed %d', config.command, config.seed)
    files = RUNNERS[config.command](config)
    results_io.write_manifest(config.output_dir, config.command,
                              config.as_dict(), config.seed, __version__,
                              files)
    return files + [results_io.MANIFEST_NAME]


def main(argv=None):
    """Run the command line and return the exit status."""
    try:
        config, log_level = parse_config(argv)
        logging.basicConfig(level=log_level,
                            format='%(levelname)s %(name)s: %(message)s')
        run(config)
    except ConfigurationError as error:
        print('fieldoscopysim: configuration error: {}'.format(error),
              file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as error:
        print('fieldoscopysim: numerical error: {}'.format(error),
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
