"""Stochastic delay scans and their spectra.

A scan combines the classical carrier of ``field_model`` with the shot
statistics of ``ghost_mc``. At each delay the test pulse's mean photon
number follows its intensity envelope, every shot draws an amplitude
2 sqrt(n_SHG) sqrt(n_SFG), multiplies it by the carrier and by classical
noise, and the per-delay mean and standard deviation are recorded.

The amplitude of a stochastic scan is set by the photon numbers, not by
``PulseSpec.field_amplitude``.
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndimage
import scipy.stats as stats

from fieldoscopysim import field_model, ghost_mc, photon_stats, results_io, \
    streams
from fieldoscopysim.errors import ConfigurationError, NumericError
from fieldoscopysim.field_model import DetectionSpec, PulseSpec
from fieldoscopysim.photon_stats import PhotonDistribution

logger = logging.getLogger(__name__)

DEFAULT_DELAY_MIN = -300.0
DEFAULT_DELAY_MAX = 300.0
DEFAULT_DELAY_STEP = 0.5

OSCILLATOR_PEAK_PHOTONS = 6.42e6
YOCTOJOULE_PEAK_PHOTONS = 0.0045

MEAN = 'mean'
STD = 'std'


def default_delays(delay_min=DEFAULT_DELAY_MIN, delay_max=DEFAULT_DELAY_MAX,
                   step=DEFAULT_DELAY_STEP):
    """Uniform delay grid in fs, both ends included."""
    if not step > 0 or not delay_max > delay_min:
        raise ConfigurationError(
            'need delay_max > delay_min and a positive step', key='delay_step')
    count = int(round((delay_max - delay_min) / step)) + 1
    return delay_min + step * np.arange(count)


DEFAULT_DELAYS = default_delays()


@dataclass(frozen=True, eq=False)
class ScanResult:
    """Mean and standard deviation of the signal at each delay."""

    delays: np.ndarray
    mean_signal: np.ndarray
    std_signal: np.ndarray
    config_digest: str = ''

    def __post_init__(self):
        if not (len(self.delays) == len(self.mean_signal)
                == len(self.std_signal)):
            raise ConfigurationError('scan columns must have equal lengths')
        if np.any(np.asarray(self.std_signal) < 0):
            raise ConfigurationError('standard deviations must be >= 0')


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Magnitude of a trace's Fourier transform, frequencies in PHz."""

    freqs: np.ndarray
    magnitude: np.ndarray


@dataclass(frozen=True)
class Scenario:
    """The pulses and detection channel of an experiment."""

    test: PulseSpec
    sampling: PulseSpec
    detection: DetectionSpec


def oscillator_scenario():
    """1030 nm, 150 fs, CEP-unstable pulses in the classical regime."""
    return Scenario(
        test=PulseSpec(cep_stable=False, mean_photons=OSCILLATOR_PEAK_PHOTONS),
        sampling=PulseSpec(cep_stable=False,
                           mean_photons=ghost_mc.DEFAULT_SAMPLING_MEAN),
        detection=DetectionSpec(classical_noise=0.05, shots_per_point=2000))


def yoctojoule_scenario():
    """The oscillator scenario attenuated to 0.0045 photons per test pulse."""
    scenario = oscillator_scenario()
    return dataclasses.replace(
        scenario,
        test=dataclasses.replace(scenario.test,
                                 mean_photons=YOCTOJOULE_PEAK_PHOTONS),
        detection=DetectionSpec(classical_noise=0.05, noise_floor=0.0,
                                shots_per_point=2000))


def config_digest(**parts):
    """SHA-256 of the canonical JSON form of a scan configuration."""
    canonical = {}
    for name, part in parts.items():
        if dataclasses.is_dataclass(part):
            part = dataclasses.asdict(part)
        elif isinstance(part, np.ndarray):
            part = part.tolist()
        canonical[name] = part
    text = json.dumps(canonical, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def cep_fluctuates(test, sampling, det):
    """True when shot-to-shot CEP jitter survives in the heterodyne phase."""
    return (det.mix_order != det.lo_order
            and not (test.cep_stable and sampling.cep_stable))


def carrier_moments(test, sampling, det, delays):
    """Mean and mean square of the carrier factor multiplying each shot.

    Shots at delay tau carry cos(2 pi f_d tau + residual). With surviving
    CEP jitter the phase is uniform over whole periods, so the moments
    are 0 and 1/2 at every delay.

    Returns
    -------
    mean_carrier, mean_square_carrier : numpy.ndarray
    """
    delays = field_model.validated_delays(delays)
    if cep_fluctuates(test, sampling, det):
        return np.zeros_like(delays), np.full_like(delays, 0.5)
    residual = field_model.cep_phase_residual(
        det.lo_order, det.mix_order, sampling.cep, test.cep)
    carrier = np.cos(2.0 * np.pi * det.detection_freq * delays + residual)
    return carrier, carrier ** 2


def simulate_scan(test, sampling, det, delays=None, coherence=None,
                  test_statistics=None, sampling_statistics=None,
                  workers=None):
    """Simulate a delay scan shot by shot.

    Parameters
    ----------
    test, sampling : PulseSpec
        ``test.mean_photons`` is the mean photon number at the peak of the
        test pulse, ``sampling.mean_photons`` that of the sampling pulse.
    det : DetectionSpec
    delays : array_like, optional
        Sorted delays in fs; defaults to ``DEFAULT_DELAYS``.
    coherence : CoherenceProfile, optional
        Gives the test pulse statistics at each delay from its mean and
        normalized intensity. Overrides ``test_statistics``.
    test_statistics, sampling_statistics : PhotonDistribution, optional
        Kind and coherent fraction of the two pulses; the means are taken
        from the pulses. Both default to Poisson.
    workers : int, optional
        Worker threads; defaults to ``QFS_THREADS``.

    Returns
    -------
    ScanResult

    Raises
    ------
    ConfigurationError
        If fewer than two shots per point are requested or the sampling
        pulse has no photons.
    """
    delays = field_model.validated_delays(
        DEFAULT_DELAYS if delays is None else delays)
    if det.shots_per_point < 2:
        raise ConfigurationError(
            'a standard deviation needs at least two shots',
            key='shots_per_point')
    if not sampling.mean_photons > 0:
        raise ConfigurationError('the sampling pulse must contain photons',
                                 key='sampling_mean')
    if test_statistics is None:
        test_statistics = PhotonDistribution.poisson(0.0)
    if sampling_statistics is None:
        sampling_statistics = PhotonDistribution.poisson(0.0)
    sampling_dist = sampling_statistics.with_mean(sampling.mean_photons)

    intensities = field_model.intensity_envelope(test, delays)
    residual = field_model.cep_phase_residual(
        det.lo_order, det.mix_order, sampling.cep, test.cep)
    drift = det.mix_order - det.lo_order
    fluctuating = cep_fluctuates(test, sampling, det)
    shots = det.shots_per_point

    def run_delay(index):
        delay = delays[index]
        intensity = float(intensities[index])
        mean = test.mean_photons * intensity
        if coherence is not None:
            test_dist = coherence.distribution(mean, intensity)
        else:
            test_dist = test_statistics.with_mean(mean)
        rng = streams.derive_rng(det.seed, 'delay', index)
        amplitudes = ghost_mc.draw_amplitudes(sampling_dist, test_dist, shots,
                                              rng)
        phase = 2.0 * np.pi * det.detection_freq * delay + residual
        if fluctuating:
            phase = phase + drift * rng.uniform(-np.pi, np.pi, shots)
        signal = amplitudes * np.cos(phase)
        if det.classical_noise > 0:
            signal = signal * (1.0 + det.classical_noise
                               * rng.standard_normal(shots))
        if det.noise_floor > 0:
            signal = signal + det.noise_floor * rng.standard_normal(shots)
        return float(np.mean(signal)) + 0.0, float(np.std(signal, ddof=1))

    logger.info('scanning %d delays with %d shots each', len(delays), shots)
    results = streams.parallel_map(run_delay, range(len(delays)), workers)
    digest = config_digest(test=test, sampling=sampling, detection=det,
                           delays=delays, coherence=coherence,
                           test_statistics=test_statistics,
                           sampling_statistics=sampling_statistics)
    return ScanResult(delays, np.array([mean for mean, _ in results]),
                      np.array([std for _, std in results]), digest)


def spectrum(scan, which=MEAN, smoothing=0):
    """Fourier magnitude of the mean or standard-deviation trace.

    Parameters
    ----------
    scan : ScanResult
        Must have a uniform delay grid.
    which : {'mean', 'std'}
        Trace to transform.
    smoothing : int, optional
        Width in bins of a moving average applied to the magnitude; 0 or
        1 leaves it unsmoothed.

    Returns
    -------
    Spectrum
        |DFT| / N from 0 to the Nyquist frequency.
    """
    if which == MEAN:
        values = np.asarray(scan.mean_signal, dtype=float)
    elif which == STD:
        values = np.asarray(scan.std_signal, dtype=float)
    else:
        raise ConfigurationError(
            'expected mean or std, got {!r}'.format(which), key='which')
    step = field_model.delay_step(scan.delays)
    magnitude = np.abs(np.fft.rfft(values)) / values.size
    freqs = np.fft.rfftfreq(values.size, d=step)
    if isinstance(smoothing, bool) or int(smoothing) != smoothing \
            or smoothing < 0:
        raise ConfigurationError(
            'must be a nonnegative integer, got {!r}'.format(smoothing),
            key='smoothing')
    if smoothing > 1:
        if smoothing > magnitude.size:
            logger.warning('smoothing width %d exceeds the %d spectrum bins',
                           smoothing, magnitude.size)
        magnitude = ndimage.uniform_filter1d(magnitude, size=int(smoothing),
                                             mode='nearest')
    return Spectrum(freqs, magnitude)


def spectral_peak(spec, fmin=0.0, fmax=np.inf):
    """Frequency of the largest magnitude with fmin < f <= fmax."""
    band = (spec.freqs > fmin) & (spec.freqs <= fmax)
    if not np.any(band):
        raise ConfigurationError(
            'no spectrum bins between {} and {} PHz'.format(fmin, fmax))
    index = np.flatnonzero(band)[np.argmax(spec.magnitude[band])]
    return float(spec.freqs[index])


def envelope_correlation(scan):
    """Pearson correlation between sigma(tau) and |mean(tau)|.

    Raises
    ------
    NumericError
        If either trace is constant.
    """
    std = np.asarray(scan.std_signal, dtype=float)
    magnitude = np.abs(np.asarray(scan.mean_signal, dtype=float))
    if np.all(std == std[0]) or np.all(magnitude == magnitude[0]):
        raise NumericError('correlation of a constant trace is undefined')
    return float(stats.pearsonr(std, magnitude)[0])


def detection_comparison(kind, mean_grid, shots, seed, coherent_fraction=1.0,
                         sampling_mean=ghost_mc.DEFAULT_SAMPLING_MEAN,
                         workers=None):
    """Scaling curves of field detection and of direct photon counting.

    The field curve is ``ghost_mc.scaling_sweep``. The intensity curve
    uses the test photon count n itself as the signal; its mean is
    normalized by <n> (not sqrt(<n>)) without anchoring, its standard
    deviation is anchored at the largest <n>.

    Returns
    -------
    field_curve, intensity_curve : ScalingCurve
    """
    grid = ghost_mc.validated_grid(mean_grid)
    test_law = PhotonDistribution(kind, 1.0, coherent_fraction)
    base = ghost_mc.McConfig(PhotonDistribution.poisson(sampling_mean),
                             test_law, shots, seed)
    field_curve = ghost_mc.scaling_sweep(base, grid, workers)

    def count_point(indexed):
        index, mean = indexed
        rng = streams.derive_rng(seed, 'intensity', index)
        counts = photon_stats.sample_many(test_law.with_mean(mean), shots,
                                          rng).astype(float)
        return float(np.mean(counts)), float(np.std(counts, ddof=1))

    results = streams.parallel_map(count_point, enumerate(grid.tolist()),
                                   workers)
    intensity_curve = ghost_mc.normalize_curve(
        grid, [mean for mean, _ in results], [std for _, std in results],
        mean_exponent=1.0, anchor_mean=False, kind=test_law.kind,
        coherent_fraction=test_law.effective_fraction, shots=shots, seed=seed)
    return field_curve, intensity_curve


def write_scan_csv(scan, output_path):
    """Save a scan in the ``scan.csv`` schema."""
    rows = results_io.gen_table([scan.delays, scan.mean_signal,
                                 scan.std_signal])
    results_io.save_table(rows, results_io.SCAN_HEADER, output_path)


def load_scan_csv(scan_path):
    """Read a ``scan.csv`` written by ``write_scan_csv``."""
    columns = results_io.load_columns(scan_path, results_io.SCAN_HEADER)
    return ScanResult(columns['delay_fs'], columns['mean_signal'],
                      columns['std_signal'])


def write_spectrum_csv(spec, output_path):
    """Save a spectrum in the ``spectrum.csv`` schema."""
    rows = results_io.gen_table([spec.freqs, spec.magnitude])
    results_io.save_table(rows, results_io.SPECTRUM_HEADER, output_path)
