"""Classical heterodyne field model of a delay scan.

The sampling pulse (field E_S, CEP phi_S) generates a local oscillator of
order m and, mixed with the test pulse (E_T, phi_T), a nonlinear field of
order n. Their interference, filtered at the detection frequency f_d,
gives the noiseless trace

    I(tau) = E_S^(m+n-1) * E_T * env(tau) * cos(2 pi f_d tau + phi_T - (m-n+1) phi_S)

where env is the Gaussian field envelope of the test pulse. Frequencies
are in PHz and delays in fs, so 2 pi f tau is a phase in radians.

For m = n the CEPs of the two pulses enter as phi_T - phi_S and any
common CEP fluctuation cancels. Other orders leave a residual that
averages the trace towards zero over CEP-unstable pulses.
"""

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.constants as sc
import scipy.stats as stats

from fieldoscopysim import results_io, streams
from fieldoscopysim.errors import ConfigurationError, NumericError

logger = logging.getLogger(__name__)

OSCILLATOR_WAVELENGTH = 1030e-9
OSCILLATOR_CARRIER = sc.c / OSCILLATOR_WAVELENGTH * 1e-15
OSCILLATOR_FWHM = 150.0

_FOUR_LN2 = 4.0 * math.log(2.0)


def _positive(value, key):
    if not (math.isfinite(value) and value > 0):
        raise ConfigurationError(
            'must be finite and > 0, got {}'.format(value), key=key)


def _nonnegative(value, key):
    if not (math.isfinite(value) and value >= 0):
        raise ConfigurationError(
            'must be finite and >= 0, got {}'.format(value), key=key)


def _order(value, key):
    if (isinstance(value, bool) or not isinstance(value, (int, np.integer))
            or value < 1):
        raise ConfigurationError(
            'must be a positive integer, got {!r}'.format(value), key=key)


@dataclass(frozen=True)
class PulseSpec:
    """A Gaussian pulse.

    Parameters
    ----------
    carrier_freq : float
        Carrier frequency in PHz.
    fwhm : float
        FWHM of the intensity envelope in fs.
    field_amplitude : float
        Peak field strength, arbitrary units.
    cep : float
        Carrier-envelope phase in radians.
    cep_stable : bool
        Whether the CEP is the same on every shot.
    mean_photons : float
        Mean photon number at the peak of the pulse, used by the
        stochastic scans.
    """

    carrier_freq: float = OSCILLATOR_CARRIER
    fwhm: float = OSCILLATOR_FWHM
    field_amplitude: float = 1.0
    cep: float = 0.0
    cep_stable: bool = True
    mean_photons: float = 0.0

    def __post_init__(self):
        _positive(self.carrier_freq, 'carrier_freq')
        _positive(self.fwhm, 'fwhm')
        _nonnegative(self.field_amplitude, 'field_amplitude')
        if not math.isfinite(self.cep):
            raise ConfigurationError('must be finite', key='cep')
        _nonnegative(self.mean_photons, 'mean_photons')


@dataclass(frozen=True)
class DetectionSpec:
    """Detection channel and noise of a scan.

    Parameters
    ----------
    lo_order : int
        Order m of the local oscillator in the sampling field.
    mix_order : int
        Order n of the nonlinear mixing.
    detection_freq : float
        Frequency f_d selected by the bandpass filter, in PHz.
    classical_noise : float
        Relative multiplicative noise kappa on every shot.
    noise_floor : float
        Standard deviation of additive noise, present with or without
        the test pulse.
    shots_per_point : int
        Shots averaged at each delay.
    seed : int
        Unsigned 64-bit base seed.
    """

    lo_order: int = 2
    mix_order: int = 2
    detection_freq: float = OSCILLATOR_CARRIER
    classical_noise: float = 0.05
    noise_floor: float = 0.0
    shots_per_point: int = 1000
    seed: int = 0

    def __post_init__(self):
        _order(self.lo_order, 'lo_order')
        _order(self.mix_order, 'mix_order')
        _positive(self.detection_freq, 'detection_freq')
        _nonnegative(self.classical_noise, 'classical_noise')
        _nonnegative(self.noise_floor, 'noise_floor')
        _order(self.shots_per_point, 'shots_per_point')
        streams.validate_seed(self.seed)

    @property
    def balanced(self):
        """True when common CEP fluctuations cancel (m = n)."""
        return self.lo_order == self.mix_order


def validated_delays(delays):
    """Delays as a float array, checked to be finite and ascending."""
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or delays.size == 0:
        raise ConfigurationError('delays must be a nonempty 1D grid',
                                 key='delays')
    if not np.all(np.isfinite(delays)):
        raise ConfigurationError('delays must be finite', key='delays')
    if np.any(np.diff(delays) < 0):
        raise ConfigurationError('delays must be sorted ascending',
                                 key='delays')
    return delays


def delay_step(delays, rtol=1e-6):
    """Spacing of a uniform delay grid.

    Raises
    ------
    ConfigurationError
        If the grid has fewer than two points or is not uniform.
    """
    delays = validated_delays(delays)
    if delays.size < 2:
        raise ConfigurationError('a spectrum needs at least two delays',
                                 key='delays')
    steps = np.diff(delays)
    step = (delays[-1] - delays[0]) / (delays.size - 1)
    if not step > 0 or np.max(np.abs(steps - step)) > rtol * step:
        raise ConfigurationError('delay grid is not uniform', key='delays')
    return float(step)


def intensity_envelope(pulse, delays):
    """Gaussian intensity envelope with peak 1 and FWHM ``pulse.fwhm``."""
    delays = np.asarray(delays, dtype=float)
    return np.exp(-_FOUR_LN2 * delays ** 2 / pulse.fwhm ** 2)


def field_envelope(pulse, delays):
    """Gaussian field envelope, the square root of the intensity envelope."""
    delays = np.asarray(delays, dtype=float)
    return np.exp(-0.5 * _FOUR_LN2 * delays ** 2 / pulse.fwhm ** 2)


def _wrap(phase):
    return phase - 2.0 * np.pi * np.ceil((phase - np.pi) / (2.0 * np.pi))


def cep_phase_residual(m, n, phi_s, phi_t):
    """Heterodyne phase phi_T - (m - n + 1) phi_S, reduced to (-pi, pi].

    Accepts arrays of phases as well as scalars.
    """
    residual = _wrap(np.asarray(phi_t, dtype=float)
                     - (m - n + 1) * np.asarray(phi_s, dtype=float))
    if np.ndim(residual) == 0:
        return float(residual)
    return residual


def residual_phase_for_offset(m, n, phi_s, phi_t, delta):
    """Residual phase after adding a common CEP offset ``delta`` to both pulses.

    Shifting both CEPs by delta changes the residual by (n - m) delta.
    """
    shifted = (cep_phase_residual(m, n, phi_s, phi_t)
               + (n - m) * np.asarray(delta, dtype=float))
    shifted = _wrap(shifted)
    if np.ndim(shifted) == 0:
        return float(shifted)
    return shifted


def _trace_amplitude(test, sampling, det):
    order = det.lo_order + det.mix_order - 1
    return sampling.field_amplitude ** order * test.field_amplitude


def _carrier_phase(det, delays):
    return 2.0 * np.pi * det.detection_freq * delays


def heterodyne_trace(test, sampling, det, delays):
    """Noiseless heterodyne signal versus delay.

    Parameters
    ----------
    test, sampling : PulseSpec
        The test and sampling pulses.
    det : DetectionSpec
        Supplies the orders m, n and the detection frequency.
    delays : array_like
        Delays in fs, sorted ascending.

    Returns
    -------
    numpy.ndarray
        I(tau) at every delay.
    """
    delays = validated_delays(delays)
    residual = cep_phase_residual(det.lo_order, det.mix_order, sampling.cep,
                                  test.cep)
    return (_trace_amplitude(test, sampling, det)
            * field_envelope(test, delays)
            * np.cos(_carrier_phase(det, delays) + residual))


def cep_averaged_trace(test, sampling, det, delays, cep_draws, rng=None,
                       offsets=None):
    """Trace averaged over common CEP fluctuations of both pulses.

    Each draw adds the same offset delta, uniform in (-pi, pi], to the
    CEPs of the sampling and test pulses.

    Parameters
    ----------
    test, sampling : PulseSpec
    det : DetectionSpec
    delays : array_like
        Delays in fs, sorted ascending.
    cep_draws : int
        Number of offsets averaged over.
    rng : numpy.random.Generator, optional
        Source of the offsets. Defaults to a stream derived from
        ``det.seed``.
    offsets : array_like, optional
        Explicit offsets, replacing the random draws.

    Returns
    -------
    numpy.ndarray
    """
    _order(cep_draws, 'cep_draws')
    if det.balanced:
        return heterodyne_trace(test, sampling, det, delays)
    delays = validated_delays(delays)
    if offsets is not None and rng is not None:
        warnings.warn('Both rng and offsets were provided to '
                      'cep_averaged_trace. Defaulting to offsets.')
    if offsets is None:
        if rng is None:
            rng = streams.derive_rng(det.seed, 'cep')
        offsets = rng.uniform(-np.pi, np.pi, cep_draws)
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (cep_draws,):
        raise ConfigurationError(
            'expected {} offsets, got {}'.format(cep_draws, offsets.size),
            key='cep_draws')

    # cos(a + k d) averaged over d, with a the undisturbed phase
    drift = (det.mix_order - det.lo_order) * offsets
    mean_cos = float(np.mean(np.cos(drift)))
    mean_sin = float(np.mean(np.sin(drift)))
    phase = _carrier_phase(det, delays) + cep_phase_residual(
        det.lo_order, det.mix_order, sampling.cep, test.cep)
    logger.debug('CEP average over %d draws: <cos>=%.3g <sin>=%.3g',
                 cep_draws, mean_cos, mean_sin)
    return (_trace_amplitude(test, sampling, det)
            * field_envelope(test, delays)
            * (np.cos(phase) * mean_cos - np.sin(phase) * mean_sin))


def wedge_cep_scan(test, sampling, det, delays, test_ceps):
    """Traces for a series of test pulse CEPs, one row per CEP."""
    return np.array([heterodyne_trace(replace(test, cep=float(cep)), sampling,
                                      det, delays)
                     for cep in test_ceps])


def fit_power_law(x, y):
    """Exponent of a power law y = a x^k by a log-log least-squares fit.

    Parameters
    ----------
    x, y : array_like
        At least three positive values each.

    Returns
    -------
    float
        The fitted exponent k.

    Raises
    ------
    ConfigurationError
        If fewer than three points are given or the lengths differ.
    NumericError
        If any value is not positive or all x are equal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ConfigurationError('x and y must be 1D with the same length')
    if x.size < 3:
        raise ConfigurationError('a power-law fit needs at least 3 points')
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))
            and np.all(x > 0) and np.all(y > 0)):
        raise NumericError('power-law fits need finite positive values')
    if np.all(x == x[0]):
        raise NumericError('power-law fits need at least two distinct x')
    return float(stats.linregress(np.log(x), np.log(y)).slope)


def trace_peak(trace):
    """Largest absolute value of a trace."""
    return float(np.max(np.abs(trace)))


def dominant_frequency(delays, trace):
    """Frequency in PHz of the largest non-DC Fourier component of a trace."""
    step = delay_step(delays)
    magnitude = np.abs(np.fft.rfft(np.asarray(trace, dtype=float)))
    freqs = np.fft.rfftfreq(len(delays), d=step)
    if magnitude.size < 2:
        raise NumericError('trace too short for a spectrum')
    return float(freqs[1 + int(np.argmax(magnitude[1:]))])


def write_trace_csv(delays, trace, output_path):
    """Save a noiseless trace in the ``scan.csv`` schema (std 0)."""
    delays = validated_delays(delays)
    rows = results_io.gen_table([delays, np.asarray(trace, dtype=float),
                                 np.zeros_like(delays)])
    results_io.save_table(rows, results_io.SCAN_HEADER, output_path)
