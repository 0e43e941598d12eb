"""Intrapulse coherence analysis with Gaussian time windows.

Scans are taken over a sweep of test pulse energies. Each scan is
multiplied by Gaussian windows placed on the front, center and tail of
the pulse, and every window yields one point of a scaling curve per
energy. Comparing the windows' curves with the mixture model of
``photon_stats`` gives the coherent fraction of each part of the pulse.

The coherent fraction may vary across the pulse. ``CoherenceProfile``
models it as constant or as decreasing linearly with the instantaneous
intensity.
"""

import functools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.stats as stats

from fieldoscopysim import field_model, ghost_mc, photon_stats, results_io, \
    streams, trace_sim
from fieldoscopysim.errors import ConfigurationError, EstimationError
from fieldoscopysim.photon_stats import PhotonDistribution

logger = logging.getLogger(__name__)

CONSTANT = 'constant'
INTENSITY_LINKED = 'intensity_linked'
MODES = (CONSTANT, INTENSITY_LINKED)

MIN_WINDOW_MASS = 0.99
FRACTION_CANDIDATES = np.round(np.arange(101) / 100.0, 2)

# reference energies plus two more doublings, in zJ
INTRAPULSE_ENERGY_GRID_ZJ = photon_stats.REFERENCE_ENERGIES_ZJ + (
    6752.4, 13504.8)

_FOUR_LN2 = 4.0 * math.log(2.0)
_MOMENT_TABLE_FLOOR = 1e-6
_MOMENT_TABLE_PER_DECADE = 50
_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class GaborWindow:
    """A Gaussian window with peak 1.

    Parameters
    ----------
    center : float
        Delay of the window maximum in fs.
    fwhm : float
        Full width at half maximum in fs.
    label : str
    """

    center: float
    fwhm: float
    label: str = ''

    def __post_init__(self):
        if not math.isfinite(self.center):
            raise ConfigurationError('window center must be finite',
                                     key='window')
        if not (math.isfinite(self.fwhm) and self.fwhm > 0):
            raise ConfigurationError(
                'window FWHM must be > 0, got {}'.format(self.fwhm),
                key='window')


@dataclass(frozen=True)
class CoherenceProfile:
    """Coherent fraction A of the test pulse as a function of intensity.

    Parameters
    ----------
    mode : {'constant', 'intensity_linked'}
    a0 : float
        Coherent fraction at zero intensity (or everywhere, if constant).
    c : float
        Decoherence coefficient: A = clamp(a0 - c I, 0, 1) with I the
        intensity envelope normalized to peak 1.
    """

    mode: str = CONSTANT
    a0: float = 1.0
    c: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(
                'unknown coherence mode {!r}, expected one of {}'.format(
                    self.mode, ', '.join(MODES)), key='coherence_mode')
        if not 0.0 <= self.a0 <= 1.0:
            raise ConfigurationError(
                'must lie in [0, 1], got {}'.format(self.a0), key='a0')
        if not (math.isfinite(self.c) and self.c >= 0):
            raise ConfigurationError(
                'must be finite and >= 0, got {}'.format(self.c),
                key='decoherence')

    def fraction(self, intensity):
        """Coherent fraction at a normalized intensity (scalar or array)."""
        if self.mode == CONSTANT:
            fraction = np.full(np.shape(intensity), self.a0)
        else:
            fraction = np.clip(self.a0 - self.c * np.asarray(intensity),
                               0.0, 1.0)
        if np.ndim(fraction) == 0:
            return float(fraction)
        return fraction

    def distribution(self, mean, intensity):
        """Photon statistics with the given mean at the given intensity."""
        fraction = self.fraction(intensity)
        if fraction == 1.0:
            return PhotonDistribution.poisson(mean)
        if fraction == 0.0:
            return PhotonDistribution.bose_einstein(mean)
        return PhotonDistribution.mixture(mean, fraction)


def window_weights(window, delays):
    """w(tau) = exp(-4 ln2 (tau - center)^2 / fwhm^2)."""
    delays = np.asarray(delays, dtype=float)
    return np.exp(-_FOUR_LN2 * (delays - window.center) ** 2
                  / window.fwhm ** 2)


def window_mass(window, delays):
    """Fraction of the window's area that lies inside the delay range."""
    sigma = window.fwhm / _FWHM_PER_SIGMA
    return float(stats.norm.cdf(np.max(delays), window.center, sigma)
                 - stats.norm.cdf(np.min(delays), window.center, sigma))


def _check_overlap(window, delays):
    low, high = float(np.min(delays)), float(np.max(delays))
    if window.fwhm > high - low:
        if not low <= window.center <= high:
            raise ConfigurationError(
                'window {!r} is centered outside the scan'.format(
                    window.label), key='window')
        return
    mass = window_mass(window, delays)
    if mass < MIN_WINDOW_MASS:
        raise ConfigurationError(
            'only {:.3f} of window {!r} lies inside the scan'.format(
                mass, window.label), key='window')


def windowed_traces(scan, window):
    """Mean and standard-deviation traces multiplied by a Gaussian window.

    Parameters
    ----------
    scan : ScanResult
    window : GaborWindow

    Returns
    -------
    mean, std : numpy.ndarray

    Raises
    ------
    ConfigurationError
        If less than 99% of the window lies inside the scan. Windows
        wider than the scan only need their center inside it.
    """
    delays = np.asarray(scan.delays, dtype=float)
    _check_overlap(window, delays)
    weights = window_weights(window, delays)
    return (weights * np.asarray(scan.mean_signal, dtype=float),
            weights * np.asarray(scan.std_signal, dtype=float))


def default_windows(pulse):
    """Front, center and tail windows, each half as wide as the pulse."""
    width = pulse.fwhm / 2.0
    return (GaborWindow(-pulse.fwhm, width, 'front'),
            GaborWindow(0.0, width, 'center'),
            GaborWindow(pulse.fwhm, width, 'tail'))


def window_metrics(scan, window, mean_photons):
    """Scalar statistics of one window of a scan.

    Parameters
    ----------
    scan : ScanResult
    window : GaborWindow
    mean_photons : array_like
        Mean test photon number at each delay of the scan.

    Returns
    -------
    abscissa : float
        Window-weighted average of ``mean_photons``.
    metric_mean : float
        RMS of the windowed mean trace.
    metric_std : float
        Window-weighted average of the standard-deviation trace.
    """
    mean_trace, _ = windowed_traces(scan, window)
    weights = window_weights(window, scan.delays)
    total = np.sum(weights)
    abscissa = float(np.dot(weights, mean_photons) / total)
    metric_mean = float(np.sqrt(np.mean(mean_trace ** 2)))
    metric_std = float(np.dot(weights, scan.std_signal) / total)
    return abscissa, metric_mean, metric_std


def _peak_photons(test, energies):
    wavelength = photon_stats.carrier_wavelength(test.carrier_freq)
    return np.array([photon_stats.energy_to_mean_photons(energy, wavelength)
                     for energy in np.asarray(energies,
                                              dtype=float).ravel().tolist()])


def intrapulse_sweep(test, sampling, det, energies, windows=None,
                     coherence=None, delays=None, workers=None):
    """Per-window scaling curves over a sweep of test pulse energies.

    Parameters
    ----------
    test, sampling : PulseSpec
        ``test.mean_photons`` is replaced by the peak mean photon number
        of each energy.
    det : DetectionSpec
        Energy i runs with a seed derived from ``det.seed`` and i.
    energies : sequence of float
        Test pulse energies in joules.
    windows : sequence of GaborWindow, optional
        Defaults to ``default_windows(test)``.
    coherence : CoherenceProfile, optional
        Defaults to a constant coherent fraction of 1.
    delays : array_like, optional
        Defaults to ``trace_sim.DEFAULT_DELAYS``.
    workers : int, optional

    Returns
    -------
    dict
        Maps each window label to its ScalingCurve.
    """
    energies = np.asarray(energies, dtype=float).ravel()
    if energies.size == 0:
        raise ConfigurationError('the energy grid is empty', key='energies_zj')
    if windows is None:
        windows = default_windows(test)
    if not windows:
        raise ConfigurationError('no windows given', key='window')
    if len({window.label for window in windows}) != len(windows):
        raise ConfigurationError('window labels must be unique', key='window')
    if coherence is None:
        coherence = CoherenceProfile()
    delays = field_model.validated_delays(
        trace_sim.DEFAULT_DELAYS if delays is None else delays)
    for window in windows:
        _check_overlap(window, delays)

    intensities = field_model.intensity_envelope(test, delays)
    metrics = {window.label: [] for window in windows}
    peaks = _peak_photons(test, energies)
    for index, (energy, peak) in enumerate(zip(energies.tolist(),
                                               peaks.tolist())):
        point_det = replace(det, seed=streams.derive_seed(det.seed, 'energy',
                                                          index))
        scan = trace_sim.simulate_scan(replace(test, mean_photons=peak),
                                       sampling, point_det, delays,
                                       coherence=coherence, workers=workers)
        logger.info('energy %.6g J (peak <n> %.4g) scanned', energy, peak)
        for window in windows:
            metrics[window.label].append(
                window_metrics(scan, window, peak * intensities))

    curves = {}
    for window in windows:
        weights = window_weights(window, delays)
        fraction = float(np.dot(weights, coherence.fraction(intensities))
                         / np.sum(weights))
        abscissae, means, stds = zip(*metrics[window.label])
        curves[window.label] = ghost_mc.normalize_curve(
            abscissae, means, stds, kind=photon_stats.MIXTURE,
            coherent_fraction=fraction, shots=det.shots_per_point,
            seed=det.seed)
    return curves


@functools.lru_cache(maxsize=16)
def _sfg_moment_table(law, sampling_dist, upper):
    count = int(math.ceil(math.log10(upper / _MOMENT_TABLE_FLOOR)
                          * _MOMENT_TABLE_PER_DECADE)) + 1
    means = np.geomspace(_MOMENT_TABLE_FLOOR, upper, count)
    moments = np.array([ghost_mc.min_sqrt_moments(sampling_dist,
                                                  law.with_mean(mean))
                        for mean in means.tolist()])
    spread = np.maximum(moments[:, 1] - moments[:, 0] ** 2,
                        np.finfo(float).tiny)
    return np.log(means), np.log(moments[:, 0]), np.log(spread)


def _sfg_moments(table, means):
    """E[sqrt(n_SFG)] and Var[sqrt(n_SFG)] at many <n>.

    Both are interpolated in log-log from the table. The variance is
    tabulated on its own since it is a small difference of large moments
    once <n> >> 1.
    """
    log_means, log_sqrt, log_spread = table
    sqrt_moment = np.zeros_like(means)
    spread = np.zeros_like(means)
    # below the table both are proportional to <n>
    low = means < _MOMENT_TABLE_FLOOR
    sqrt_moment[low] = means[low] * math.exp(log_sqrt[0]) / _MOMENT_TABLE_FLOOR
    spread[low] = means[low] * math.exp(log_spread[0]) / _MOMENT_TABLE_FLOOR
    logs = np.log(means[~low])
    sqrt_moment[~low] = np.exp(np.interp(logs, log_means, log_sqrt))
    spread[~low] = np.exp(np.interp(logs, log_means, log_spread))
    return sqrt_moment, spread


def window_model_stds(window, test, sampling, det, energies,
                      fractions=FRACTION_CANDIDATES, delays=None):
    """Window metric of the standard-deviation trace a model scan would give.

    The model scan has a coherent fraction that is constant across the
    pulse. At each delay the test pulse holds <n> = peak * I(tau), the
    exact moments of the signal at that <n> are combined with the carrier
    and the noise of ``det``, and the resulting standard deviations are
    averaged with the window weights as in ``window_metrics``.

    Parameters
    ----------
    window : GaborWindow
    test, sampling : PulseSpec
    det : DetectionSpec
    energies : sequence of float
        Test pulse energies in joules.
    fractions : sequence of float, optional
        Coherent fractions to evaluate; defaults to ``FRACTION_CANDIDATES``.
    delays : array_like, optional
        Defaults to ``trace_sim.DEFAULT_DELAYS``.

    Returns
    -------
    numpy.ndarray
        One row per fraction, one column per energy in ascending order.
    """
    delays = field_model.validated_delays(
        trace_sim.DEFAULT_DELAYS if delays is None else delays)
    _check_overlap(window, delays)
    peaks = np.sort(_peak_photons(test, energies))
    if peaks.size == 0:
        raise ConfigurationError('the energy grid is empty', key='energies_zj')
    if not sampling.mean_photons > 0:
        raise ConfigurationError('the sampling pulse must contain photons',
                                 key='sampling_mean')
    fractions = np.asarray(fractions, dtype=float)
    sampling_dist = PhotonDistribution.poisson(sampling.mean_photons)

    means = peaks[:, None] * field_model.intensity_envelope(test, delays)
    upper = max(float(peaks[-1]), 10.0 * _MOMENT_TABLE_FLOOR)
    coherent_sqrt, coherent_spread = _sfg_moments(_sfg_moment_table(
        PhotonDistribution.poisson(1.0), sampling_dist, upper), means)
    thermal_sqrt, thermal_spread = _sfg_moments(_sfg_moment_table(
        PhotonDistribution.bose_einstein(1.0), sampling_dist, upper), means)
    shg_sqrt, shg_mean = ghost_mc.min_sqrt_moments(sampling_dist,
                                                   sampling_dist)
    mean_carrier, square_carrier = trace_sim.carrier_moments(test, sampling,
                                                             det, delays)

    # mixture moments of sqrt(n_SFG), A weighting the coherent part
    share = fractions[:, None, None]
    sfg_sqrt = share * coherent_sqrt + (1.0 - share) * thermal_sqrt
    sfg_spread = (share * coherent_spread + (1.0 - share) * thermal_spread
                  + share * (1.0 - share)
                  * (coherent_sqrt - thermal_sqrt) ** 2)

    # Var[S c (1 + kappa xi) + floor eta], with S = 2 sqrt(n_SHG) sqrt(n_SFG)
    gain = shg_mean * square_carrier * (1.0 + det.classical_noise ** 2)
    excess = gain - shg_sqrt ** 2 * mean_carrier ** 2
    variance = (4.0 * (excess * sfg_sqrt ** 2 + gain * sfg_spread)
                + det.noise_floor ** 2)
    stds = np.sqrt(np.maximum(variance, 0.0))
    weights = window_weights(window, delays)
    return stds @ weights / np.sum(weights)


def _check_estimable(observed, grid):
    if grid.size != len(observed.points):
        raise ConfigurationError(
            'mean grid has {} values for {} points'.format(
                grid.size, len(observed.points)), key='grid')
    if grid.size < 5:
        raise ConfigurationError('estimation needs at least 5 points',
                                 key='grid')
    if not np.min(grid) < 1.0 < np.max(grid):
        raise ConfigurationError('the curve must span <n> = 1', key='grid')
    if np.all(observed.column('raw_std') == 0):
        raise EstimationError('every observed standard deviation is zero')


def _best_fraction(target, model_stds):
    errors = np.sum((np.asarray(model_stds) - target) ** 2, axis=1)
    # reversed, so the first of equal errors is the larger fraction
    best = errors.size - 1 - int(np.argmin(errors[::-1]))
    logger.debug('mixture fraction %.2f, squared error %.3g',
                 FRACTION_CANDIDATES[best], errors[best])
    return float(FRACTION_CANDIDATES[best])


def estimate_window_fraction(observed, window, test, sampling, det, energies,
                             delays=None):
    """Coherent fraction of one window of an ``intrapulse_sweep``.

    The grid search of ``estimate_mixture_fraction``, with model curves
    from ``window_model_stds``. Windows on the flanks of the pulse
    average over delays whose <n> differ many times over, which the
    single-<n> model curves of ``model_curve_oracle`` do not capture.

    Parameters
    ----------
    observed : ScalingCurve
        The window's curve as returned by ``intrapulse_sweep``.
    window : GaborWindow
    test, sampling, det, energies, delays
        As passed to ``intrapulse_sweep``.

    Returns
    -------
    float
        A_hat in [0, 1].

    Raises
    ------
    ConfigurationError
        If the curve has fewer than five points, does not span <n> = 1
        or does not match the energy grid.
    EstimationError
        If every observed standard deviation is zero.
    """
    _check_estimable(observed, observed.mean_photons)
    model = window_model_stds(window, test, sampling, det, energies,
                              delays=delays)
    if model.shape[1] != len(observed.points):
        raise ConfigurationError(
            '{} energies for {} points'.format(model.shape[1],
                                               len(observed.points)),
            key='energies_zj')
    anchors = model[:, -1:]
    normalized = np.divide(model, anchors, out=np.zeros_like(model),
                           where=anchors > 0)
    return _best_fraction(observed.column('norm_std'), normalized)


def estimate_mixture_fraction(observed, mean_grid=None,
                              sampling_mean=ghost_mc.DEFAULT_SAMPLING_MEAN):
    """Coherent fraction whose model curve best matches an observed curve.

    A grid search over A = 0, 0.01, ..., 1 minimizes the summed squared
    difference of normalized standard deviations between ``observed``
    and the mixture model. Ties go to the larger A.

    Parameters
    ----------
    observed : ScalingCurve
    mean_grid : sequence of float, optional
        <n> at which the model is evaluated, one per observed point.
        Defaults to the observed curve's own <n>.
    sampling_mean : float, optional

    Returns
    -------
    float
        A_hat in [0, 1].

    Raises
    ------
    ConfigurationError
        If the curve has fewer than five points or does not span <n> = 1.
    EstimationError
        If every observed standard deviation is zero.
    """
    if mean_grid is None:
        mean_grid = observed.mean_photons
    grid = np.asarray(mean_grid, dtype=float)
    _check_estimable(observed, grid)
    sampling_dist = PhotonDistribution.poisson(sampling_mean)
    models = [ghost_mc.model_curve_oracle(
        PhotonDistribution.mixture(1.0, float(fraction)), grid,
        sampling_dist).column('norm_std') for fraction in FRACTION_CANDIDATES]
    return _best_fraction(observed.column('norm_std'), models)


def peak_to_anchor_ratio(curve):
    """Largest normalized standard deviation below the anchor."""
    return curve.peak_to_anchor_ratio()


def write_gabor_csv(curves, windows, output_path, a_hats=None):
    """Save per-window curves in the ``gabor.csv`` schema.

    Parameters
    ----------
    curves : dict
        Window label to ScalingCurve, as returned by ``intrapulse_sweep``.
    windows : sequence of GaborWindow
    output_path : string
    a_hats : dict, optional
        Window label to estimated coherent fraction; missing labels
        leave the column empty.
    """
    a_hats = a_hats or {}
    rows = []
    for window in windows:
        curve = curves[window.label]
        a_hat = a_hats.get(window.label, '')
        rows.extend(results_io.gen_table([
            window.label, window.center, curve.mean_photons,
            curve.column('norm_mean'), curve.column('norm_std'), a_hat]))
    results_io.save_table(rows, results_io.GABOR_HEADER, output_path)
