"""Monte Carlo model of a balanced SHG/SFG heterodyne measurement.

A single shot is modelled in three stages:

1. Second harmonic generation. Two photon numbers are drawn from the
   sampling pulse statistics; every SHG photon consumes one photon from
   each, so n_SHG = min(n1, n2).
2. Sum-frequency generation. One photon number is drawn from the
   sampling pulse and one from the test pulse; n_SFG = min(n1', n2).
3. Interference of the two fields, giving the signal
   S = 2 * sqrt(n_SHG) * sqrt(n_SFG).

Repeating this many times gives the mean signal and its standard
deviation. Sweeping the mean photon number of the test pulse and
normalizing by the test field strength sqrt(<n>) exposes the breakdown
of the classical (linear field) scaling near <n> = 1.
"""

import functools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from fieldoscopysim import photon_stats, results_io, streams
from fieldoscopysim.errors import ConfigurationError, NumericError
from fieldoscopysim.photon_stats import PhotonDistribution

logger = logging.getLogger(__name__)

DEFAULT_SAMPLING_MEAN = 1e6
DEFAULT_SHOTS = 10000
DEFAULT_CHUNK_SIZE = 2 ** 18


def _default_sampling():
    return PhotonDistribution.poisson(DEFAULT_SAMPLING_MEAN)


def _default_test():
    return PhotonDistribution.poisson(1.0)


@dataclass(frozen=True)
class McConfig:
    """Configuration of a Monte Carlo ensemble.

    Parameters
    ----------
    sampling_dist : PhotonDistribution
        Statistics of the strong sampling pulse.
    test_dist : PhotonDistribution
        Statistics of the weak test pulse.
    shots : int
        Number of simulated shots.
    seed : int
        Unsigned 64-bit base seed.
    """

    sampling_dist: PhotonDistribution = field(
        default_factory=_default_sampling)
    test_dist: PhotonDistribution = field(default_factory=_default_test)
    shots: int = DEFAULT_SHOTS
    seed: int = 0

    def __post_init__(self):
        if (isinstance(self.shots, bool)
                or not isinstance(self.shots, (int, np.integer))
                or self.shots < 1):
            raise ConfigurationError(
                'shot count must be a positive integer, got {!r}'.format(
                    self.shots), key='shots')
        if not self.sampling_dist.mean > 0:
            raise ConfigurationError(
                'the sampling pulse must contain photons', key='sampling_mean')
        streams.validate_seed(self.seed)


@dataclass(frozen=True)
class ShotStatistics:
    """Sample mean and standard deviation of the signal over an ensemble."""

    mean_signal: float
    std_signal: float
    shots: int


@dataclass(frozen=True)
class _RunningMoments:
    count: int
    mean: float
    m2: float

    @classmethod
    def from_samples(cls, samples):
        mean = float(np.mean(samples))
        return cls(len(samples), mean, float(np.sum((samples - mean) ** 2)))

    def combine(self, other):
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta ** 2 * self.count * other.count / count
        return _RunningMoments(count, mean, m2)


def combine_statistics(first, second):
    """Pool two ensembles' statistics as if they were one ensemble.

    Uses the pairwise mean/variance update, so sharded runs reduce
    without revisiting the samples.
    """
    moments = []
    for stats in (first, second):
        m2 = stats.std_signal ** 2 * (stats.shots - 1)
        moments.append(_RunningMoments(stats.shots, stats.mean_signal, m2))
    pooled = moments[0].combine(moments[1])
    return _statistics(pooled)


def _statistics(moments):
    if moments.count < 2:
        raise ConfigurationError(
            'a standard deviation needs at least two shots', key='shots')
    return ShotStatistics(moments.mean,
                          math.sqrt(max(moments.m2, 0.0) / (moments.count - 1)),
                          moments.count)


@dataclass(frozen=True)
class ScalingPoint:
    """One point of a scaling curve."""

    mean_photons: float
    raw_mean: float
    raw_std: float
    norm_mean: float
    norm_std: float


@dataclass(frozen=True)
class ScalingCurve:
    """Mean signal and standard deviation against test <n>.

    Points are sorted by ascending <n>. The normalized columns are 1 at
    the anchor, the largest <n> of the curve.
    """

    points: tuple
    normalization_anchor: float
    kind: str = photon_stats.POISSON
    coherent_fraction: float = 1.0
    shots: int = 0
    seed: int = 0

    def column(self, name):
        """Values of one point attribute as an array."""
        return np.array([getattr(point, name) for point in self.points])

    @property
    def mean_photons(self):
        return self.column('mean_photons')

    def peak_to_anchor_ratio(self):
        """Largest normalized standard deviation below the anchor.

        A value above 1 means the standard deviation peaks at some
        intermediate <n>, as it does for coherent light. A curve that
        rises steadily towards the anchor gives a value below 1.
        """
        if len(self.points) < 2:
            raise NumericError('a single-point curve has no peak')
        return float(np.max(self.column('norm_std')[:-1]))


def shg_photons(n1, n2):
    """Second-harmonic photon number, limited by the smaller input."""
    return np.minimum(n1, n2)


def sfg_photons(n1, n2):
    """Sum-frequency photon number, limited by the smaller input."""
    return np.minimum(n1, n2)


def signal_amplitude(n_shg, n_sfg):
    """Interference signal S = 2 sqrt(n_SHG) sqrt(n_SFG)."""
    return 2.0 * np.sqrt(n_shg) * np.sqrt(n_sfg)


def draw_amplitudes(sampling_dist, test_dist, size, rng):
    """Simulate ``size`` independent shots and return their signals.

    Parameters
    ----------
    sampling_dist, test_dist : PhotonDistribution
        Statistics of the sampling and test pulses.
    size : int
        Number of shots.
    rng : numpy.random.Generator

    Returns
    -------
    numpy.ndarray
        Nonnegative signal amplitudes.
    """
    n_shg = shg_photons(photon_stats.sample_many(sampling_dist, size, rng),
                        photon_stats.sample_many(sampling_dist, size, rng))
    n_sfg = sfg_photons(photon_stats.sample_many(sampling_dist, size, rng),
                        photon_stats.sample_many(test_dist, size, rng))
    return signal_amplitude(n_shg, n_sfg)


def simulate_shot(config, rng):
    """Signal of a single shot under ``config``."""
    return float(draw_amplitudes(config.sampling_dist, config.test_dist, 1,
                                 rng)[0])


def _chunks(config, chunk_size):
    for index, start in enumerate(range(0, config.shots, chunk_size)):
        size = min(chunk_size, config.shots - start)
        rng = streams.derive_rng(config.seed, 'shots', index)
        yield draw_amplitudes(config.sampling_dist, config.test_dist, size,
                              rng)


def shot_amplitudes(config, chunk_size=DEFAULT_CHUNK_SIZE):
    """All shot signals of the ensemble described by ``config``."""
    return np.concatenate(list(_chunks(config, chunk_size)))


def run_ensemble(config, chunk_size=DEFAULT_CHUNK_SIZE):
    """Mean and standard deviation of the signal over ``config.shots`` shots.

    Shots are simulated in chunks with their own derived streams and the
    chunk statistics are pooled, so memory use is bounded and the result
    depends only on the configuration.

    Parameters
    ----------
    config : McConfig
    chunk_size : int, optional
        Maximum number of shots held in memory at once.

    Returns
    -------
    ShotStatistics

    Raises
    ------
    ConfigurationError
        If fewer than two shots are requested.
    """
    if config.shots < 2:
        raise ConfigurationError(
            'a standard deviation needs at least two shots', key='shots')
    moments = None
    for amplitudes in _chunks(config, chunk_size):
        chunk = _RunningMoments.from_samples(amplitudes)
        moments = chunk if moments is None else moments.combine(chunk)
    return _statistics(moments)


def vacuum_shot_fraction(config, chunk_size=DEFAULT_CHUNK_SIZE):
    """Fraction of shots whose signal is exactly zero."""
    zeros = sum(int(np.count_nonzero(amplitudes == 0))
                for amplitudes in _chunks(config, chunk_size))
    return zeros / config.shots


def validated_grid(mean_grid, allow_zero=False):
    """The <n> grid sorted ascending, checked to be finite and nonempty."""
    grid = np.sort(np.asarray(mean_grid, dtype=float).ravel())
    if grid.size == 0:
        raise ConfigurationError('the <n> grid is empty', key='grid')
    if not np.all(np.isfinite(grid)):
        raise ConfigurationError('the <n> grid must be finite', key='grid')
    if allow_zero and np.any(grid < 0):
        raise ConfigurationError('grid values must be >= 0', key='grid')
    if not allow_zero and np.any(grid <= 0):
        raise ConfigurationError('grid values must be > 0', key='grid')
    return grid


def normalize_curve(mean_photons, raw_means, raw_stds, mean_exponent=0.5,
                    anchor_mean=True, **metadata):
    """Assemble a ScalingCurve from raw per-point statistics.

    Parameters
    ----------
    mean_photons, raw_means, raw_stds : array_like
        Abscissa and raw statistics, in any order.
    mean_exponent : float, optional
        The mean is divided by <n> ** mean_exponent (0.5 for field
        detection, 1 for intensity detection).
    anchor_mean : bool, optional
        Whether the normalized mean is also scaled to 1 at the anchor.
    **metadata
        Passed to ScalingCurve (kind, coherent_fraction, shots, seed).

    Returns
    -------
    ScalingCurve
    """
    mean_photons = np.asarray(mean_photons, dtype=float)
    order = np.argsort(mean_photons, kind='stable')
    mean_photons = mean_photons[order]
    raw_means = np.asarray(raw_means, dtype=float)[order]
    raw_stds = np.asarray(raw_stds, dtype=float)[order]

    scaled = np.zeros_like(raw_means)
    occupied = mean_photons > 0
    scaled[occupied] = (raw_means[occupied]
                        / mean_photons[occupied] ** mean_exponent)
    norm_means = scaled
    if anchor_mean:
        norm_means = _scale_to_anchor(scaled, 'mean')
    norm_stds = _scale_to_anchor(raw_stds, 'standard deviation')

    points = tuple(ScalingPoint(*values) for values in zip(
        mean_photons.tolist(), raw_means.tolist(), raw_stds.tolist(),
        norm_means.tolist(), norm_stds.tolist()))
    return ScalingCurve(points, float(mean_photons[-1]), **metadata)


def _scale_to_anchor(values, name):
    anchor = values[-1]
    if anchor == 0:
        logger.warning('%s vanishes at the anchor; normalized values set to 0',
                       name)
        return np.zeros_like(values)
    return values / anchor


def scaling_sweep(base, mean_grid, workers=None):
    """Run the ensemble at every <n> of ``mean_grid``.

    The test law keeps its kind and coherent fraction; only the mean is
    swapped in. Point i of the sorted grid uses a seed derived from the
    base seed and i, so points can run concurrently.

    Parameters
    ----------
    base : McConfig
    mean_grid : sequence of float
        Test pulse mean photon numbers, all > 0.
    workers : int, optional
        Worker threads; defaults to ``QFS_THREADS``.

    Returns
    -------
    ScalingCurve
    """
    grid = validated_grid(mean_grid)
    if base.shots < 2:
        raise ConfigurationError(
            'a standard deviation needs at least two shots', key='shots')

    def run_point(indexed):
        index, mean = indexed
        config = replace(base, test_dist=base.test_dist.with_mean(mean),
                         seed=streams.derive_seed(base.seed, 'sweep', index))
        statistics = run_ensemble(config)
        logger.info('%s <n>=%g: mean %.6g, std %.6g', base.test_dist.kind,
                    mean, statistics.mean_signal, statistics.std_signal)
        return statistics

    results = streams.parallel_map(run_point, enumerate(grid.tolist()),
                                   workers)
    return normalize_curve(
        grid, [stats.mean_signal for stats in results],
        [stats.std_signal for stats in results],
        kind=base.test_dist.kind,
        coherent_fraction=base.test_dist.effective_fraction,
        shots=base.shots, seed=base.seed)


@functools.lru_cache(maxsize=1024)
def _pure_min_moments(first, second, tail_epsilon):
    n_max = min(photon_stats.truncation_bound(first, tail_epsilon),
                photon_stats.truncation_bound(second, tail_epsilon))
    joint = (photon_stats.survival_vector(first, n_max)
             * photon_stats.survival_vector(second, n_max))
    probabilities = joint[:-1] - joint[1:]
    counts = np.arange(n_max + 1, dtype=float)
    return (float(np.dot(probabilities, np.sqrt(counts))),
            float(np.dot(probabilities, counts)))


def min_sqrt_moments(first, second,
                     tail_epsilon=photon_stats.DEFAULT_TAIL_EPSILON):
    """E[sqrt(min(n1, n2))] and E[min(n1, n2)] for independent n1, n2.

    P(min >= k) is the product of the two survival functions, which is
    bilinear in mixture weights, so mixtures are combined from their
    pure components.
    """
    mean_sqrt = 0.0
    mean = 0.0
    for first_weight, first_part in first.components():
        for second_weight, second_part in second.components():
            weight = first_weight * second_weight
            if weight == 0:
                continue
            part_sqrt, part_mean = _pure_min_moments(first_part, second_part,
                                                     tail_epsilon)
            mean_sqrt += weight * part_sqrt
            mean += weight * part_mean
    return mean_sqrt, mean


def model_curve_oracle(test_dist, mean_grid, sampling_dist=None,
                       tail_epsilon=photon_stats.DEFAULT_TAIL_EPSILON):
    """Closed-form counterpart of ``scaling_sweep``.

    With X = 2 sqrt(n_SHG) and Y = sqrt(n_SFG) independent, the mean
    signal is E[X] E[Y] and its variance E[X^2] E[Y^2] - (E[X] E[Y])^2.
    Both factors include the fluctuations of the sampling pulse.

    Parameters
    ----------
    test_dist : PhotonDistribution
        Supplies the kind and coherent fraction; its mean is ignored.
    mean_grid : sequence of float
        Test pulse mean photon numbers, all >= 0.
    sampling_dist : PhotonDistribution, optional
        Defaults to Poisson statistics with <n> = 1e6.

    Returns
    -------
    ScalingCurve
    """
    grid = validated_grid(mean_grid, allow_zero=True)
    if sampling_dist is None:
        sampling_dist = _default_sampling()
    shg_sqrt, shg_mean = min_sqrt_moments(sampling_dist, sampling_dist,
                                          tail_epsilon)
    means = []
    stds = []
    for mean in grid.tolist():
        sfg_sqrt, sfg_mean = min_sqrt_moments(
            sampling_dist, test_dist.with_mean(mean), tail_epsilon)
        signal_mean = 2.0 * shg_sqrt * sfg_sqrt
        variance = 4.0 * shg_mean * sfg_mean - signal_mean ** 2
        means.append(signal_mean)
        stds.append(math.sqrt(max(variance, 0.0)))
    return normalize_curve(grid, means, stds, kind=test_dist.kind,
                           coherent_fraction=test_dist.effective_fraction)


def curve_rows(curve):
    """Rows of ``scaling.csv`` for one curve."""
    return [(point.mean_photons, point.raw_mean, point.raw_std,
             point.norm_mean, point.norm_std, curve.kind,
             curve.coherent_fraction, curve.shots, curve.seed)
            for point in curve.points]


def write_scaling_csv(curves, output_path):
    """Save one or more scaling curves in the ``scaling.csv`` schema."""
    if isinstance(curves, ScalingCurve):
        curves = [curves]
    rows = [row for curve in curves for row in curve_rows(curve)]
    results_io.save_table(rows, results_io.SCALING_HEADER, output_path)
