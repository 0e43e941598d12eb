"""Photon-number statistics of coherent, thermal and mixed light pulses.

A coherent state has Poissonian photon-number statistics, a thermal
state Bose-Einstein statistics. Partially coherent pulses are described
by the convex mixture

    P_test(n) = A * P_Poisson(n) + (1 - A) * P_Bose-Einstein(n),

where A is the coherent fraction. This module evaluates these laws,
samples from them, computes their moments by direct summation (an
oracle for the Monte Carlo in ``ghost_mc``) and converts between pulse
energy and mean photon number.
"""

import functools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.constants as sc
import scipy.stats as stats

from fieldoscopysim.errors import ConfigurationError, NumericError

logger = logging.getLogger(__name__)

POISSON = 'poisson'
BOSE_EINSTEIN = 'bose-einstein'
MIXTURE = 'mixture'
KINDS = (POISSON, BOSE_EINSTEIN, MIXTURE)

DEFAULT_TAIL_EPSILON = 1e-12
MAX_TAIL_EPSILON = 1e-6

# Test pulse energies and mean photon numbers of the zeptojoule sweep.
REFERENCE_ENERGIES_ZJ = (3.19, 6.37, 13.54, 26.28, 53.35, 105.91,
                         212.61, 422.83, 845.65, 1704.0, 3376.2)
REFERENCE_MEAN_PHOTONS = (0.0165, 0.033, 0.0702, 0.1363, 0.2766,
                          0.5491, 1.1024, 2.1924, 4.3848, 8.8357,
                          17.5062)

ZEPTOJOULE = 1e-21


@dataclass(frozen=True)
class PhotonDistribution:
    """A photon-number law with a given mean.

    Parameters
    ----------
    kind : str
        One of ``'poisson'``, ``'bose-einstein'`` or ``'mixture'``.
    mean : float
        Mean photon number <n>, nonnegative.
    coherent_fraction : float
        Weight A of the Poisson component, in [0, 1]. Only used when
        ``kind`` is ``'mixture'``.
    """

    kind: str = POISSON
    mean: float = 0.0
    coherent_fraction: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(
                'unknown distribution {!r}, expected one of {}'.format(
                    self.kind, ', '.join(KINDS)), key='kind')
        mean = float(self.mean)
        if not math.isfinite(mean) or mean < 0:
            raise ConfigurationError(
                'mean photon number must be finite and >= 0, got {}'.format(
                    self.mean), key='mean')
        fraction = float(self.coherent_fraction)
        if not 0.0 <= fraction <= 1.0:
            raise ConfigurationError(
                'coherent fraction must lie in [0, 1], got {}'.format(
                    self.coherent_fraction), key='coherent_fraction')
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'coherent_fraction', fraction)

    @classmethod
    def poisson(cls, mean):
        """Coherent-state statistics."""
        return cls(POISSON, mean)

    @classmethod
    def bose_einstein(cls, mean):
        """Thermal-state statistics."""
        return cls(BOSE_EINSTEIN, mean, 0.0)

    @classmethod
    def mixture(cls, mean, coherent_fraction):
        """Convex combination of coherent and thermal statistics."""
        return cls(MIXTURE, mean, coherent_fraction)

    def with_mean(self, mean):
        """The same law (kind and coherent fraction) with another mean."""
        return replace(self, mean=mean)

    @property
    def effective_fraction(self):
        """Weight of the Poisson component actually in effect."""
        if self.kind == POISSON:
            return 1.0
        if self.kind == BOSE_EINSTEIN:
            return 0.0
        return self.coherent_fraction

    def components(self):
        """The pure laws making up this one, with their weights."""
        if self.kind != MIXTURE:
            return [(1.0, self)]
        return [(self.coherent_fraction, PhotonDistribution.poisson(self.mean)),
                (1.0 - self.coherent_fraction,
                 PhotonDistribution.bose_einstein(self.mean))]


@dataclass(frozen=True)
class MomentSummary:
    """Moments of a photon-number law, summed over its truncated support.

    Parameters
    ----------
    mean_sqrt_n, var_sqrt_n : float
        E[sqrt(n)] and Var(sqrt(n)).
    mean_n, var_n : float
        E[n] and Var(n).
    terms : int
        Number of PMF terms that were summed.
    """

    mean_sqrt_n: float
    var_sqrt_n: float
    mean_n: float
    var_n: float
    terms: int = 0


def _poisson_pmf(mean, counts):
    if mean == 0:
        return (counts == 0).astype(float)
    return stats.poisson.pmf(counts, mean)


def _bose_einstein_pmf(mean, counts):
    ratio = mean / (mean + 1.0)
    return (1.0 / (mean + 1.0)) * ratio ** counts.astype(float)


def _poisson_survival(mean, counts):
    if mean == 0:
        return (counts <= 0).astype(float)
    return stats.poisson.sf(counts - 1, mean)


def _bose_einstein_survival(mean, counts):
    ratio = mean / (mean + 1.0)
    return ratio ** np.maximum(counts, 0).astype(float)


def pmf_vector(dist, n_max):
    """P(n = k) for k = 0, ..., n_max.

    Parameters
    ----------
    dist : PhotonDistribution
    n_max : int

    Returns
    -------
    numpy.ndarray
        Array of length ``n_max + 1``.
    """
    counts = np.arange(int(n_max) + 1)
    if dist.kind == POISSON:
        return _poisson_pmf(dist.mean, counts)
    if dist.kind == BOSE_EINSTEIN:
        return _bose_einstein_pmf(dist.mean, counts)
    fraction = dist.coherent_fraction
    return (fraction * _poisson_pmf(dist.mean, counts)
            + (1.0 - fraction) * _bose_einstein_pmf(dist.mean, counts))


def survival_vector(dist, n_max):
    """P(n >= k) for k = 0, ..., n_max + 1."""
    counts = np.arange(int(n_max) + 2)
    if dist.kind == POISSON:
        return _poisson_survival(dist.mean, counts)
    if dist.kind == BOSE_EINSTEIN:
        return _bose_einstein_survival(dist.mean, counts)
    fraction = dist.coherent_fraction
    return (fraction * _poisson_survival(dist.mean, counts)
            + (1.0 - fraction) * _bose_einstein_survival(dist.mean, counts))


def pmf(dist, count):
    """Probability of finding exactly ``count`` photons.

    Parameters
    ----------
    dist : PhotonDistribution
        The photon-number law.
    count : int
        Nonnegative photon number.

    Returns
    -------
    float
        P(n = count).

    Raises
    ------
    ConfigurationError
        If ``count`` is not a nonnegative integer.
    """
    if isinstance(count, bool) or int(count) != count or count < 0:
        raise ConfigurationError(
            'photon count must be a nonnegative integer, got {!r}'.format(
                count), key='count')
    count = int(count)
    if dist.kind == POISSON:
        return float(_poisson_pmf(dist.mean, np.array([count]))[0])
    if dist.kind == BOSE_EINSTEIN:
        return float(_bose_einstein_pmf(dist.mean, np.array([count]))[0])
    return float(sum(weight * pmf(component, count)
                     for weight, component in dist.components()))


def _sample_pure(dist, size, rng):
    if dist.mean == 0:
        return np.zeros(size, dtype=np.int64)
    if dist.kind == POISSON:
        return rng.poisson(dist.mean, size).astype(np.int64)
    # geometric inversion counts trials up to the first success
    return rng.geometric(1.0 / (dist.mean + 1.0), size).astype(np.int64) - 1


def sample_many(dist, size, rng):
    """Draw ``size`` independent photon numbers.

    Mixture draws pick the component first (Poisson with probability A)
    and then draw from it.

    Parameters
    ----------
    dist : PhotonDistribution
    size : int
    rng : numpy.random.Generator

    Returns
    -------
    numpy.ndarray of int64
    """
    if dist.mean == 0:
        return np.zeros(size, dtype=np.int64)
    if dist.kind != MIXTURE:
        return _sample_pure(dist, size, rng)
    coherent = rng.random(size) < dist.coherent_fraction
    coherent_draws = _sample_pure(
        PhotonDistribution.poisson(dist.mean), size, rng)
    thermal_draws = _sample_pure(
        PhotonDistribution.bose_einstein(dist.mean), size, rng)
    return np.where(coherent, coherent_draws, thermal_draws)


def sample(dist, rng):
    """Draw a single photon number from ``dist``."""
    return int(sample_many(dist, 1, rng)[0])


def default_max_terms(dist, tail_epsilon=DEFAULT_TAIL_EPSILON):
    """Hard cap on the number of PMF terms summed for ``dist``.

    Poisson laws are capped at max(10 <n> + 50, 200) terms. Geometric
    tails decay more slowly, so Bose-Einstein laws (and mixtures) get
    enough terms to reach ``tail_epsilon``.
    """
    poisson_cap = max(int(math.ceil(10 * dist.mean)) + 50, 200)
    if dist.kind == POISSON:
        return poisson_cap
    thermal_cap = max(int(math.ceil(
        (dist.mean + 1.0) * math.log(1.0 / tail_epsilon))) + 50, 200)
    return max(poisson_cap, thermal_cap)


def _validate_tail_epsilon(tail_epsilon):
    if not 0 < tail_epsilon <= MAX_TAIL_EPSILON:
        raise ConfigurationError(
            'tail epsilon must lie in (0, {}], got {}'.format(
                MAX_TAIL_EPSILON, tail_epsilon), key='tail_epsilon')


def _pure_truncation_bound(dist, tail_epsilon):
    if dist.mean == 0:
        return 0
    if dist.kind == POISSON:
        bound = int(stats.poisson.isf(tail_epsilon, dist.mean))
        while stats.poisson.sf(bound, dist.mean) >= tail_epsilon:
            bound += 1
        return bound
    ratio = dist.mean / (dist.mean + 1.0)
    # P(n > N) = ratio ** (N + 1)
    return max(int(math.ceil(math.log(tail_epsilon) / math.log(ratio))), 0)


def truncation_bound(dist, tail_epsilon=DEFAULT_TAIL_EPSILON, max_terms=None):
    """Smallest N with P(n > N) < ``tail_epsilon``.

    Raises
    ------
    ConfigurationError
        If ``tail_epsilon`` is outside (0, 1e-6].
    NumericError
        If more than ``max_terms`` terms would be needed.
    """
    _validate_tail_epsilon(tail_epsilon)
    if max_terms is None:
        max_terms = default_max_terms(dist, tail_epsilon)
    bound = max(_pure_truncation_bound(component, tail_epsilon)
                for weight, component in dist.components() if weight > 0)
    if bound + 1 > max_terms:
        raise NumericError(
            '{} law with mean {} needs {} terms to reach a tail of {}, '
            'more than the {} allowed'.format(
                dist.kind, dist.mean, bound + 1, tail_epsilon, max_terms))
    logger.debug('truncating %s(mean=%g) at n=%d', dist.kind, dist.mean, bound)
    return bound


@functools.lru_cache(maxsize=256)
def exact_moments(dist, tail_epsilon=DEFAULT_TAIL_EPSILON, max_terms=None):
    """Moments of sqrt(n) and n by direct summation of the PMF.

    The sum stops once the remaining tail mass is below
    ``tail_epsilon``.

    Parameters
    ----------
    dist : PhotonDistribution
    tail_epsilon : float, optional
        Tail mass left out of the sums, in (0, 1e-6].
    max_terms : int, optional
        Hard cap on the number of summed terms.

    Returns
    -------
    MomentSummary
    """
    n_max = truncation_bound(dist, tail_epsilon, max_terms)
    counts = np.arange(n_max + 1, dtype=float)
    probabilities = pmf_vector(dist, n_max)
    roots = np.sqrt(counts)
    mean_sqrt_n = float(np.dot(probabilities, roots))
    var_sqrt_n = float(np.dot(probabilities, (roots - mean_sqrt_n) ** 2))
    mean_n = float(np.dot(probabilities, counts))
    var_n = float(np.dot(probabilities, (counts - mean_n) ** 2))
    return MomentSummary(mean_sqrt_n, var_sqrt_n, mean_n, var_n, n_max + 1)


def photon_energy(wavelength):
    """Energy in joules of one photon of the given wavelength in meters."""
    if not wavelength > 0:
        raise ConfigurationError(
            'wavelength must be positive, got {}'.format(wavelength),
            key='wavelength')
    return sc.h * sc.c / wavelength


def energy_to_mean_photons(pulse_energy, wavelength):
    """Mean photon number of a pulse.

    Parameters
    ----------
    pulse_energy : float
        Pulse energy in joules.
    wavelength : float
        Carrier wavelength in meters.

    Returns
    -------
    float
        <n> = E / (h c / wavelength), using exact CODATA constants.
    """
    if not (math.isfinite(pulse_energy) and pulse_energy >= 0):
        raise ConfigurationError(
            'pulse energy must be finite and >= 0, got {}'.format(
                pulse_energy), key='pulse_energy')
    return pulse_energy / photon_energy(wavelength)


def mean_photons_to_energy(mean_photons, wavelength):
    """Pulse energy in joules carrying ``mean_photons`` photons on average."""
    if not (math.isfinite(mean_photons) and mean_photons >= 0):
        raise ConfigurationError(
            'mean photon number must be finite and >= 0, got {}'.format(
                mean_photons), key='mean_photons')
    return mean_photons * photon_energy(wavelength)


def carrier_wavelength(carrier_freq):
    """Wavelength in meters of a carrier frequency given in PHz."""
    if not carrier_freq > 0:
        raise ConfigurationError(
            'carrier frequency must be positive, got {}'.format(carrier_freq),
            key='carrier_freq')
    return sc.c / (carrier_freq * 1e15)


def vacuum_fraction(dist):
    """Probability that a pulse contains no photons."""
    return pmf(dist, 0)


def single_photon_fraction(dist):
    """Probability of exactly one photon among non-vacuum pulses."""
    occupied = 1.0 - vacuum_fraction(dist)
    if occupied <= 0:
        raise NumericError('every pulse is in the vacuum state')
    return pmf(dist, 1) / occupied
