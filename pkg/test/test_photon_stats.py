import math
import unittest

from hypothesis import given, settings, strategies as st
import numpy as np

from fieldoscopysim import photon_stats, streams
from fieldoscopysim.errors import ConfigurationError, NumericError
from fieldoscopysim.photon_stats import PhotonDistribution

WAVELENGTH = 1030e-9

kinds = st.sampled_from(photon_stats.KINDS)
means = st.floats(min_value=0.0, max_value=50.0)
fractions = st.floats(min_value=0.0, max_value=1.0)


class TestPhotonDistribution(unittest.TestCase):
    def test_rejects_invalid_parameters(self):
        with self.assertRaises(ConfigurationError) as e:
            PhotonDistribution('squeezed', 1.0)
        self.assertEqual(e.exception.key, 'kind')

        with self.assertRaises(ConfigurationError):
            PhotonDistribution.poisson(-1.0)
        with self.assertRaises(ConfigurationError):
            PhotonDistribution.poisson(float('nan'))
        with self.assertRaises(ConfigurationError) as e:
            PhotonDistribution.mixture(1.0, 1.2)
        self.assertEqual(e.exception.key, 'coherent_fraction')

    def test_with_mean_keeps_law(self):
        dist = PhotonDistribution.mixture(2.0, 0.3).with_mean(5.0)
        self.assertEqual(dist.kind, photon_stats.MIXTURE)
        self.assertEqual(dist.coherent_fraction, 0.3)
        self.assertEqual(dist.mean, 5.0)

    def test_effective_fraction(self):
        self.assertEqual(PhotonDistribution.poisson(1).effective_fraction, 1.0)
        self.assertEqual(
            PhotonDistribution.bose_einstein(1).effective_fraction, 0.0)
        self.assertEqual(
            PhotonDistribution.mixture(1, 0.4).effective_fraction, 0.4)


class TestPmf(unittest.TestCase):
    def test_known_values(self):
        self.assertAlmostEqual(
            photon_stats.pmf(PhotonDistribution.poisson(2.0), 3),
            math.exp(-2.0) * 8.0 / 6.0, places=12)
        self.assertAlmostEqual(
            photon_stats.pmf(PhotonDistribution.bose_einstein(1.0), 2),
            0.125, places=12)
        self.assertEqual(
            photon_stats.pmf(PhotonDistribution.poisson(0.0), 0), 1.0)
        self.assertEqual(
            photon_stats.pmf(PhotonDistribution.bose_einstein(0.0), 1), 0.0)

    def test_rejects_bad_count(self):
        dist = PhotonDistribution.poisson(1.0)
        with self.assertRaises(ConfigurationError):
            photon_stats.pmf(dist, -1)
        with self.assertRaises(ConfigurationError):
            photon_stats.pmf(dist, 1.5)

    @settings(max_examples=50, deadline=None)
    @given(kinds, means, fractions)
    def test_normalized(self, kind, mean, fraction):
        dist = PhotonDistribution(kind, mean, fraction)
        n_max = photon_stats.truncation_bound(dist)
        total = float(np.sum(photon_stats.pmf_vector(dist, n_max)))
        self.assertAlmostEqual(total, 1.0, places=9)

    @settings(max_examples=50, deadline=None)
    @given(means, st.integers(min_value=0, max_value=40))
    def test_mixture_endpoints(self, mean, count):
        self.assertAlmostEqual(
            photon_stats.pmf(PhotonDistribution.mixture(mean, 1.0), count),
            photon_stats.pmf(PhotonDistribution.poisson(mean), count),
            places=14)
        self.assertAlmostEqual(
            photon_stats.pmf(PhotonDistribution.mixture(mean, 0.0), count),
            photon_stats.pmf(PhotonDistribution.bose_einstein(mean), count),
            places=14)

    def test_survival_matches_pmf(self):
        dist = PhotonDistribution.mixture(3.0, 0.6)
        survival = photon_stats.survival_vector(dist, 30)
        pmf = photon_stats.pmf_vector(dist, 30)
        np.testing.assert_allclose(survival[:-1] - survival[1:], pmf,
                                   atol=1e-14)
        self.assertEqual(survival[0], 1.0)


class TestSampling(unittest.TestCase):
    shots = 200000

    def check_mean(self, dist, variance):
        rng = streams.derive_rng(11, 'test', dist.kind)
        draws = photon_stats.sample_many(dist, self.shots, rng)
        self.assertEqual(draws.dtype, np.int64)
        self.assertTrue(np.all(draws >= 0))
        tolerance = 4 * math.sqrt(variance / self.shots)
        self.assertAlmostEqual(np.mean(draws), dist.mean, delta=tolerance)
        return draws

    def test_poisson(self):
        self.check_mean(PhotonDistribution.poisson(3.0), 3.0)

    def test_bose_einstein(self):
        self.check_mean(PhotonDistribution.bose_einstein(3.0), 12.0)

    def test_mixture_vacuum_fraction(self):
        dist = PhotonDistribution.mixture(2.0, 0.5)
        variance = 2.0 + 0.5 * 4.0
        draws = self.check_mean(dist, variance)
        p_zero = photon_stats.vacuum_fraction(dist)
        tolerance = 4 * math.sqrt(p_zero * (1 - p_zero) / self.shots)
        self.assertAlmostEqual(np.mean(draws == 0), p_zero, delta=tolerance)

    def test_agrees_with_exact_moments(self):
        laws = (PhotonDistribution.poisson, PhotonDistribution.bose_einstein,
                lambda mean: PhotonDistribution.mixture(mean, 0.5))
        for law in laws:
            for index, mean in enumerate((0.1, 1.0, 10.0)):
                dist = law(mean)
                exact = photon_stats.exact_moments(dist)
                n_max = photon_stats.truncation_bound(dist)
                counts = np.arange(n_max + 1, dtype=float)
                fourth = float(np.dot(photon_stats.pmf_vector(dist, n_max),
                                      (counts - exact.mean_n) ** 4))
                rng = streams.derive_rng(11, 'moments', dist.kind, index)
                draws = photon_stats.sample_many(dist, self.shots,
                                                 rng).astype(float)
                with self.subTest(kind=dist.kind, mean=mean):
                    self.assertAlmostEqual(
                        np.mean(draws), exact.mean_n,
                        delta=5 * math.sqrt(exact.var_n / self.shots))
                    self.assertAlmostEqual(
                        np.var(draws, ddof=1), exact.var_n,
                        delta=5 * math.sqrt((fourth - exact.var_n ** 2)
                                            / self.shots))
                    self.assertAlmostEqual(
                        np.mean(np.sqrt(draws)), exact.mean_sqrt_n,
                        delta=5 * math.sqrt(exact.var_sqrt_n / self.shots))

    def test_vacuum_pulse(self):
        rng = streams.derive_rng(0, 'vacuum')
        for kind in photon_stats.KINDS:
            draws = photon_stats.sample_many(PhotonDistribution(kind, 0.0),
                                             100, rng)
            self.assertTrue(np.all(draws == 0))

    def test_scalar_sample(self):
        value = photon_stats.sample(PhotonDistribution.poisson(5.0),
                                    streams.derive_rng(1))
        self.assertIsInstance(value, int)


class TestMoments(unittest.TestCase):
    def test_sqrt_mean(self):
        poisson = photon_stats.exact_moments(PhotonDistribution.poisson(1.0))
        self.assertAlmostEqual(poisson.mean_sqrt_n, 0.7732, delta=1e-4)
        thermal = photon_stats.exact_moments(
            PhotonDistribution.bose_einstein(1.0))
        self.assertAlmostEqual(thermal.mean_sqrt_n, 0.6736, delta=1e-4)

    def test_moment_identities(self):
        poisson = photon_stats.exact_moments(
            PhotonDistribution.poisson(1000.0))
        self.assertAlmostEqual(poisson.mean_n / 1000.0, 1.0, delta=1e-9)
        self.assertAlmostEqual(poisson.var_n / 1000.0, 1.0, delta=1e-6)
        thermal = photon_stats.exact_moments(
            PhotonDistribution.bose_einstein(5.0))
        self.assertAlmostEqual(thermal.mean_n / 5.0, 1.0, delta=1e-9)
        self.assertAlmostEqual(thermal.var_n / 30.0, 1.0, delta=1e-6)

    def test_sqrt_variance_identity(self):
        moments = photon_stats.exact_moments(PhotonDistribution.poisson(4.0))
        self.assertAlmostEqual(
            moments.var_sqrt_n, moments.mean_n - moments.mean_sqrt_n ** 2,
            places=10)

    def test_truncation(self):
        dist = PhotonDistribution.poisson(10.0)
        bound = photon_stats.truncation_bound(dist)
        tail = 1.0 - np.sum(photon_stats.pmf_vector(dist, bound))
        self.assertLess(tail, 1e-11)
        with self.assertRaises(NumericError):
            photon_stats.truncation_bound(dist, max_terms=5)
        with self.assertRaises(ConfigurationError):
            photon_stats.truncation_bound(dist, tail_epsilon=0.1)

    def test_thermal_tail_fits_default_cap(self):
        dist = PhotonDistribution.bose_einstein(17.5062)
        moments = photon_stats.exact_moments(dist)
        self.assertLessEqual(moments.terms,
                             photon_stats.default_max_terms(dist))


class TestEnergyConversion(unittest.TestCase):
    def test_reference_table(self):
        for energy, expected in zip(photon_stats.REFERENCE_ENERGIES_ZJ,
                                    photon_stats.REFERENCE_MEAN_PHOTONS):
            mean = photon_stats.energy_to_mean_photons(
                energy * photon_stats.ZEPTOJOULE, WAVELENGTH)
            self.assertAlmostEqual(mean / expected, 1.0, delta=0.005)

    def test_sampling_pulse_energy(self):
        mean = photon_stats.energy_to_mean_photons(63e-12, WAVELENGTH)
        self.assertAlmostEqual(mean / 3.2667e8, 1.0, delta=1e-3)

    def test_inverse(self):
        energy = photon_stats.mean_photons_to_energy(17.5062, WAVELENGTH)
        self.assertAlmostEqual(energy / 3376.2e-21, 1.0, delta=0.005)

    def test_carrier_wavelength(self):
        self.assertAlmostEqual(
            photon_stats.carrier_wavelength(0.29106) / WAVELENGTH, 1.0,
            delta=1e-4)
        with self.assertRaises(ConfigurationError):
            photon_stats.carrier_wavelength(0.0)

    def test_rejects_negative_energy(self):
        with self.assertRaises(ConfigurationError):
            photon_stats.energy_to_mean_photons(-1e-21, WAVELENGTH)


class TestVacuumStatistics(unittest.TestCase):
    def test_weak_pulse(self):
        dist = PhotonDistribution.poisson(0.0045)
        self.assertAlmostEqual(photon_stats.vacuum_fraction(dist), 0.99551,
                               delta=1e-4)
        self.assertAlmostEqual(photon_stats.single_photon_fraction(dist),
                               0.9978, delta=1e-3)

    def test_empty_pulse(self):
        with self.assertRaises(NumericError):
            photon_stats.single_photon_fraction(PhotonDistribution.poisson(0))
