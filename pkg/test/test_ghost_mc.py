import math
import unittest

import numpy as np
import scipy.stats as stats

from fieldoscopysim import ghost_mc, photon_stats, results_io
from fieldoscopysim.errors import ConfigurationError
from fieldoscopysim.photon_stats import PhotonDistribution
from test import test_data


class TestShotModel(unittest.TestCase):
    def test_min_rule(self):
        self.assertEqual(ghost_mc.shg_photons(10, 20), 10)
        self.assertEqual(ghost_mc.sfg_photons(7, 3), 3)

    def test_signal_amplitude(self):
        self.assertEqual(ghost_mc.signal_amplitude(4, 9), 12.0)

    def test_vacuum_test_pulse(self):
        config = test_data.mc_config(PhotonDistribution.poisson(0.0),
                                     shots=1000)
        rng = np.random.default_rng(0)
        self.assertEqual(ghost_mc.simulate_shot(config, rng), 0.0)
        statistics = ghost_mc.run_ensemble(config)
        self.assertEqual(statistics.mean_signal, 0.0)
        self.assertEqual(statistics.std_signal, 0.0)

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            test_data.mc_config(PhotonDistribution.poisson(1.0), shots=0)
        with self.assertRaises(ConfigurationError):
            ghost_mc.McConfig(PhotonDistribution.poisson(0.0))
        with self.assertRaises(ConfigurationError):
            test_data.mc_config(PhotonDistribution.poisson(1.0), seed=-1)

    def test_single_shot_has_no_spread(self):
        config = test_data.mc_config(PhotonDistribution.poisson(1.0),
                                     shots=1)
        with self.assertRaises(ConfigurationError):
            ghost_mc.run_ensemble(config)


class TestEnsemble(unittest.TestCase):
    def test_deterministic(self):
        config = test_data.mc_config(PhotonDistribution.poisson(1.0),
                                     shots=5000, seed=42)
        self.assertEqual(ghost_mc.run_ensemble(config),
                         ghost_mc.run_ensemble(config))
        other = test_data.mc_config(PhotonDistribution.poisson(1.0),
                                    shots=5000, seed=43)
        self.assertNotEqual(ghost_mc.run_ensemble(config).mean_signal,
                            ghost_mc.run_ensemble(other).mean_signal)

    def test_chunks_match_samples(self):
        config = test_data.mc_config(PhotonDistribution.bose_einstein(2.0),
                                     shots=5000, seed=5)
        samples = ghost_mc.shot_amplitudes(config, chunk_size=1000)
        statistics = ghost_mc.run_ensemble(config, chunk_size=1000)
        self.assertEqual(len(samples), 5000)
        self.assertAlmostEqual(statistics.mean_signal, np.mean(samples),
                               delta=1e-9 * np.mean(samples))
        self.assertAlmostEqual(statistics.std_signal,
                               np.std(samples, ddof=1),
                               delta=1e-9 * np.std(samples))

    def test_combine_statistics(self):
        rng = np.random.default_rng(1)
        first = rng.normal(3.0, 2.0, 700)
        second = rng.normal(1.0, 5.0, 300)
        pooled = ghost_mc.combine_statistics(
            ghost_mc.ShotStatistics(np.mean(first), np.std(first, ddof=1),
                                    700),
            ghost_mc.ShotStatistics(np.mean(second), np.std(second, ddof=1),
                                    300))
        both = np.concatenate([first, second])
        self.assertEqual(pooled.shots, 1000)
        self.assertAlmostEqual(pooled.mean_signal, np.mean(both), places=10)
        self.assertAlmostEqual(pooled.std_signal, np.std(both, ddof=1),
                               places=10)

    def test_matches_oracle(self):
        shots = 100000
        for dist in (PhotonDistribution.poisson(1.0),
                     PhotonDistribution.bose_einstein(1.0),
                     PhotonDistribution.mixture(1.0, 0.5)):
            for mean in test_data.REFERENCE_GRID:
                config = test_data.mc_config(dist.with_mean(mean), shots,
                                             seed=7)
                samples = ghost_mc.shot_amplitudes(config)
                statistics = ghost_mc.run_ensemble(config)
                oracle = ghost_mc.model_curve_oracle(dist, [mean]).points[0]
                with self.subTest(kind=dist.kind, mean=mean):
                    mean_error = oracle.raw_std / math.sqrt(shots)
                    self.assertAlmostEqual(statistics.mean_signal,
                                           oracle.raw_mean,
                                           delta=5 * mean_error)
                    kurtosis = stats.kurtosis(samples, fisher=False)
                    std_error = oracle.raw_std * math.sqrt(
                        (kurtosis - 1) / (4 * shots))
                    self.assertAlmostEqual(statistics.std_signal,
                                           oracle.raw_std,
                                           delta=5 * std_error)

    def test_vacuum_shots(self):
        dist = PhotonDistribution.poisson(0.0045)
        config = test_data.mc_config(dist, shots=100000, seed=9)
        p_zero = photon_stats.vacuum_fraction(dist)
        tolerance = 5 * math.sqrt(p_zero * (1 - p_zero) / config.shots)
        self.assertAlmostEqual(ghost_mc.vacuum_shot_fraction(config), p_zero,
                               delta=tolerance)
        self.assertGreater(ghost_mc.run_ensemble(config).mean_signal, 0.0)


class TestOracle(unittest.TestCase):
    def test_poisson_mean_at_one_photon(self):
        curve = ghost_mc.model_curve_oracle(PhotonDistribution.poisson(1.0),
                                            [1.0])
        self.assertAlmostEqual(curve.points[0].raw_mean / 1546.0, 1.0,
                               delta=0.01)

    def test_vacuum_grid_point(self):
        for kind in photon_stats.KINDS:
            curve = ghost_mc.model_curve_oracle(
                PhotonDistribution(kind, 1.0, 0.5), [0.0, 1.0])
            self.assertEqual(curve.points[0].raw_mean, 0.0)
            self.assertEqual(curve.points[0].norm_mean, 0.0)

    def test_poisson_breakdown(self):
        curve = ghost_mc.model_curve_oracle(PhotonDistribution.poisson(1.0),
                                            test_data.REFERENCE_GRID)
        norm_mean = dict(zip(curve.mean_photons, curve.column('norm_mean')))
        self.assertTrue(0.70 <= norm_mean[1.1024] <= 0.85)
        self.assertTrue(0.10 <= norm_mean[0.0165] <= 0.16)
        peak = curve.mean_photons[np.argmax(curve.column('norm_std'))]
        self.assertTrue(0.8 <= peak <= 2.2)

    def test_thermal_std_monotone(self):
        curve = ghost_mc.model_curve_oracle(
            PhotonDistribution.bose_einstein(1.0), test_data.REFERENCE_GRID)
        self.assertTrue(np.all(np.diff(curve.column('norm_std')) > 0))

    def test_min_moments_of_vacuum(self):
        self.assertEqual(
            ghost_mc.min_sqrt_moments(PhotonDistribution.poisson(5.0),
                                      PhotonDistribution.poisson(0.0)),
            (0.0, 0.0))


class TestScalingSweep(unittest.TestCase):
    def test_poisson_sweep(self):
        base = test_data.mc_config(PhotonDistribution.poisson(1.0), 100000,
                                   seed=42)
        curve = ghost_mc.scaling_sweep(base, test_data.REFERENCE_GRID)
        np.testing.assert_array_equal(curve.mean_photons,
                                      sorted(test_data.REFERENCE_GRID))
        self.assertEqual(curve.normalization_anchor, 17.5062)
        self.assertEqual(curve.points[-1].norm_mean, 1.0)
        self.assertEqual(curve.points[-1].norm_std, 1.0)

        norm_mean = dict(zip(curve.mean_photons, curve.column('norm_mean')))
        self.assertTrue(0.70 <= norm_mean[1.1024] <= 0.85)
        self.assertTrue(0.10 <= norm_mean[0.0165] <= 0.16)
        self.assertTrue(np.all(np.diff(curve.column('raw_mean')) >= 0))
        peak = curve.mean_photons[np.argmax(curve.column('norm_std'))]
        self.assertTrue(0.8 <= peak <= 2.2)
        self.assertGreater(curve.peak_to_anchor_ratio(), 1.0)

    def test_thermal_sweep(self):
        base = test_data.mc_config(PhotonDistribution.bose_einstein(1.0),
                                   100000, seed=42)
        curve = ghost_mc.scaling_sweep(base, test_data.REFERENCE_GRID)
        self.assertEqual(curve.kind, photon_stats.BOSE_EINSTEIN)
        self.assertEqual(curve.coherent_fraction, 0.0)
        self.assertTrue(np.all(np.diff(curve.column('norm_std')) > 0))
        self.assertLess(curve.peak_to_anchor_ratio(), 1.0)

    def test_classical_limit(self):
        base = test_data.mc_config(PhotonDistribution.poisson(1.0), 10000,
                                   seed=1)
        curve = ghost_mc.scaling_sweep(base, [1e4, 3e4, 1e5])
        scaled = curve.column('raw_mean') / np.sqrt(curve.mean_photons)
        self.assertLess(np.ptp(scaled) / np.mean(scaled), 0.01)
        self.assertTrue(np.all(curve.column('norm_mean') >= 0.99))

    def test_independent_of_workers(self):
        base = test_data.mc_config(PhotonDistribution.mixture(1.0, 0.5),
                                   2000, seed=3)
        grid = [0.1, 1.0, 10.0]
        serial = ghost_mc.scaling_sweep(base, grid, workers=1)
        threaded = ghost_mc.scaling_sweep(base, grid, workers=3)
        self.assertEqual(serial, threaded)

    def test_rejects_bad_grid(self):
        base = test_data.mc_config(PhotonDistribution.poisson(1.0), 100)
        with self.assertRaises(ConfigurationError):
            ghost_mc.scaling_sweep(base, [])
        with self.assertRaises(ConfigurationError):
            ghost_mc.scaling_sweep(base, [0.0, 1.0])


class TestNormalization(unittest.TestCase):
    def test_sorted_and_anchored(self):
        curve = ghost_mc.normalize_curve([4.0, 1.0], [6.0, 2.0], [3.0, 1.5])
        np.testing.assert_array_equal(curve.mean_photons, [1.0, 4.0])
        np.testing.assert_allclose(curve.column('norm_mean'), [2 / 3, 1.0])
        np.testing.assert_allclose(curve.column('norm_std'), [0.5, 1.0])

    def test_zero_anchor(self):
        with self.assertLogs('fieldoscopysim.ghost_mc', level='WARNING'):
            curve = ghost_mc.normalize_curve([1.0, 2.0], [0.0, 0.0],
                                             [0.0, 0.0])
        self.assertTrue(np.all(curve.column('norm_std') == 0))


class TestScalingCsv(unittest.TestCase):
    def setUp(self):
        self.output = test_data.OutputDirectory()

    def tearDown(self):
        self.output.cleanup()

    def test_header_and_rows(self):
        curves = [ghost_mc.model_curve_oracle(PhotonDistribution(kind, 1.0,
                                                                 0.5),
                                              [0.5, 1.0, 2.0])
                  for kind in photon_stats.KINDS]
        path = self.output.join('scaling.csv')
        ghost_mc.write_scaling_csv(curves, path)
        self.assertEqual(
            test_data.read_header(path),
            'mean_photons,raw_mean,raw_std,norm_mean,norm_std,kind,'
            'coherent_fraction,shots,seed')
        header, rows = results_io.load_table(path, results_io.SCALING_HEADER)
        self.assertEqual(len(rows), 9)
        self.assertEqual([row[5] for row in rows[::3]],
                         list(photon_stats.KINDS))
