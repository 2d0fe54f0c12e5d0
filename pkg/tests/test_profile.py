#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

import unittest
import tempfile
import shutil
import os

import numpy as np

from cellfade.profile import (CurrentProfile, segments, throughput,
                              net_charge, resample, tile, scale,
                              constant_profile, generate_cycle,
                              generate_hev_cycle, load_profile_csv,
                              save_profile_csv)
from cellfade import DomainError, ValidationError

from tests.utils import T25, T45, write_file


#-------------------------------------------------------------------------------
class ProfileTests(unittest.TestCase):

    #---------------------------------------------------------------------------
    def test_validation(self):
        with self.assertRaises(ValidationError):
            CurrentProfile([], [], [], 10.)
        with self.assertRaises(ValidationError):
            CurrentProfile([1.], [0.], [T25], 10.)
        with self.assertRaises(ValidationError):
            CurrentProfile([0., 5., 5.], [0., 1., 2.], [T25] * 3, 10.)
        with self.assertRaises(ValidationError):
            CurrentProfile([0.], [0.], [0.], 10.)
        with self.assertRaises(ValidationError):
            CurrentProfile([0., 5.], [0., 1.], [T25] * 2, 4.)
        with self.assertRaises(ValidationError):
            CurrentProfile([0., 5.], [0., 1.], [T25], 10.)

        profile = CurrentProfile([0., 5.], [1., 2.], [T25] * 2, 10., True)
        self.assertEqual(profile.period, 10.)
        np.testing.assert_array_equal(profile.holds, [5., 5.])

    #---------------------------------------------------------------------------
    def test_cycle(self):
        cycle = generate_cycle(2.3, 0.2, 0.8, 1., 1., 600., T25)
        np.testing.assert_allclose(cycle.times, [0., 2160., 2760., 4920.])
        np.testing.assert_allclose(cycle.currents, [-2.3, 0., 2.3, 0.])
        self.assertAlmostEqual(cycle.duration, 5520.)
        self.assertTrue(cycle.periodic)
        self.assertAlmostEqual(throughput(cycle), 2.76)
        self.assertAlmostEqual(net_charge(cycle), 0.)

        cycle = generate_cycle(2.3, 0.2, 0.8, 2., 1., 0., T25)
        np.testing.assert_allclose(cycle.times, [0., 1080.])
        self.assertAlmostEqual(cycle.duration, 3240.)

        cycle = generate_cycle(2.3, 0.2, 0.8, 1., 1., 0., T25,
                               throughput=0.46)
        self.assertAlmostEqual(throughput(cycle), 0.46)

        with self.assertRaises(DomainError):
            generate_cycle(2.3, 0.8, 0.2, 1., 1., 0., T25)
        with self.assertRaises(DomainError):
            generate_cycle(2.3, 0.2, 0.8, 0., 1., 0., T25)
        with self.assertRaises(DomainError):
            generate_cycle(2.3, 0.2, 0.8, 1., 1., -1., T25)

    #---------------------------------------------------------------------------
    def test_cycle_window(self):
        cycle = generate_cycle(2.3, 0.2, 0.95, 1., 1., 0., T25)
        self.assertAlmostEqual(throughput(cycle), 3.45, delta=1e-12)

        cycle = generate_cycle(2.3, 0., 1., 1., 1., 0., T25)
        self.assertAlmostEqual(cycle.duration, 7200.)
        np.testing.assert_allclose(cycle.times, [0., 3600.])

        low_c = generate_cycle(2.3, 0.2, 0.95, 0.5, 0.5, 0., T25,
                               throughput=3.6)
        self.assertAlmostEqual(throughput(low_c), 3.6, delta=1e-12)
        np.testing.assert_allclose(np.abs(low_c.currents), [1.15, 1.15])
        self.assertAlmostEqual(net_charge(low_c), 0., delta=1e-12)

    #---------------------------------------------------------------------------
    def test_hev(self):
        hev = generate_hev_cycle(2.3, 0.345, T45)
        self.assertAlmostEqual(hev.duration, 370.)
        self.assertTrue(hev.periodic)
        self.assertAlmostEqual(throughput(hev), 0.345)
        self.assertAlmostEqual(net_charge(hev), 0.)
        self.assertTrue(np.all(hev.temps == T45))

        with self.assertRaises(DomainError):
            generate_hev_cycle(2.3, 0., T45)

    #---------------------------------------------------------------------------
    def test_hev_scaling(self):
        hev = generate_hev_cycle(2.3, 0.48, T25)
        self.assertAlmostEqual(throughput(hev), 0.48, delta=1e-9)
        self.assertAlmostEqual(net_charge(hev), 0., delta=1e-9)

        double = generate_hev_cycle(2.3, 0.96, T25)
        np.testing.assert_allclose(double.currents, 2 * hev.currents)
        np.testing.assert_array_equal(double.times, hev.times)
        self.assertAlmostEqual(throughput(double), 0.96, delta=1e-9)

        fine = resample(hev, 7.)
        self.assertAlmostEqual(throughput(fine), throughput(hev),
                               delta=1e-12)

    #---------------------------------------------------------------------------
    def test_segments(self):
        profile = CurrentProfile([0., 4.], [1., -1.], [T25] * 2, 10., True)
        seg = segments(profile, 25.)
        np.testing.assert_array_equal(seg.starts, [0., 4., 10., 14., 20.,
                                                   24.])
        np.testing.assert_array_equal(seg.ends, [4., 10., 14., 20., 24.,
                                                 25.])
        np.testing.assert_array_equal(seg.currents, [1., -1.] * 3)

        profile = CurrentProfile([0., 4.], [1., -1.], [T25] * 2, 10.)
        seg = segments(profile, 25.)
        np.testing.assert_array_equal(seg.starts, [0., 4.])
        np.testing.assert_array_equal(seg.ends, [4., 25.])

        seg = segments(profile, 3.)
        np.testing.assert_array_equal(seg.ends, [3.])

        with self.assertRaises(DomainError):
            segments(profile, 0.)

    #---------------------------------------------------------------------------
    def test_transforms(self):
        cycle = generate_cycle(2.3, 0.2, 0.8, 1., 1., 600., T25)

        fine = resample(cycle, 100.)
        self.assertTrue(np.all(fine.holds <= 100. + 1e-9))
        self.assertAlmostEqual(throughput(fine), throughput(cycle))
        self.assertEqual(fine.duration, cycle.duration)

        tiled = tile(cycle, 3)
        self.assertFalse(tiled.periodic)
        self.assertAlmostEqual(tiled.duration, 3 * cycle.duration)
        self.assertAlmostEqual(throughput(tiled), 3 * throughput(cycle))
        with self.assertRaises(DomainError):
            tile(tiled, 2)

        scaled = scale(cycle, 0.5)
        self.assertAlmostEqual(throughput(scaled), 0.5 * throughput(cycle))

        rest = constant_profile(0., T45, 100.)
        self.assertEqual(throughput(rest), 0.)
        self.assertFalse(rest.periodic)


#-------------------------------------------------------------------------------
class ProfileFileTests(unittest.TestCase):

    #---------------------------------------------------------------------------
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    #---------------------------------------------------------------------------
    def test_round_trip(self):
        hev = generate_hev_cycle(2.3, 0.345, T45)
        path = os.path.join(self.tmp, 'hev.csv')
        save_profile_csv(hev, path)
        loaded = load_profile_csv(path, T25)
        self.assertTrue(loaded.periodic)
        np.testing.assert_allclose(loaded.times, hev.times)
        np.testing.assert_allclose(loaded.currents, hev.currents)
        np.testing.assert_allclose(loaded.temps, hev.temps)

    #---------------------------------------------------------------------------
    def test_load(self):
        path = write_file(self.tmp, 'a.csv',
                          'time_s,current_a\n0,1.0\n10,-1.0\n')
        profile = load_profile_csv(path, T45)
        self.assertFalse(profile.periodic)
        self.assertEqual(profile.duration, 20.)
        self.assertTrue(np.all(profile.temps == T45))

        path = write_file(self.tmp, 'b.csv',
                          '# end_s=100\ntime_s,current_a,temp_c\n0,1.0,45\n')
        profile = load_profile_csv(path, T25)
        self.assertEqual(profile.duration, 100.)
        self.assertAlmostEqual(profile.temps[0], T45)

    #---------------------------------------------------------------------------
    def test_errors(self):
        with self.assertRaises(ValidationError):
            load_profile_csv(os.path.join(self.tmp, 'missing.csv'), T25)

        path = write_file(self.tmp, 'bad.csv',
                          'time_s,current_a\n0,1.0\nabc,2.0\n')
        with self.assertRaises(ValidationError) as cm:
            load_profile_csv(path, T25)
        self.assertIn('row 2', str(cm.exception))

        path = write_file(self.tmp, 'order.csv',
                          'time_s,current_a\n0,1.0\n10,2.0\n5,2.0\n')
        with self.assertRaises(ValidationError) as cm:
            load_profile_csv(path, T25)
        self.assertIn('row 3', str(cm.exception))

        path = write_file(self.tmp, 'header.csv', 'time,current\n0,1.0\n')
        with self.assertRaises(ValidationError):
            load_profile_csv(path, T25)

        path = write_file(self.tmp, 'single.csv', 'time_s,current_a\n0,1.0\n')
        with self.assertRaises(ValidationError):
            load_profile_csv(path, T25)

        path = write_file(self.tmp, 'period.csv',
                          '# period_s=foo\ntime_s,current_a\n0,1.0\n')
        with self.assertRaises(ValidationError):
            load_profile_csv(path, T25)

        path = write_file(self.tmp, 'empty.csv', '')
        with self.assertRaises(ValidationError):
            load_profile_csv(path, T25)

    #---------------------------------------------------------------------------
    def tearDown(self):
        shutil.rmtree(self.tmp)
