#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

import unittest
import tempfile
import shutil
import os

import numpy as np

from cellfade.aging import (BatteryParams, FadeState, FRESH, XMap, X_FLOOR,
                            arrhenius, x_lookup, q_sei_increment,
                            closed_form_q_sei, q_am_increment, step,
                            integrate, load_battery_params,
                            save_battery_params, load_xmap, save_xmap)
from cellfade.utils import celsius_to_kelvin
from cellfade import (ConfigurationError, DomainError, ModelValidityError,
                      ValidationError)

from tests.utils import XMAP_KNOTS, T25, T45, DAY, YEAR, write_file


#-------------------------------------------------------------------------------
class XMapTests(unittest.TestCase):

    #---------------------------------------------------------------------------
    def setUp(self):
        self.xmap = load_xmap()

    #---------------------------------------------------------------------------
    def test_knots(self):
        self.assertEqual(len(self.xmap), 7)
        for soc, temp_c, x in XMAP_KNOTS:
            self.assertEqual(self.xmap.lookup(soc, celsius_to_kelvin(temp_c)),
                             x)
        # Tiny rounding noise in the query still snaps to the knot
        self.assertEqual(self.xmap.lookup(0.5 + 1e-12, T45 + 1e-8), 0.2841)

    #---------------------------------------------------------------------------
    def test_completed_grid(self):
        self.assertEqual(self.xmap.socs, [0.3, 0.5, 1.0])
        grid = self.xmap.grid
        self.assertAlmostEqual(grid[0][0], 1.819233333, places=6)
        self.assertAlmostEqual(grid[0][3], 0.4435, places=9)
        self.assertAlmostEqual(grid[1][1], 0.593775, places=9)
        self.assertAlmostEqual(grid[1][3], -0.025575, places=9)
        self.assertAlmostEqual(grid[2][1], 0.044425, places=9)

    #---------------------------------------------------------------------------
    def test_interpolation(self):
        self.assertAlmostEqual(self.xmap.lookup(0.75, T25), 0.3726, places=9)
        self.assertAlmostEqual(self.xmap.lookup(0.3, T25), 1.819233333,
                               places=6)
        self.assertAlmostEqual(
            self.xmap.lookup(0.4, celsius_to_kelvin(35.)), 0.958358333,
            places=6)

        socs = [0.75, 0.4, 0.5, 1.0]
        temps = [T25, celsius_to_kelvin(35.), T45, celsius_to_kelvin(60.)]
        expected = [self.xmap.lookup(s, t) for s, t in zip(socs, temps)]
        np.testing.assert_allclose(self.xmap.lookup_array(socs, temps),
                                   expected, rtol=0, atol=1e-12)

    #---------------------------------------------------------------------------
    def test_floor(self):
        socs = np.linspace(0, 1, 100)
        temps = celsius_to_kelvin(np.linspace(-20, 100, 100))
        grid_soc, grid_temp = np.meshgrid(socs, temps)
        values = self.xmap.lookup_array(grid_soc.ravel(), grid_temp.ravel())
        self.assertTrue(np.all(1 + values >= X_FLOOR - 1e-12))
        self.assertAlmostEqual(
            self.xmap.lookup(1., celsius_to_kelvin(200.)), X_FLOOR - 1)

    #---------------------------------------------------------------------------
    def test_errors(self):
        with self.assertRaises(DomainError):
            self.xmap.lookup(1.2, T25)
        with self.assertRaises(DomainError):
            self.xmap.lookup(0.5, 0.)
        with self.assertRaises(DomainError):
            self.xmap.lookup_array([0.5, -0.1], [T25, T25])
        with self.assertRaises(ConfigurationError):
            XMap([])
        with self.assertRaises(ConfigurationError):
            XMap([(0.5, T25, 0.1), (0.5, T25, 0.2)])
        with self.assertRaises(ConfigurationError):
            XMap([(1.5, T25, 0.1)])
        with self.assertRaises(ConfigurationError):
            x_lookup(None, 0.5, T25)

    #---------------------------------------------------------------------------
    def test_single_knot(self):
        xmap = XMap([(0.5, T25, 0.3)])
        self.assertEqual(xmap.lookup(0.9, T45), 0.3)
        self.assertEqual(xmap.lookup_array([0.1], [T45])[0], 0.3)


#-------------------------------------------------------------------------------
class FadeEquationTests(unittest.TestCase):

    #---------------------------------------------------------------------------
    def setUp(self):
        self.params = load_battery_params()
        self.xmap = load_xmap()

    #---------------------------------------------------------------------------
    def test_params(self):
        self.assertEqual(self.params.nominal_capacity, 2.3)
        self.assertEqual(self.params.k_sei, 7350.)
        with self.assertRaises(ConfigurationError):
            BatteryParams(2.3, -1., 4e4, 1., 4e4)
        with self.assertRaises(ConfigurationError):
            BatteryParams(2.3, float('inf'), 4e4, 1., 4e4)

    #---------------------------------------------------------------------------
    def test_arrhenius(self):
        self.assertLess(arrhenius(1., 4e4, T25), arrhenius(1., 4e4, T45))
        self.assertAlmostEqual(arrhenius(7350., 39333., T45), 2.56016e-3,
                               delta=2.56016e-3 * 1e-4)
        self.assertAlmostEqual(arrhenius(1.1798, 39111., T25), 1.65759e-7,
                               delta=1.65759e-7 * 1e-4)
        with self.assertRaises(DomainError):
            arrhenius(1., 4e4, 0.)

    #---------------------------------------------------------------------------
    def test_closed_form(self):
        q = closed_form_q_sei(self.params, 0.2841, T45, YEAR)
        self.assertAlmostEqual(q, 11.2, delta=0.1)

        q1 = closed_form_q_sei(self.params, 0.2841, T45, YEAR)
        q4 = closed_form_q_sei(self.params, 0.2841, T45, 4 * YEAR)
        self.assertAlmostEqual(q4 / q1, 2., places=12)

        self.assertEqual(closed_form_q_sei(self.params, 0.2841, T45, 0.), 0.)

    #---------------------------------------------------------------------------
    def test_sei_errors(self):
        with self.assertRaises(ModelValidityError):
            q_sei_increment(self.params, -1., T45, 0., DAY)
        with self.assertRaises(DomainError):
            q_sei_increment(self.params, 0.2, T45, DAY, 0.)
        with self.assertRaises(DomainError):
            q_sei_increment(self.params, 0.2, T45, -1., DAY)

    #---------------------------------------------------------------------------
    def test_am_increment(self):
        q = q_am_increment(self.params, 0.5, 2.3, T25, 3600.)
        self.assertAlmostEqual(q, 1.9062e-7, delta=1.9062e-7 * 1e-4)
        self.assertAlmostEqual(
            q_am_increment(self.params, 0.5, -4.6, T25, 3600.), 2 * q)
        self.assertAlmostEqual(
            q_am_increment(self.params, 1., 2.3, T25, 3600.), 2 * q)
        self.assertEqual(q_am_increment(self.params, 0.5, 0., T25, 3600.), 0)
        self.assertEqual(q_am_increment(self.params, 0., 2.3, T25, 3600.), 0)
        with self.assertRaises(DomainError):
            q_am_increment(self.params, 0.5, 2.3, T25, -1.)
        with self.assertRaises(DomainError):
            q_am_increment(self.params, 1.5, 2.3, T25, 1.)

    #---------------------------------------------------------------------------
    def test_stepping_matches_closed_form(self):
        state = FRESH
        for _ in range(365):
            state = step(state, self.params, self.xmap, 0.5, 0., T45, DAY)
        expected = closed_form_q_sei(self.params, 0.2841, T45, YEAR)
        self.assertAlmostEqual(state.age, YEAR)
        self.assertAlmostEqual(state.q_sei, expected, delta=1e-6 * expected)
        self.assertEqual(state.q_am, 0.)

        n = 8760
        q_sei, q_am, final = integrate(FRESH, self.params, self.xmap,
                                       np.full(n, 3600.), np.full(n, 0.5),
                                       np.zeros(n), np.full(n, T45))
        self.assertEqual(len(q_sei), n)
        self.assertAlmostEqual(final.q_sei, expected, delta=1e-6 * expected)
        self.assertEqual(final.q_total, final.q_sei)

    #---------------------------------------------------------------------------
    def test_integrate_matches_step(self):
        rng = np.random.default_rng(1)
        n = 200
        dts = rng.uniform(1., 3600., n)
        soc = rng.uniform(0., 1., n)
        current = rng.uniform(-5., 5., n)
        temp = celsius_to_kelvin(rng.uniform(0., 60., n))

        state = FadeState(DAY, 0.5, 0.1)
        for i in range(n):
            state = step(state, self.params, self.xmap, soc[i], current[i],
                         temp[i], dts[i])
        _, _, final = integrate(FadeState(DAY, 0.5, 0.1), self.params,
                                self.xmap, dts, soc, current, temp)
        self.assertAlmostEqual(final.age, state.age, places=6)
        self.assertAlmostEqual(final.q_sei, state.q_sei, places=9)
        self.assertAlmostEqual(final.q_am, state.q_am, places=9)

    #---------------------------------------------------------------------------
    def test_monotonic(self):
        rng = np.random.default_rng(2)
        n = 1000000
        q_sei, q_am, final = integrate(
            FRESH, self.params, self.xmap, rng.uniform(1., 600., n),
            rng.uniform(0., 1., n), rng.uniform(-10., 10., n),
            celsius_to_kelvin(rng.uniform(-10., 70., n)))
        self.assertTrue(np.all(np.diff(q_sei) >= 0))
        self.assertTrue(np.all(np.diff(q_am) >= 0))
        self.assertGreater(final.q_total, 0)

    #---------------------------------------------------------------------------
    def test_step_errors(self):
        with self.assertRaises(DomainError):
            step(FRESH, self.params, self.xmap, 0.5, 0., T25, 0.)
        with self.assertRaises(DomainError):
            integrate(FRESH, self.params, self.xmap, [1., 0.], [0.5, 0.5],
                      [0., 0.], [T25, T25])
        q_sei, q_am, final = integrate(FRESH, self.params, self.xmap, [], [],
                                       [], [])
        self.assertEqual(len(q_sei), 0)
        self.assertEqual(final, FRESH)


#-------------------------------------------------------------------------------
class ParameterFileTests(unittest.TestCase):

    #---------------------------------------------------------------------------
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    #---------------------------------------------------------------------------
    def test_params_file(self):
        params = BatteryParams(2.3, 1234.5, 41000., 0.75, 38000.)
        path = os.path.join(self.tmp, 'battery.conf')
        save_battery_params(params, path)
        self.assertEqual(load_battery_params(path), params)

        path = write_file(self.tmp, 'bad.conf',
                          '[battery]\nnominal-capacity-ah = 2.3\n')
        with self.assertRaises(ConfigurationError):
            load_battery_params(path)

    #---------------------------------------------------------------------------
    def test_xmap_file(self):
        xmap = load_xmap()
        path = os.path.join(self.tmp, 'xmap.csv')
        save_xmap(xmap, path)
        loaded = load_xmap(path)
        for (s0, t0, x0), (s1, t1, x1) in zip(xmap.knots, loaded.knots):
            self.assertEqual((s0, x0), (s1, x1))
            self.assertAlmostEqual(t0, t1, places=9)

        path = write_file(self.tmp, 'bad.csv',
                          'soc_frac,temp_c,x\n0.5,25,0.1\n0.5,foo,0.2\n')
        with self.assertRaises(ValidationError) as cm:
            load_xmap(path)
        self.assertIn('row 2', str(cm.exception))

        path = write_file(self.tmp, 'cols.csv', 'soc,temp_c,x\n0.5,25,0.1\n')
        with self.assertRaises(ValidationError):
            load_xmap(path)

        path = write_file(self.tmp, 'empty.csv', '')
        with self.assertRaises(ConfigurationError):
            load_xmap(path)

    #---------------------------------------------------------------------------
    def tearDown(self):
        shutil.rmtree(self.tmp)
