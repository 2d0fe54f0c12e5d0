#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

"""
Capacity fade equations: SEI growth, loss of active material and their sum,
together with the lookup map of the lumped overpotential parameter X.

All the capacity losses are expressed in percent of the nominal capacity, all
temperatures in kelvin and all states of charge as fractions.
"""

import configparser
import bisect
import math
import io

import numpy as np
import pandas as pd

from collections import namedtuple
from pkgutil import get_data
from twisted.logger import Logger

from . import ConfigurationError, DomainError, ModelValidityError
from . import ValidationError
from .utils import celsius_to_kelvin, kelvin_to_celsius

#: Universal gas constant, J/(mol K)
R = 8.314

#: Smallest allowed value of the SEI denominator 1 + X
X_FLOOR = 0.05

log = Logger()


#-------------------------------------------------------------------------------
class BatteryParams(namedtuple('BatteryParams', [
        'nominal_capacity', 'k_sei', 'e_sei', 'k_am', 'e_am'])):
    """
    Nominal capacity (Ah) and the four fitted aging coefficients: the SEI rate
    prefactor (1/s^0.5) and activation energy (J/mol) and the loss of active
    material rate prefactor (1/Ah) and activation energy (J/mol).
    """

    #---------------------------------------------------------------------------
    def __new__(cls, nominal_capacity, k_sei, e_sei, k_am, e_am):
        values = [float(x) for x in (nominal_capacity, k_sei, e_sei, k_am,
                                     e_am)]
        for name, value in zip(cls._fields, values):
            if not value > 0 or math.isinf(value):
                raise ConfigurationError(
                    '{} must be a positive number, got {}'.format(name, value))
        return super().__new__(cls, *values)


#-------------------------------------------------------------------------------
class FadeState(namedtuple('FadeState', ['age', 'q_sei', 'q_am'])):
    """
    Accumulated capacity loss of a cell of a given age (s).
    """

    #---------------------------------------------------------------------------
    @property
    def q_total(self):
        return self.q_sei + self.q_am


#: State of a fresh cell
FRESH = FadeState(0., 0., 0.)


#-------------------------------------------------------------------------------
def arrhenius(k, e, temp):
    """
    Evaluate the Arrhenius factor `k * exp(-e / (R * temp))`.

    :raises cellfade.DomainError: the temperature is not positive
    """
    if not temp > 0:
        raise DomainError(
            'Absolute temperature must be positive, got {}'.format(temp))
    return k * math.exp(-e / (R * temp))


#-------------------------------------------------------------------------------
def _locate(axis, value):
    """
    Find the grid interval used to interpolate at `value` and the weight of
    its upper node. Outside of the axis the end intervals are used and the
    weight leaves [0, 1], which gives linear extrapolation.
    """
    n = len(axis)
    if n == 1:
        return 0, 0, 0.
    i = bisect.bisect_right(axis, value) - 1
    i = min(max(i, 0), n - 2)
    w = (value - axis[i]) / (axis[i + 1] - axis[i])
    return i, i + 1, w


#-------------------------------------------------------------------------------
def _complete_row(temps, row):
    """
    Fill the gaps of one SOC row by piecewise linear interpolation along the
    temperature axis, extrapolating linearly from the end segments.
    """
    known = [(t, x) for t, x in zip(temps, row) if x is not None]
    if len(known) == 1:
        return [known[0][1]] * len(temps)

    kt = [t for t, _ in known]
    kx = [x for _, x in known]
    completed = []
    for t, x in zip(temps, row):
        if x is not None:
            completed.append(x)
            continue
        i, j, w = _locate(kt, t)
        completed.append((1 - w) * kx[i] + w * kx[j])
    return completed


#-------------------------------------------------------------------------------
class XMap:
    """
    A lookup map of the lumped overpotential parameter X over state of charge
    and temperature. The knots are scattered over a SOC x temperature grid;
    the missing grid cells are filled row by row along the temperature axis
    and the completed grid is interpolated bilinearly. Queries outside of the
    grid are extrapolated linearly and clamped so that `1 + X >= X_FLOOR`.

    :param knots: An iterable of `(soc, temp, x)` triples, temperature in
                  kelvin
    :raises cellfade.ConfigurationError: no knots or duplicate knots
    """

    #---------------------------------------------------------------------------
    def __init__(self, knots):
        self.knots = [(float(s), float(t), float(x)) for s, t, x in knots]
        if not self.knots:
            raise ConfigurationError('The X map needs at least one knot')

        seen = set()
        for soc, temp, x in self.knots:
            if (soc, temp) in seen:
                raise ConfigurationError(
                    'Duplicate X map knot at soc={}, temp={}'.format(soc,
                                                                     temp))
            if not 0 <= soc <= 1:
                raise ConfigurationError(
                    'X map knot SOC outside of [0, 1]: {}'.format(soc))
            if not temp > 0:
                raise ConfigurationError(
                    'X map knot temperature not positive: {}'.format(temp))
            if 1 + x < X_FLOOR:
                log.warn('X map knot {x} at soc={soc}, temp={temp} is below '
                         'the floor and will be clamped', x=x, soc=soc,
                         temp=temp)
            seen.add((soc, temp))

        self.socs = sorted({k[0] for k in self.knots})
        self.temps = sorted({k[1] for k in self.knots})

        cells = {(s, t): x for s, t, x in self.knots}
        self.grid = []
        for soc in self.socs:
            row = [cells.get((soc, t)) for t in self.temps]
            self.grid.append(_complete_row(self.temps, row))
        self._grid_array = np.array(self.grid)

    #---------------------------------------------------------------------------
    def __len__(self):
        return len(self.knots)

    #---------------------------------------------------------------------------
    def _knot_value(self, soc, temp):
        for k_soc, k_temp, x in self.knots:
            if abs(k_soc - soc) <= 1e-9 and abs(k_temp - temp) <= 1e-6:
                return x
        return None

    #---------------------------------------------------------------------------
    def lookup(self, soc, temp):
        """
        Get the value of X at the given state of charge and temperature.

        :raises cellfade.DomainError: SOC outside of [0, 1] or non-positive
                                      temperature
        """
        if not 0 <= soc <= 1:
            raise DomainError('SOC outside of [0, 1]: {}'.format(soc))
        if not temp > 0:
            raise DomainError(
                'Absolute temperature must be positive, got {}'.format(temp))

        x = self._knot_value(soc, temp)
        if x is None:
            i0, i1, ws = _locate(self.socs, soc)
            j0, j1, wt = _locate(self.temps, temp)
            g = self.grid
            low = (1 - wt) * g[i0][j0] + wt * g[i0][j1]
            high = (1 - wt) * g[i1][j0] + wt * g[i1][j1]
            x = (1 - ws) * low + ws * high
        return max(x, X_FLOOR - 1)

    #---------------------------------------------------------------------------
    def lookup_array(self, soc, temp):
        """
        Vectorized version of :meth:`lookup <XMap.lookup>` without the knot
        snapping; it evaluates the same interpolant.
        """
        soc = np.asarray(soc, dtype=float)
        temp = np.asarray(temp, dtype=float)
        if np.any((soc < 0) | (soc > 1)):
            raise DomainError('SOC outside of [0, 1]')
        if np.any(~(temp > 0)):
            raise DomainError('Absolute temperature must be positive')

        def locate(axis, values):
            axis = np.asarray(axis)
            if len(axis) == 1:
                idx = np.zeros(values.shape, dtype=int)
                return idx, idx, np.zeros(values.shape)
            i = np.searchsorted(axis, values, side='right') - 1
            i = np.clip(i, 0, len(axis) - 2)
            w = (values - axis[i]) / (axis[i + 1] - axis[i])
            return i, i + 1, w

        i0, i1, ws = locate(self.socs, soc)
        j0, j1, wt = locate(self.temps, temp)
        g = self._grid_array
        low = (1 - wt) * g[i0, j0] + wt * g[i0, j1]
        high = (1 - wt) * g[i1, j0] + wt * g[i1, j1]
        return np.maximum((1 - ws) * low + ws * high, X_FLOOR - 1)


#-------------------------------------------------------------------------------
def x_lookup(xmap, soc, temp):
    """
    Functional alias of :meth:`XMap.lookup`.
    """
    if xmap is None or len(xmap) == 0:
        raise ConfigurationError('Empty X map')
    return xmap.lookup(soc, temp)


#-------------------------------------------------------------------------------
def q_sei_increment(params, x, temp, t0, t1):
    """
    Capacity loss due to SEI growth accumulated between the cell ages `t0`
    and `t1` (s) at constant temperature and X. The integrand of the SEI law
    has the closed form `k exp(-E/RT) / (1 + X) * sqrt(t)`, so the increment
    is exact for any interval length.

    :raises cellfade.DomainError: `t1 < t0` or negative age
    :raises cellfade.ModelValidityError: `1 + x <= 0`
    """
    if t0 < 0:
        raise DomainError('Cell age must not be negative, got {}'.format(t0))
    if t1 < t0:
        raise DomainError('Interval end {} before its start {}'.format(t1,
                                                                       t0))
    if not 1 + x > 0:
        raise ModelValidityError('1 + X must be positive, got X={}'.format(x))
    rate = arrhenius(params.k_sei, params.e_sei, temp)
    return rate / (1 + x) * (math.sqrt(t1) - math.sqrt(t0))


#-------------------------------------------------------------------------------
def closed_form_q_sei(params, x, temp, t):
    """
    Calendar loss of a cell stored for `t` seconds at constant conditions.
    """
    return q_sei_increment(params, x, temp, 0., t)


#-------------------------------------------------------------------------------
def q_am_increment(params, soc, current, temp, dt):
    """
    Capacity loss due to the loss of active material over a step of `dt`
    seconds at a constant current (A). The charge throughput is converted to
    Ah to match the units of `k_am`.

    :raises cellfade.DomainError: negative `dt` or SOC outside of [0, 1]
    """
    if dt < 0:
        raise DomainError('Negative time step: {}'.format(dt))
    if not 0 <= soc <= 1:
        raise DomainError('SOC outside of [0, 1]: {}'.format(soc))
    rate = arrhenius(params.k_am, params.e_am, temp)
    return rate * soc * abs(current) * dt / 3600.


#-------------------------------------------------------------------------------
def step(state, params, xmap, soc, current, temp, dt):
    """
    Advance the fade state by `dt` seconds under constant conditions. The SEI
    term is evaluated over the absolute age interval `[age, age + dt]` with
    the X found for the current SOC and temperature.
    """
    if not dt > 0:
        raise DomainError('Time step must be positive, got {}'.format(dt))
    x = x_lookup(xmap, soc, temp)
    age = state.age + dt
    q_sei = state.q_sei + q_sei_increment(params, x, temp, state.age, age)
    q_am = state.q_am + q_am_increment(params, soc, current, temp, dt)
    return FadeState(age, q_sei, q_am)


#-------------------------------------------------------------------------------
def integrate(state, params, xmap, dts, soc, current, temp):
    """
    Apply a sequence of steps to the fade state at once. Step `i` lasts
    `dts[i]` seconds during which the SOC, current and temperature hold the
    values at index `i`. The result is the same as calling :func:`step` in
    a loop.

    :return: A tuple of the cumulative `q_sei` and `q_am` arrays at the end of
             every step and the final :class:`FadeState`
    """
    dts = np.asarray(dts, dtype=float)
    soc = np.asarray(soc, dtype=float)
    current = np.asarray(current, dtype=float)
    temp = np.asarray(temp, dtype=float)

    if dts.size == 0:
        return np.empty(0), np.empty(0), state
    if np.any(~(dts > 0)):
        raise DomainError('Time steps must be positive')
    if np.any(~(temp > 0)):
        raise DomainError('Absolute temperature must be positive')

    ages = state.age + np.cumsum(dts)
    starts = np.concatenate(([state.age], ages[:-1]))
    x = xmap.lookup_array(soc, temp)

    sei_rate = params.k_sei * np.exp(-params.e_sei / (R * temp))
    d_sei = sei_rate / (1 + x) * (np.sqrt(ages) - np.sqrt(starts))
    am_rate = params.k_am * np.exp(-params.e_am / (R * temp))
    d_am = am_rate * soc * np.abs(current) * dts / 3600.

    q_sei = state.q_sei + np.cumsum(d_sei)
    q_am = state.q_am + np.cumsum(d_am)
    final = FadeState(float(ages[-1]), float(q_sei[-1]), float(q_am[-1]))
    return q_sei, q_am, final


#-------------------------------------------------------------------------------
# Parameter files
#-------------------------------------------------------------------------------
_PARAM_KEYS = [
    ('nominal_capacity', 'nominal-capacity-ah'),
    ('k_sei', 'k-sei'),
    ('e_sei', 'e-sei'),
    ('k_am', 'k-am'),
    ('e_am', 'e-am')
]


#-------------------------------------------------------------------------------
def load_battery_params(path=None):
    """
    Load the battery parameters from the `[battery]` section of an INI file.
    The packaged parameters of the 2.3 Ah LFP cell are loaded if no path is
    given.

    :raises cellfade.ConfigurationError: missing or invalid values
    """
    conf = configparser.ConfigParser()
    if path is None:
        conf.read_string(get_data(__package__,
                                  'data/lfp_a123.conf').decode('utf-8'))
    else:
        with open(path) as f:
            conf.read_file(f)

    values = {}
    for field, key in _PARAM_KEYS:
        try:
            values[field] = conf.getfloat('battery', key)
        except (configparser.Error, ValueError) as e:
            raise ConfigurationError(
                'Battery parameters: {}'.format(str(e)))
    return BatteryParams(**values)


#-------------------------------------------------------------------------------
def save_battery_params(params, path):
    conf = configparser.ConfigParser()
    conf.add_section('battery')
    for field, key in _PARAM_KEYS:
        conf.set('battery', key, repr(getattr(params, field)))
    with open(path, 'w') as f:
        conf.write(f)


#-------------------------------------------------------------------------------
def load_xmap(path=None):
    """
    Load an X map from a CSV file with the `soc_frac,temp_c,x` header. The
    packaged map of the 2.3 Ah LFP cell is loaded if no path is given.

    :raises cellfade.ValidationError: malformed file
    :raises cellfade.ConfigurationError: no knots
    """
    if path is None:
        data = get_data(__package__, 'data/lfp_a123_xmap.csv').decode('utf-8')
        source = io.StringIO(data)
        name = 'packaged X map'
    else:
        source = path
        name = path

    try:
        df = pd.read_csv(source, comment='#', skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ConfigurationError('Empty X map: {}'.format(name))
    except pd.errors.ParserError as e:
        raise ValidationError('{}: {}'.format(name, str(e)))

    missing = {'soc_frac', 'temp_c', 'x'} - set(df.columns)
    if missing:
        raise ValidationError('{}: missing columns {}'.format(
            name, ', '.join(sorted(missing))))

    df = df[['soc_frac', 'temp_c', 'x']].apply(pd.to_numeric, errors='coerce')
    bad = df.isna().any(axis=1).to_numpy().nonzero()[0]
    if len(bad):
        raise ValidationError('{}: malformed row {}'.format(name, bad[0] + 1))

    knots = [(s, celsius_to_kelvin(t), x)
             for s, t, x in df.itertuples(index=False)]
    return XMap(knots)


#-------------------------------------------------------------------------------
def save_xmap(xmap, path):
    rows = [(s, kelvin_to_celsius(t), x) for s, t, x in xmap.knots]
    df = pd.DataFrame(rows, columns=['soc_frac', 'temp_c', 'x'])
    df.to_csv(path, index=False, float_format='%.12g')
