#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

"""
Current and temperature profiles driving the simulations. A sample holds its
current and temperature from its own time stamp until the time stamp of the
next sample (zero-order hold). Positive current discharges the cell.
"""

import math

import numpy as np
import pandas as pd

from collections import namedtuple

from . import DomainError, ValidationError
from .utils import celsius_to_kelvin, kelvin_to_celsius
from .utils import parse_header_comments


#-------------------------------------------------------------------------------
Segments = namedtuple('Segments', ['starts', 'ends', 'currents', 'temps'])


#-------------------------------------------------------------------------------
class CurrentProfile:
    """
    A time series of current and temperature samples.

    :param times:    Sample times (s), strictly increasing from 0
    :param currents: Currents (A)
    :param temps:    Temperatures (K)
    :param duration: End of the hold of the last sample (s); for periodic
                     profiles this is the period
    :param periodic: Whether the profile repeats itself
    :param name:     An identifier used in reports
    :raises cellfade.ValidationError: the invariants are violated
    """

    #---------------------------------------------------------------------------
    def __init__(self, times, currents, temps, duration, periodic=False,
                 name='profile'):
        self.times = np.array(times, dtype=float)
        self.currents = np.array(currents, dtype=float)
        self.temps = np.array(temps, dtype=float)
        self.duration = float(duration)
        self.periodic = bool(periodic)
        self.name = name

        if self.times.size == 0:
            raise ValidationError('A profile needs at least one sample')
        if not (self.times.shape == self.currents.shape == self.temps.shape):
            raise ValidationError('Profile columns differ in length')
        if self.times[0] != 0:
            raise ValidationError('Profile times must start at 0')
        steps = np.diff(self.times)
        if np.any(~(steps > 0)):
            row = int(np.argmax(~(steps > 0))) + 2
            raise ValidationError(
                'Profile times not strictly increasing at row {}'.format(row))
        if np.any(~(self.temps > 0)):
            row = int(np.argmax(~(self.temps > 0))) + 1
            raise ValidationError(
                'Non-positive temperature at row {}'.format(row))
        if not np.all(np.isfinite(self.currents)):
            raise ValidationError('Profile currents must be finite')
        if not self.duration >= self.times[-1] or self.duration <= 0:
            raise ValidationError(
                'Profile duration {} does not cover the samples'.format(
                    self.duration))

    #---------------------------------------------------------------------------
    @property
    def period(self):
        return self.duration if self.periodic else None

    #---------------------------------------------------------------------------
    @property
    def holds(self):
        """
        Duration of every sample's hold.
        """
        return np.diff(np.append(self.times, self.duration))

    #---------------------------------------------------------------------------
    def __len__(self):
        return len(self.times)

    #---------------------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, CurrentProfile):
            return NotImplemented
        return (np.array_equal(self.times, other.times) and
                np.array_equal(self.currents, other.currents) and
                np.array_equal(self.temps, other.temps) and
                self.duration == other.duration and
                self.periodic == other.periodic)

    #---------------------------------------------------------------------------
    def __repr__(self):
        s = 'CurrentProfile[name="{}", samples={}, duration={}, periodic={}]'
        return s.format(self.name, len(self), self.duration, self.periodic)


#-------------------------------------------------------------------------------
def segments(profile, horizon):
    """
    Expand the profile into zero-order-hold segments covering `[0, horizon]`.
    Periodic profiles are tiled; non-periodic ones keep holding the last
    sample past their duration. Zero-length holds are dropped.
    """
    if not horizon > 0:
        raise DomainError('Horizon must be positive, got {}'.format(horizon))

    holds = profile.holds
    keep = holds > 0
    starts = profile.times[keep]
    currents = profile.currents[keep]
    temps = profile.temps[keep]

    if profile.periodic:
        n = int(math.ceil(horizon / profile.duration))
        offsets = np.repeat(np.arange(n) * profile.duration, len(starts))
        starts = np.tile(starts, n) + offsets
        currents = np.tile(currents, n)
        temps = np.tile(temps, n)

    inside = starts < horizon
    starts = starts[inside]
    currents = currents[inside]
    temps = temps[inside]
    ends = np.append(starts[1:], horizon)
    return Segments(starts, ends, currents, temps)


#-------------------------------------------------------------------------------
def throughput(profile):
    """
    Charge moved by one period of the profile (or by the whole of
    a non-periodic one), in Ah.
    """
    return float(np.sum(np.abs(profile.currents) * profile.holds) / 3600.)


#-------------------------------------------------------------------------------
def net_charge(profile):
    """
    Charge removed from the cell over one period (Ah); negative if the
    profile charges the cell.
    """
    return float(np.sum(profile.currents * profile.holds) / 3600.)


#-------------------------------------------------------------------------------
def resample(profile, dt):
    """
    Resample the profile on a grid at least as fine as `dt`. Every hold is
    split into equal parts, so the resampled profile describes the same
    current signal.
    """
    if not dt > 0:
        raise DomainError('Resampling step must be positive')
    times, currents, temps = [], [], []
    for t, hold, i, temp in zip(profile.times, profile.holds,
                                profile.currents, profile.temps):
        n = max(int(math.ceil(hold / dt)), 1)
        for k in range(n):
            times.append(t + hold * k / n)
            currents.append(i)
            temps.append(temp)
    return CurrentProfile(times, currents, temps, profile.duration,
                          profile.periodic, profile.name)


#-------------------------------------------------------------------------------
def tile(profile, n):
    """
    Concatenate `n` periods of a periodic profile into a non-periodic one.
    """
    if not profile.periodic:
        raise DomainError('Only periodic profiles can be tiled')
    if n < 1:
        raise DomainError('The number of periods must be positive')
    seg = segments(profile, profile.duration * n)
    return CurrentProfile(seg.starts, seg.currents, seg.temps,
                          profile.duration * n, False,
                          '{}x{}'.format(profile.name, n))


#-------------------------------------------------------------------------------
def scale(profile, alpha):
    """
    Multiply all the currents of the profile by `alpha`.
    """
    return CurrentProfile(profile.times, profile.currents * alpha,
                          profile.temps, profile.duration, profile.periodic,
                          profile.name)


#-------------------------------------------------------------------------------
def constant_profile(current, temp, duration, name='constant'):
    return CurrentProfile([0.], [current], [temp], duration, False, name)


#-------------------------------------------------------------------------------
def generate_cycle(capacity, soc_low, soc_high, charge_c, discharge_c, rest_s,
                   temp, throughput=None):
    """
    Build a periodic constant-current cycle: charge from `soc_low` to
    `soc_high`, rest, discharge back to `soc_low`, rest. The cycle starts at
    `soc_low`.

    :param capacity:    Cell capacity (Ah)
    :param charge_c:    Charge C-rate
    :param discharge_c: Discharge C-rate
    :param rest_s:      Duration of each of the two rests (s); zero drops them
    :param temp:        Temperature (K)
    :param throughput:  If given, the C-rates are kept and the charge and
                        discharge durations stretched so that one period
                        moves this many Ah
    :raises cellfade.DomainError: invalid window or rates
    """
    if not 0 <= soc_low < soc_high <= 1:
        raise DomainError('Invalid SOC window [{}, {}]'.format(soc_low,
                                                               soc_high))
    if not (charge_c > 0 and discharge_c > 0 and capacity > 0):
        raise DomainError('C-rates and capacity must be positive')
    if rest_s < 0:
        raise DomainError('Rest duration must not be negative')

    swing = (soc_high - soc_low) * capacity
    if throughput is not None:
        if not throughput > 0:
            raise DomainError('Throughput must be positive')
        swing = throughput / 2.

    t_charge = swing / (charge_c * capacity) * 3600.
    t_discharge = swing / (discharge_c * capacity) * 3600.
    phases = [(-charge_c * capacity, t_charge), (0., rest_s),
              (discharge_c * capacity, t_discharge), (0., rest_s)]

    times, currents, t = [], [], 0.
    for current, duration in phases:
        if duration <= 0:
            continue
        times.append(t)
        currents.append(current)
        t += duration

    return CurrentProfile(times, currents, [temp] * len(times), t, True,
                          'cycle')


#: One period of the HEV-type pulse pattern as `(C-rate, seconds)` pairs
HEV_SHAPE = [
    (1., 60.), (0., 20.), (-1., 60.), (0., 20.),
    (2., 45.), (0., 15.), (-2., 45.), (0., 15.),
    (4., 30.), (0., 15.), (-4., 30.), (0., 15.)
]


#-------------------------------------------------------------------------------
def generate_hev_cycle(capacity, throughput_target, temp):
    """
    Build a periodic charge-sustaining pulse pattern of mixed C-rates. The
    pattern of :data:`HEV_SHAPE` is scaled so that one period moves exactly
    `throughput_target` Ah; its net charge is zero.
    """
    if not throughput_target > 0:
        raise DomainError('Throughput target must be positive')
    if not capacity > 0:
        raise DomainError('Capacity must be positive')

    base = sum(abs(c) * capacity * d for c, d in HEV_SHAPE) / 3600.
    factor = throughput_target / base

    times, currents, t = [], [], 0.
    for c_rate, duration in HEV_SHAPE:
        times.append(t)
        currents.append(c_rate * capacity * factor)
        t += duration

    return CurrentProfile(times, currents, [temp] * len(times), t, True,
                          'hev')


#-------------------------------------------------------------------------------
def load_profile_csv(path, default_temp):
    """
    Load a profile from a CSV file with the `time_s,current_a[,temp_c]`
    header. A `# period_s=<value>` comment makes the profile periodic and an
    `# end_s=<value>` comment sets the end of a non-periodic one; otherwise
    the last interval is repeated. Rows are numbered from 1, not counting
    the header and the comments.

    :param default_temp: Temperature (K) used when the file has no `temp_c`
                         column
    :raises cellfade.ValidationError: malformed file
    """
    try:
        with open(path) as f:
            meta = parse_header_comments(f)
    except FileNotFoundError:
        raise ValidationError('No such profile file: {}'.format(path))

    try:
        df = pd.read_csv(path, comment='#', skipinitialspace=True, dtype=str)
    except pd.errors.EmptyDataError:
        raise ValidationError('{}: empty profile file'.format(path))
    except pd.errors.ParserError as e:
        raise ValidationError('{}: {}'.format(path, str(e)))

    if df.empty:
        raise ValidationError('{}: empty profile file'.format(path))
    if not {'time_s', 'current_a'} <= set(df.columns):
        raise ValidationError(
            '{}: expected the time_s,current_a[,temp_c] header'.format(path))

    columns = ['time_s', 'current_a']
    if 'temp_c' in df.columns:
        columns.append('temp_c')
    num = df[columns].apply(pd.to_numeric, errors='coerce')
    bad = num.isna().any(axis=1).to_numpy().nonzero()[0]
    if len(bad):
        raise ValidationError('{}: malformed row {}'.format(path, bad[0] + 1))

    times = num['time_s'].to_numpy()
    steps = np.diff(times)
    if np.any(~(steps > 0)):
        row = int(np.argmax(~(steps > 0))) + 2
        raise ValidationError(
            '{}: time not strictly increasing at row {}'.format(path, row))

    if 'temp_c' in num.columns:
        temps = celsius_to_kelvin(num['temp_c'].to_numpy())
    else:
        temps = np.full(times.shape, float(default_temp))

    try:
        if 'period_s' in meta:
            duration, periodic = float(meta['period_s']), True
        elif 'end_s' in meta:
            duration, periodic = float(meta['end_s']), False
        elif len(times) > 1:
            duration, periodic = times[-1] + (times[-1] - times[-2]), False
        else:
            raise ValidationError(
                '{}: a single-sample profile needs "# end_s="'.format(path))
    except ValueError as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError('{}: malformed header: {}'.format(path, str(e)))

    try:
        return CurrentProfile(times, num['current_a'].to_numpy(), temps,
                              duration, periodic, name=path)
    except ValidationError as e:
        raise ValidationError('{}: {}'.format(path, str(e)))


#-------------------------------------------------------------------------------
def save_profile_csv(profile, path):
    with open(path, 'w') as f:
        if profile.periodic:
            f.write('# period_s={!r}\n'.format(profile.duration))
        else:
            f.write('# end_s={!r}\n'.format(profile.duration))
        df = pd.DataFrame({
            'time_s': profile.times,
            'current_a': profile.currents,
            'temp_c': kelvin_to_celsius(profile.temps)
        })
        df.to_csv(f, index=False, float_format='%.17g')
