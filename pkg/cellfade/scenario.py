#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

"""
Long-horizon simulations coupling the equivalent circuit with the aging
model, household dispatch policies, end-of-life extrapolation and usage
histograms.

The aging model is fed forward: the circuit produces the SOC trajectory for
the imposed current and the fade is accumulated along it without ever
altering the circuit parameters.
"""

import math

import numpy as np
import pandas as pd

from collections import namedtuple
from twisted.logger import Logger

from . import DomainError, ValidationError, NoEolError, DegenerateFitError
from .aging import FRESH, integrate
from .ecm import EcmState, ecm_step
from .profile import CurrentProfile, segments
from .utils import YEAR_S, celsius_to_kelvin

log = Logger()

#: Fade coefficients (% per year or per square root of a year) below this
#: magnitude are treated as zero
DEGENERATE_COEFFICIENT = 1e-12


#-------------------------------------------------------------------------------
DriveTrace = namedtuple('DriveTrace', [
    'times', 'dts', 'soc', 'current', 'temp', 'voltage', 'record_index',
    'saturated_steps', 'saturated_seconds'
])
DriveTrace.__doc__ = """
Output of the circuit-only pass over a profile. Step `i` starts at
`times[i]`, lasts `dts[i]` and is driven by `current[i]` at `temp[i]`;
`soc[i]` is the state of charge at its start and `voltage[i]` the
terminal voltage at its end. `soc` has one extra entry holding the final
state. `record_index[k]` is the number of steps completed at the k-th
record time.
"""

EolEstimate = namedtuple('EolEstimate', ['years_to_eol', 'threshold',
                                         'fit_coefficients'])
FitCoefficients = namedtuple('FitCoefficients', ['linear', 'sqrt'])
Histogram = namedtuple('Histogram', ['edges', 'seconds'])


#-------------------------------------------------------------------------------
class PackConfig(namedtuple('PackConfig', ['series', 'parallel',
                                           'cell_voltage'])):
    """
    Cell arrangement of a storage pack. Household power divided by
    :attr:`nominal_voltage` gives the current of a single cell.
    """

    #---------------------------------------------------------------------------
    @property
    def nominal_voltage(self):
        return self.series * self.parallel * self.cell_voltage


#-------------------------------------------------------------------------------
class HouseholdTrace:
    """
    Photovoltaic generation and household load over time.

    :param times: Sample times (s), strictly increasing
    :param pv:    PV power (W)
    :param load:  Load power (W)
    :param temps: Home or ambient temperature (K)
    :param step:  Hold of the last sample (s); defaults to the last interval
    """

    #---------------------------------------------------------------------------
    def __init__(self, times, pv, load, temps, step=None):
        self.times = np.array(times, dtype=float)
        self.pv = np.array(pv, dtype=float)
        self.load = np.array(load, dtype=float)
        self.temps = np.array(temps, dtype=float)

        if self.times.size < 2 and step is None:
            raise ValidationError('A household trace needs two samples')
        if not (self.times.shape == self.pv.shape == self.load.shape ==
                self.temps.shape):
            raise ValidationError('Trace columns differ in length')
        diffs = np.diff(self.times)
        if np.any(~(diffs > 0)):
            row = int(np.argmax(~(diffs > 0))) + 2
            raise ValidationError(
                'Trace times not strictly increasing at row {}'.format(row))
        for name in ['pv', 'load']:
            values = getattr(self, name)
            if np.any(~(values >= 0)):
                row = int(np.argmax(~(values >= 0))) + 1
                raise ValidationError(
                    'Negative {} power at row {}'.format(name, row))
        if np.any(~(self.temps > 0)):
            raise ValidationError('Trace temperatures must be positive')

        self.step = float(step if step is not None else diffs[-1])

    #---------------------------------------------------------------------------
    @property
    def holds(self):
        return np.diff(np.append(self.times, self.times[-1] + self.step))

    #---------------------------------------------------------------------------
    @property
    def end(self):
        return self.times[-1] + self.step


#-------------------------------------------------------------------------------
class FadeTrajectory:
    """
    Capacity fade components sampled over time. `q_total` is always the sum
    of the two components.
    """

    #---------------------------------------------------------------------------
    def __init__(self, times, q_sei, q_am, soc=None, meta=None):
        self.times = np.array(times, dtype=float)
        self.q_sei = np.array(q_sei, dtype=float)
        self.q_am = np.array(q_am, dtype=float)
        self.q_total = self.q_sei + self.q_am
        self.soc = None if soc is None else np.array(soc, dtype=float)
        self.meta = dict(meta or {})

    #---------------------------------------------------------------------------
    def __len__(self):
        return len(self.times)

    #---------------------------------------------------------------------------
    def save_csv(self, path):
        df = pd.DataFrame({
            'time_s': self.times,
            'q_sei_pct': self.q_sei,
            'q_am_pct': self.q_am,
            'q_total_pct': self.q_total
        })
        df.to_csv(path, index=False, float_format='%.17g')


#-------------------------------------------------------------------------------
def load_trajectory_csv(path):
    """
    Load a trajectory written by :meth:`FadeTrajectory.save_csv`.
    """
    try:
        df = pd.read_csv(path, comment='#', skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ValidationError('{}: empty trajectory file'.format(path))
    except pd.errors.ParserError as e:
        raise ValidationError('{}: {}'.format(path, str(e)))
    columns = ['time_s', 'q_sei_pct', 'q_am_pct']
    if not set(columns) <= set(df.columns):
        raise ValidationError(
            '{}: expected the time_s,q_sei_pct,q_am_pct header'.format(path))
    df = df[columns].apply(pd.to_numeric, errors='coerce')
    bad = df.isna().any(axis=1).to_numpy().nonzero()[0]
    if len(bad):
        raise ValidationError('{}: malformed row {}'.format(path, bad[0] + 1))
    return FadeTrajectory(df['time_s'], df['q_sei_pct'], df['q_am_pct'],
                          meta={'source': path})


#-------------------------------------------------------------------------------
def record_times(horizon, record_every):
    """
    Times at which the trajectory is sampled: multiples of `record_every`
    below the horizon and the horizon itself.
    """
    if not horizon > 0:
        raise DomainError('Horizon must be positive, got {}'.format(horizon))
    if not record_every > 0:
        raise DomainError('Record cadence must be positive')
    n = int(math.floor(horizon / record_every))
    times = np.arange(n + 1) * float(record_every)
    times = times[times < horizon]
    return np.append(times, float(horizon))


#-------------------------------------------------------------------------------
def drive(profile, ecm, initial_soc, horizon, dt, records=None):
    """
    Run the equivalent circuit over the profile. The step grid honours every
    profile breakpoint and every record time; the stretches between them are
    split into equal steps no longer than `dt`.

    :param records: Times that must be step boundaries; defaults to
                    `[0, horizon]`
    :return:        A :class:`DriveTrace`
    """
    if not dt > 0:
        raise DomainError('Time step must be positive, got {}'.format(dt))
    if not 0 <= initial_soc <= 1:
        raise DomainError('Initial SOC outside of [0, 1]')
    if records is None:
        records = np.array([0., float(horizon)])
    records = np.asarray(records, dtype=float)

    seg = segments(profile, horizon)
    marks = np.unique(np.concatenate((seg.starts, records, [0., horizon])))
    marks = marks[(marks >= 0) & (marks <= horizon)]

    #---------------------------------------------------------------------------
    # Split the stretches between the marks into steps
    #---------------------------------------------------------------------------
    lengths = np.diff(marks)
    counts = np.maximum(np.ceil(lengths / dt).astype(int), 1)
    mark_idx = np.repeat(np.arange(len(lengths)), counts)
    sub = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts,
                                              counts)
    step_len = lengths / counts
    starts = marks[mark_idx] + sub * step_len[mark_idx]
    dts = step_len[mark_idx]

    seg_idx = np.searchsorted(seg.starts, starts, side='right') - 1
    currents = seg.currents[seg_idx]
    temps = seg.temps[seg_idx]

    #---------------------------------------------------------------------------
    # Step the circuit
    #---------------------------------------------------------------------------
    n = len(starts)
    soc = np.empty(n + 1)
    voltage = np.empty(n)
    state = EcmState(float(initial_soc), 0.)
    saturated_steps = 0
    saturated_seconds = 0.
    soc_list = soc.tolist()
    for i, (current, step_dt) in enumerate(zip(currents.tolist(),
                                               dts.tolist())):
        soc_list[i] = state.soc
        state, voltage[i], saturated = ecm_step(state, ecm, current, step_dt)
        if saturated:
            saturated_steps += 1
            saturated_seconds += step_dt
    soc_list[n] = state.soc
    soc = np.array(soc_list)

    if saturated_steps:
        log.warn('SOC clamped in {steps} steps ({seconds:.0f} s)',
                 steps=saturated_steps, seconds=saturated_seconds)

    mark_ends = np.cumsum(counts)
    record_index = np.concatenate(([0], mark_ends))[
        np.searchsorted(marks, records)]

    return DriveTrace(starts, dts, soc, currents, temps, voltage,
                      record_index, saturated_steps, saturated_seconds)


#-------------------------------------------------------------------------------
def fade_along(trace, params, xmap, state=FRESH):
    """
    Accumulate the fade along a circuit trace.

    :return: A tuple of the cumulative `q_sei` and `q_am` arrays, each with
             a leading entry for the initial state, and the final state
    """
    q_sei, q_am, final = integrate(state, params, xmap, trace.dts,
                                   trace.soc[:-1], trace.current, trace.temp)
    q_sei = np.concatenate(([state.q_sei], q_sei))
    q_am = np.concatenate(([state.q_am], q_am))
    return q_sei, q_am, final


#-------------------------------------------------------------------------------
def simulate(profile, params, xmap, ecm, initial_soc, horizon, record_every,
             dt=60., name=None):
    """
    Simulate the fade of a fresh cell driven by the profile.

    :param profile:      A :class:`cellfade.profile.CurrentProfile`
    :param initial_soc:  Starting state of charge
    :param horizon:      Simulated time (s)
    :param record_every: Cadence of the trajectory samples (s)
    :param dt:           Longest integration step (s)
    :return:             A :class:`FadeTrajectory` with the SOC at the record
                         times and the saturation statistics in `meta`
    """
    records = record_times(horizon, record_every)
    trace = drive(profile, ecm, initial_soc, horizon, dt, records)
    q_sei, q_am, _ = fade_along(trace, params, xmap)
    idx = trace.record_index
    meta = {
        'profile': name or profile.name,
        'horizon_s': float(horizon),
        'steps': int(len(trace.dts)),
        'saturated_steps': int(trace.saturated_steps),
        'saturated_seconds': float(trace.saturated_seconds)
    }
    log.debug('Simulated {steps} steps of {profile}', steps=meta['steps'],
              profile=meta['profile'])
    return FadeTrajectory(records, q_sei[idx], q_am[idx], trace.soc[idx],
                          meta)


#-------------------------------------------------------------------------------
# Dispatch policies
#-------------------------------------------------------------------------------
def _charge_limit(soc, target, capacity, dt):
    """
    Magnitude of the charging current that brings the SOC to `target` in
    `dt` seconds.
    """
    return max(target - soc, 0.) * capacity * 3600. / dt


#-------------------------------------------------------------------------------
def _discharge_limit(soc, floor, capacity, dt):
    return max(soc - floor, 0.) * capacity * 3600. / dt


#-------------------------------------------------------------------------------
def _policy_profile(trace, currents, name):
    return CurrentProfile(trace.times - trace.times[0], currents, trace.temps,
                          trace.end - trace.times[0], False, name)


#-------------------------------------------------------------------------------
def baseline_policy(trace, ecm, nominal_voltage, soc_floor=0.20,
                    initial_soc=0.5):
    """
    Rule-based use of home storage: PV surplus charges the battery until it
    is full; when the load exceeds the PV output the battery covers the
    deficit until its SOC reaches `soc_floor` and the grid covers the rest.
    The battery temperature is the trace temperature.

    :param nominal_voltage: Household power (W) divided by this gives the
                            cell current (A); see :class:`PackConfig`
    :return:                A non-periodic
                            :class:`cellfade.profile.CurrentProfile`
    """
    if not nominal_voltage > 0:
        raise DomainError('Nominal voltage must be positive')
    if not 0 <= soc_floor < 1:
        raise DomainError('SOC floor outside of [0, 1)')

    soc = float(initial_soc)
    currents = []
    for pv, load, dt in zip(trace.pv, trace.load, trace.holds):
        balance = pv - load
        if balance > 0:
            limit = _charge_limit(soc, 1., ecm.capacity, dt)
            current = -min(balance / nominal_voltage, limit)
        elif balance < 0:
            limit = _discharge_limit(soc, soc_floor, ecm.capacity, dt)
            current = min(-balance / nominal_voltage, limit)
        else:
            current = 0.
        soc -= current * dt / (3600. * ecm.capacity)
        currents.append(current)
    return _policy_profile(trace, currents, 'baseline')


#-------------------------------------------------------------------------------
def aggressive_policy(trace, ecm, nominal_voltage, soc_floor=0.20,
                      initial_soc=0.5, power_scale=3.0, hold_soc=0.95,
                      grid_charge_w=2000., peak_hours=(17., 21.)):
    """
    A synthetic stand-in for a cost-optimizing home energy manager. It works
    the battery harder than :func:`baseline_policy`: PV surplus is stored at
    `power_scale` times the surplus power (topped up from the grid), the
    deficit during the peak window is served at `power_scale` times the
    deficit power (exporting the excess), and outside of the peak window the
    battery is recharged from the grid at `grid_charge_w` toward `hold_soc`.
    """
    if not nominal_voltage > 0:
        raise DomainError('Nominal voltage must be positive')

    soc = float(initial_soc)
    peak_start, peak_end = peak_hours
    currents = []
    for t, pv, load, dt in zip(trace.times, trace.pv, trace.load,
                               trace.holds):
        hour = (t % 86400.) / 3600.
        balance = pv - load
        if balance > 0:
            limit = _charge_limit(soc, 1., ecm.capacity, dt)
            current = -min(power_scale * balance / nominal_voltage, limit)
        elif balance < 0 and peak_start <= hour < peak_end:
            limit = _discharge_limit(soc, soc_floor, ecm.capacity, dt)
            current = min(-power_scale * balance / nominal_voltage, limit)
        else:
            limit = _charge_limit(soc, hold_soc, ecm.capacity, dt)
            current = -min(grid_charge_w / nominal_voltage, limit)
        soc -= current * dt / (3600. * ecm.capacity)
        currents.append(current)
    return _policy_profile(trace, currents, 'aggressive')


#-------------------------------------------------------------------------------
# Household traces
#-------------------------------------------------------------------------------
def load_household_trace(path):
    """
    Load a household trace from a CSV file with the `time_s,pv_w,load_w,temp_c`
    header.
    """
    try:
        df = pd.read_csv(path, comment='#', skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ValidationError('{}: empty trace file'.format(path))
    except pd.errors.ParserError as e:
        raise ValidationError('{}: {}'.format(path, str(e)))
    columns = ['time_s', 'pv_w', 'load_w', 'temp_c']
    if not set(columns) <= set(df.columns):
        raise ValidationError(
            '{}: expected the time_s,pv_w,load_w,temp_c header'.format(path))
    df = df[columns].apply(pd.to_numeric, errors='coerce')
    bad = df.isna().any(axis=1).to_numpy().nonzero()[0]
    if len(bad):
        raise ValidationError('{}: malformed row {}'.format(path, bad[0] + 1))
    try:
        return HouseholdTrace(df['time_s'], df['pv_w'], df['load_w'],
                              celsius_to_kelvin(df['temp_c'].to_numpy()))
    except ValidationError as e:
        raise ValidationError('{}: {}'.format(path, str(e)))


#-------------------------------------------------------------------------------
def synthesize_household_trace(days=365, step_s=900., pv_peak_w=2500.,
                               base_load_w=400., evening_peak_w=3100.,
                               morning_peak_w=800., temp_c=22.,
                               noise=0., seed=0):
    """
    Build a repeating daily household trace: a half-sine PV day from 6:00 to
    18:00, a constant base load with Gaussian morning (7:00) and evening
    (19:00) peaks, and a constant temperature. A non-zero `noise` adds
    seeded multiplicative jitter to the load.
    """
    if days <= 0 or step_s <= 0:
        raise DomainError('Days and step must be positive')
    times = np.arange(int(round(days * 86400. / step_s))) * float(step_s)
    hour = (times % 86400.) / 3600.

    pv = pv_peak_w * np.clip(np.sin(np.pi * (hour - 6.) / 12.), 0., None)
    pv[(hour < 6.) | (hour >= 18.)] = 0.
    load = (base_load_w +
            morning_peak_w * np.exp(-0.5 * ((hour - 7.) / 0.75) ** 2) +
            evening_peak_w * np.exp(-0.5 * ((hour - 19.) / 1.0) ** 2))
    if noise > 0:
        rng = np.random.default_rng(seed)
        load = load * np.clip(1. + noise * rng.standard_normal(load.shape),
                              0., None)
    temps = np.full(times.shape, celsius_to_kelvin(temp_c))
    return HouseholdTrace(times, pv, load, temps, step_s)


#-------------------------------------------------------------------------------
# End of life
#-------------------------------------------------------------------------------
def extrapolate_eol(trajectory, threshold=0.80, min_window_days=28.):
    """
    Fit `q_total = a * sqrt(n) + b * n`, with `n` the age in years, to the
    trajectory and solve for the age at which the remaining capacity drops
    to `threshold` of nominal. The square-root term follows SEI growth under
    steady conditions, the linear one the throughput-driven loss.

    :raises cellfade.ValidationError: the trajectory is too short
    :raises cellfade.NoEolError: no fade, or a fit that never reaches the
                                 threshold
    :raises cellfade.DegenerateFitError: both coefficients vanish
    """
    if not 0 < threshold < 1:
        raise DomainError('Threshold outside of (0, 1): {}'.format(threshold))
    times = trajectory.times
    span = times[-1] - times[0] if len(times) else 0.
    if span < min_window_days * 86400.:
        raise ValidationError(
            'The trajectory spans {:.1f} days, at least {} are needed'.format(
                span / 86400., min_window_days))

    q = trajectory.q_total
    if not q[-1] - q[0] > 0:
        raise NoEolError('No capacity fade over the trajectory')

    n = times / YEAR_S
    design = np.column_stack((np.sqrt(n), n))
    (a, b), *_ = np.linalg.lstsq(design, q, rcond=None)
    coefficients = FitCoefficients(float(b), float(a))

    if abs(a) < DEGENERATE_COEFFICIENT and abs(b) < DEGENERATE_COEFFICIENT:
        raise DegenerateFitError('Both fade coefficients vanish')

    #---------------------------------------------------------------------------
    # Solve b u^2 + a u - L = 0 for u = sqrt(n) using the form that does not
    # cancel for the sign of a at hand
    #---------------------------------------------------------------------------
    loss = 100. * (1. - threshold)
    disc = a * a + 4. * b * loss
    if disc < 0 or (a <= 0 and b <= 0):
        raise NoEolError('The fitted fade never reaches {:.0f}% loss'.format(
            loss))
    root = math.sqrt(disc)
    if a > 0:
        u = 2. * loss / (a + root)
    else:
        u = (root - a) / (2. * b)
    return EolEstimate(u * u, threshold, coefficients)


#-------------------------------------------------------------------------------
# Usage statistics
#-------------------------------------------------------------------------------
def _histogram(values, weights, edges):
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError('Bin edges must be strictly increasing')
    values = np.clip(values, edges[0], edges[-1])
    seconds, _ = np.histogram(values, bins=edges, weights=weights)
    return Histogram(edges, seconds)


#-------------------------------------------------------------------------------
def usage_histograms(profile, soc_series, capacity, c_rate_bins, soc_bins):
    """
    Time-weighted occupancy of C-rates and states of charge over the window
    covered by `soc_series`. The C-rate is signed, charging being negative.
    Values outside of the bins are counted in the edge bins.

    :param soc_series: A sequence of `(time, soc)` pairs; each SOC holds until
                       the next time stamp
    :return:           A tuple of two :class:`Histogram` objects, C-rate first
    """
    series = np.asarray(soc_series, dtype=float)
    if series.ndim != 2 or series.shape[0] < 1 or series.shape[1] != 2:
        raise ValidationError('The SOC series must be a list of pairs')
    times, socs = series[:, 0], series[:, 1]
    if np.any(np.diff(times) <= 0):
        raise ValidationError('SOC series times must be strictly increasing')
    if not capacity > 0:
        raise DomainError('Capacity must be positive')

    soc_hist = _histogram(socs[:-1], np.diff(times), soc_bins)

    start, end = times[0], times[-1]
    if end > start:
        seg = segments(profile, end)
        seconds = np.clip(seg.ends, start, end) - np.clip(seg.starts, start,
                                                          end)
        rates = seg.currents / capacity
    else:
        seconds, rates = np.empty(0), np.empty(0)
    c_rate_hist = _histogram(rates, seconds, c_rate_bins)
    return c_rate_hist, soc_hist


#-------------------------------------------------------------------------------
def mass_above(histogram, threshold, absolute=False):
    """
    Seconds spent in bins lying entirely above `threshold`. With `absolute`
    the bins entirely below `-threshold` count as well.
    """
    lows, highs = histogram.edges[:-1], histogram.edges[1:]
    mask = lows >= threshold
    if absolute:
        mask |= highs <= -threshold
    return float(np.sum(histogram.seconds[mask]))
