#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

"""
Three-step calibration of the aging model:

1. the SEI rate and activation energy on reference calendar data,
2. the X value of every further calendar condition with the SEI
   coefficients frozen,
3. the loss of active material coefficients on cycling data, scored against
   the total capacity fade with everything else frozen.

All the objectives are plain sums of squared residuals in percent of
capacity loss, minimized with a bounded Nelder-Mead search.
"""

import enum
import math
import os

import numpy as np
import pandas as pd

from collections import OrderedDict, namedtuple
from scipy import optimize
from twisted.logger import Logger

from . import DomainError, FitError, ValidationError
from .aging import FRESH, BatteryParams, R, XMap, arrhenius, integrate
from .profile import load_profile_csv, save_profile_csv
from .scenario import drive
from .utils import (celsius_to_kelvin, kelvin_to_celsius,
                    parse_header_comments)

log = Logger()

#: Default search tolerances: simplex size, objective spread, iteration cap
XATOL = 1e-8
FATOL = 1e-12
MAXITER = 2000

#: Default search bounds in natural units
DEFAULT_BOUNDS = {
    'k_sei': (1., 1e6),
    'e_sei': (1e4, 1e5),
    'x': (-0.9, 10.),
    'k_am': (1e-4, 1e3),
    'e_am': (1e4, 1e5)
}

#: Activation energies (J/mol) of the packaged LFP cell, used as initial
#: guesses and kept when the data hold a single temperature
DEFAULT_E_SEI = 39333.
DEFAULT_E_AM = 39111.

#: Scale of the activation energies inside the optimizer
E_SCALE = 1e4


#-------------------------------------------------------------------------------
class DatasetKind(enum.Enum):
    CALENDAR = 'calendar'
    CYCLING = 'cycling'


#-------------------------------------------------------------------------------
FitResult = namedtuple('FitResult', [
    'parameters', 'sse', 'iterations', 'converged', 'under_determined',
    'notes'
], defaults=(False, ()))
FitResult.__doc__ = """
Outcome of a fit. `parameters` is an ordered mapping of names to values in
natural units; `under_determined` flags fits whose data cannot separate all
the parameters, `notes` explains why.
"""

XFit = namedtuple('XFit', ['xmap', 'results', 'failures'])
XFit.__doc__ = """
Outcome of the per-condition X fits. `results` maps `(soc, temp)` to
a :class:`FitResult`, `failures` lists `(dataset name, message)` pairs and
`xmap` is built from the successful fits, or `None` if there are none.
"""


#-------------------------------------------------------------------------------
class CalibrationDataset:
    """
    Measured capacity loss over time under one condition.

    :param kind:    A :class:`DatasetKind`
    :param points:  A sequence of `(time, loss)` pairs, seconds and percent
    :param soc:     State of charge of a calendar test or the initial state of
                    charge of a cycling test
    :param temp:    Storage temperature (K) of a calendar test
    :param profile: The :class:`cellfade.profile.CurrentProfile` imposed in
                    a cycling test
    :param name:    Label used in logs and reports
    :raises cellfade.ValidationError: invalid points or condition
    """

    #---------------------------------------------------------------------------
    def __init__(self, kind, points, soc=None, temp=None, profile=None,
                 name=None):
        self.kind = DatasetKind(kind)
        self.name = name or self.kind.value
        points = np.array(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValidationError(
                '{}: points must be (time, loss) pairs'.format(self.name))
        if len(points) < 2:
            raise ValidationError(
                '{}: at least two points are needed'.format(self.name))

        self.times = points[:, 0]
        self.losses = points[:, 1]
        if not np.all(np.isfinite(points)):
            raise ValidationError('{}: non-finite values'.format(self.name))
        if self.times[0] < 0:
            raise ValidationError('{}: negative time'.format(self.name))
        diffs = np.diff(self.times)
        if np.any(diffs <= 0):
            row = int(np.argmax(diffs <= 0)) + 2
            raise ValidationError(
                '{}: time not strictly increasing at row {}'.format(
                    self.name, row))
        if np.any(self.losses < 0):
            row = int(np.argmax(self.losses < 0)) + 1
            raise ValidationError(
                '{}: negative loss at row {}'.format(self.name, row))

        self.soc = None if soc is None else float(soc)
        self.temp = None if temp is None else float(temp)
        self.profile = profile

        if self.soc is not None and not 0 <= self.soc <= 1:
            raise ValidationError(
                '{}: SOC outside of [0, 1]'.format(self.name))
        if self.kind == DatasetKind.CALENDAR:
            if self.soc is None or self.temp is None:
                raise ValidationError(
                    '{}: calendar data need a SOC and a temperature'.format(
                        self.name))
            if not self.temp > 0:
                raise ValidationError(
                    '{}: temperature must be positive'.format(self.name))
        elif self.profile is None:
            raise ValidationError(
                '{}: cycling data need a current profile'.format(self.name))

    #---------------------------------------------------------------------------
    @property
    def points(self):
        return list(zip(self.times.tolist(), self.losses.tolist()))

    #---------------------------------------------------------------------------
    @property
    def condition(self):
        if self.kind == DatasetKind.CALENDAR:
            return (self.soc, self.temp)
        return self.profile

    #---------------------------------------------------------------------------
    def __len__(self):
        return len(self.times)

    #---------------------------------------------------------------------------
    def __repr__(self):
        return 'CalibrationDataset({}, {}, {} points)'.format(
            self.name, self.kind.value, len(self))


#-------------------------------------------------------------------------------
def load_dataset(path):
    """
    Load a dataset from a CSV file with the `time_s,loss_pct` header. The
    condition is given in `# key=value` comments at the top of the file:
    `kind` (calendar by default), `soc_frac`, `temp_c` and, for cycling
    data, `profile`, the path of the profile CSV relative to the dataset.

    :raises cellfade.ValidationError: malformed file or condition
    """
    try:
        with open(path) as f:
            meta = parse_header_comments(f)
    except FileNotFoundError:
        raise ValidationError('No such dataset file: {}'.format(path))

    try:
        df = pd.read_csv(path, comment='#', skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ValidationError('{}: empty dataset file'.format(path))
    except pd.errors.ParserError as e:
        raise ValidationError('{}: {}'.format(path, str(e)))

    if not {'time_s', 'loss_pct'} <= set(df.columns):
        raise ValidationError(
            '{}: expected the time_s,loss_pct header'.format(path))
    df = df[['time_s', 'loss_pct']].apply(pd.to_numeric, errors='coerce')
    bad = df.isna().any(axis=1).to_numpy().nonzero()[0]
    if len(bad):
        raise ValidationError('{}: malformed row {}'.format(path, bad[0] + 1))

    try:
        kind = DatasetKind(meta.get('kind', 'calendar'))
        soc = float(meta['soc_frac']) if 'soc_frac' in meta else None
        temp = None
        if 'temp_c' in meta:
            temp = celsius_to_kelvin(float(meta['temp_c']))
    except ValueError as e:
        raise ValidationError('{}: bad condition: {}'.format(path, str(e)))

    profile = None
    if kind == DatasetKind.CYCLING:
        if 'profile' not in meta:
            raise ValidationError('{}: cycling data need a profile'.format(
                path))
        if soc is None:
            soc = 0.5
        profile_path = os.path.join(os.path.dirname(os.path.abspath(path)),
                                    meta['profile'])
        profile = load_profile_csv(profile_path,
                                   temp or celsius_to_kelvin(25.))

    name = os.path.splitext(os.path.basename(path))[0]
    return CalibrationDataset(kind, df.to_numpy(), soc, temp, profile, name)


#-------------------------------------------------------------------------------
def save_dataset(dataset, path):
    """
    Save a dataset in the format read by :func:`load_dataset`. The profile of
    a cycling dataset is written next to it as `<name>-profile.csv`.
    """
    lines = ['# kind={}'.format(dataset.kind.value)]
    if dataset.soc is not None:
        lines.append('# soc_frac={!r}'.format(dataset.soc))
    if dataset.temp is not None:
        lines.append('# temp_c={!r}'.format(kelvin_to_celsius(dataset.temp)))
    if dataset.kind == DatasetKind.CYCLING:
        base = os.path.splitext(os.path.basename(path))[0]
        profile_name = base + '-profile.csv'
        save_profile_csv(dataset.profile,
                         os.path.join(os.path.dirname(path), profile_name))
        lines.append('# profile={}'.format(profile_name))

    df = pd.DataFrame({'time_s': dataset.times, 'loss_pct': dataset.losses})
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + '\n')
        df.to_csv(f, index=False, float_format='%.17g')


#-------------------------------------------------------------------------------
# Objectives and the search
#-------------------------------------------------------------------------------
def residuals(model_eval, dataset):
    """
    Differences between the predicted and the measured losses.

    :param model_eval: A callable mapping an array of times to the predicted
                       losses
    """
    predicted = np.asarray(model_eval(dataset.times), dtype=float)
    return predicted - dataset.losses


#-------------------------------------------------------------------------------
def residual_sse(model_eval, dataset):
    r = residuals(model_eval, dataset)
    return float(np.dot(r, r))


#-------------------------------------------------------------------------------
def minimize(objective, initial, bounds, names=None, xatol=XATOL,
             fatol=FATOL, maxiter=MAXITER, restarts=0):
    """
    Minimize the objective with a bounded Nelder-Mead simplex search. The
    returned point is never worse than the initial one. An objective value of
    `+inf` rejects the candidate; NaN aborts the search.

    :param objective: A callable taking a parameter vector
    :param initial:   The starting point, within bounds
    :param bounds:    A `(low, high)` pair per parameter
    :param names:     Parameter names used in the result
    :param restarts:  Number of searches restarted from the best point so far
    :return:          A :class:`FitResult`
    :raises cellfade.FitError: bad starting point or NaN objective
    """
    initial = np.array(initial, dtype=float)
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    if names is None:
        names = ['p{}'.format(i) for i in range(len(initial))]
    if not len(names) == len(bounds) == len(initial):
        raise FitError('Mismatched parameter, bound and name counts')
    for value, (lo, hi), name in zip(initial, bounds, names):
        if not lo <= value <= hi:
            raise FitError('Initial {}={} outside of [{}, {}]'.format(
                name, value, lo, hi))

    def checked(p):
        value = float(objective(p))
        if math.isnan(value):
            raise FitError('Objective is NaN at {}'.format(list(p)))
        return value

    f0 = checked(initial)
    if not math.isfinite(f0):
        raise FitError('Objective is not finite at the initial point')

    best_x, best_f = initial, f0
    iterations = 0
    converged = False
    for _ in range(restarts + 1):
        res = optimize.minimize(checked, best_x, method='Nelder-Mead',
                                bounds=bounds,
                                options={'xatol': xatol, 'fatol': fatol,
                                         'maxiter': maxiter})
        iterations += int(res.nit)
        converged = bool(res.success)
        if res.fun < best_f:
            best_x, best_f = np.clip(res.x, [b[0] for b in bounds],
                                     [b[1] for b in bounds]), float(res.fun)

    parameters = OrderedDict(zip(names, [float(v) for v in best_x]))
    return FitResult(parameters, max(best_f, 0.), iterations, converged)


#-------------------------------------------------------------------------------
def _log_bounds(bounds):
    return (math.log(bounds[0]), math.log(bounds[1]))


#-------------------------------------------------------------------------------
def _e_bounds(bounds):
    return (bounds[0] / E_SCALE, bounds[1] / E_SCALE)


#-------------------------------------------------------------------------------
def _clip(value, bounds):
    return min(max(value, bounds[0]), bounds[1])


#-------------------------------------------------------------------------------
def _arrhenius_guess(rates, temps, e_default, k_bounds, e_bounds):
    """
    Solve `log(rate) = log(k) - e / (R T)` by least squares. With a single
    temperature the activation energy stays at `e_default`.
    """
    rates = np.asarray(rates, dtype=float)
    temps = np.asarray(temps, dtype=float)
    mask = rates > 0
    if not np.any(mask):
        return k_bounds[0], _clip(e_default, e_bounds)
    rates, temps = rates[mask], temps[mask]

    if len(np.unique(temps)) < 2:
        e = _clip(e_default, e_bounds)
        log_k = np.mean(np.log(rates) + e / (R * temps))
    else:
        design = np.column_stack((np.ones(len(temps)), -1. / (R * temps)))
        (log_k, e), *_ = np.linalg.lstsq(design, np.log(rates), rcond=None)
        e = _clip(float(e), e_bounds)
        log_k = np.mean(np.log(rates) + e / (R * temps))
    return _clip(math.exp(log_k), k_bounds), e


#-------------------------------------------------------------------------------
def _as_list(datasets):
    if isinstance(datasets, CalibrationDataset):
        return [datasets]
    return list(datasets)


#-------------------------------------------------------------------------------
def _require_kind(datasets, kind):
    if not datasets:
        raise ValidationError('No {} datasets given'.format(kind.value))
    for dataset in datasets:
        if dataset.kind != kind:
            raise ValidationError('{} is not a {} dataset'.format(
                dataset.name, kind.value))


#-------------------------------------------------------------------------------
# Step 1: SEI coefficients on the reference calendar data
#-------------------------------------------------------------------------------
def calendar_model(k_sei, e_sei, x, temp):
    """
    Predicted calendar loss at constant conditions as a function of time.
    """
    rate = arrhenius(k_sei, e_sei, temp) / (1 + x)
    return lambda times: rate * np.sqrt(np.asarray(times, dtype=float))


#-------------------------------------------------------------------------------
def fit_sei_reference(datasets, initial_guess=None, bounds=None,
                      x_ref=0.2841, **tolerances):
    """
    Fit the SEI rate prefactor and activation energy to reference calendar
    data: one dataset or a temperature sweep at the reference SOC, all
    sharing the X value of the reference condition.

    X is not fitted here. The prefactor and `1 + X` only enter the calendar
    law as a ratio, so the data determine `k_sei / (1 + X)` and the
    activation energy; `x_ref` is an input that anchors the split and is
    returned unchanged. A single temperature cannot separate the prefactor
    from the activation energy either; the activation energy then stays at
    its initial guess and the result is flagged under-determined.

    :param initial_guess: Optional mapping with `k_sei` and `e_sei`; the
                          default is a log-linear least squares estimate
    :param bounds:        Optional mapping with the `k_sei`, `e_sei` and `x`
                          bounds
    :return:              A :class:`FitResult` with `k_sei`, `e_sei` and
                          `x_ref`
    :raises cellfade.FitError: degenerate data
    """
    datasets = _as_list(datasets)
    _require_kind(datasets, DatasetKind.CALENDAR)
    bounds = dict(DEFAULT_BOUNDS, **(bounds or {}))
    if not bounds['x'][0] <= x_ref <= bounds['x'][1]:
        raise FitError('x_ref={} outside of its bounds'.format(x_ref))

    times = np.concatenate([d.times for d in datasets])
    losses = np.concatenate([d.losses for d in datasets])
    temps = np.concatenate([np.full(len(d), d.temp) for d in datasets])
    if np.ptp(losses) == 0:
        raise FitError('Degenerate calendar data: all losses are equal')

    socs = {d.soc for d in datasets}
    if len(socs) > 1:
        log.warn('Reference datasets span several SOCs: {socs}',
                 socs=sorted(socs))

    #---------------------------------------------------------------------------
    # Work with k_eff = k_sei / (1 + x_ref)
    #---------------------------------------------------------------------------
    ratio = 1. + x_ref
    k_bounds = (bounds['k_sei'][0] / ratio, bounds['k_sei'][1] / ratio)
    e_bounds = bounds['e_sei']
    n_temps = len(np.unique(temps))
    sqrt_t = np.sqrt(times)
    inv_rt = 1. / (R * temps)

    if initial_guess:
        k0 = _clip(initial_guess['k_sei'] / ratio, k_bounds)
        e0 = _clip(initial_guess['e_sei'], e_bounds)
    else:
        rates, rate_temps = [], []
        for temp in np.unique(temps):
            mask = (temps == temp) & (sqrt_t > 0)
            g = sqrt_t[mask]
            rates.append(np.dot(g, losses[mask]) / np.dot(g, g))
            rate_temps.append(temp)
        k0, e0 = _arrhenius_guess(rates, rate_temps, DEFAULT_E_SEI,
                                  k_bounds, e_bounds)

    def predict(k_eff, e):
        return k_eff * np.exp(-e * inv_rt) * sqrt_t

    if n_temps < 2:
        def objective(p):
            r = predict(math.exp(p[0]), e0) - losses
            return np.dot(r, r)
        result = minimize(objective, [math.log(k0)], [_log_bounds(k_bounds)],
                          ['log_k'], **tolerances)
        k_eff, e = math.exp(result.parameters['log_k']), e0
    else:
        def objective(p):
            r = predict(math.exp(p[0]), p[1] * E_SCALE) - losses
            return np.dot(r, r)
        result = minimize(objective, [math.log(k0), e0 / E_SCALE],
                          [_log_bounds(k_bounds), _e_bounds(e_bounds)],
                          ['log_k', 'e'], **tolerances)
        k_eff = math.exp(result.parameters['log_k'])
        e = result.parameters['e'] * E_SCALE

    notes = ['k_sei and 1 + X enter the calendar law as a ratio; the split '
             'is anchored at x_ref={}'.format(x_ref)]
    under_determined = False
    if n_temps < 2:
        under_determined = True
        notes.append('a single temperature cannot separate k_sei from '
                     'e_sei; e_sei kept at {}'.format(e))
    if len(times) <= 2:
        under_determined = True
        notes.append('only {} points'.format(len(times)))

    parameters = OrderedDict([('k_sei', k_eff * ratio), ('e_sei', e),
                              ('x_ref', float(x_ref))])
    log.info('SEI reference fit: k_sei={k:.6g}, e_sei={e:.6g}, '
             'sse={sse:.3g} in {it} iterations', k=parameters['k_sei'],
             e=e, sse=result.sse, it=result.iterations)
    return FitResult(parameters, result.sse, result.iterations,
                     result.converged, under_determined, tuple(notes))


#-------------------------------------------------------------------------------
# Step 2: X at the other calendar conditions
#-------------------------------------------------------------------------------
def _frozen_sei(frozen):
    if isinstance(frozen, BatteryParams):
        return frozen.k_sei, frozen.e_sei
    return float(frozen[0]), float(frozen[1])


#-------------------------------------------------------------------------------
def fit_x(dataset, k_sei, e_sei, x_bounds=DEFAULT_BOUNDS['x'],
          **tolerances):
    """
    Fit X to one calendar dataset with the SEI coefficients frozen. The loss
    is proportional to `c = 1 / (1 + X)`, whose least squares value starts
    a one-dimensional search.
    """
    g = arrhenius(k_sei, e_sei, dataset.temp) * np.sqrt(dataset.times)
    gg = np.dot(g, g)
    if not gg > 0:
        raise FitError('{}: no elapsed time to fit'.format(dataset.name))
    c = np.dot(g, dataset.losses) / gg
    if not c > 0:
        raise FitError('{}: no capacity loss to fit'.format(dataset.name))
    x0 = _clip(1. / c - 1., x_bounds)

    def objective(p):
        r = g / (1. + p[0]) - dataset.losses
        return np.dot(r, r)

    return minimize(objective, [x0], [x_bounds], ['x'], **tolerances)


#-------------------------------------------------------------------------------
def _fit_x_job(job):
    dataset, k_sei, e_sei, x_bounds, tolerances = job
    try:
        return fit_x(dataset, k_sei, e_sei, x_bounds, **tolerances), None
    except (FitError, DomainError) as e:
        return None, str(e)


#-------------------------------------------------------------------------------
def fit_x_points(datasets, frozen, pool=None, x_bounds=DEFAULT_BOUNDS['x'],
                 **tolerances):
    """
    Fit X at every calendar condition and assemble the X map.

    :param frozen: The :class:`cellfade.aging.BatteryParams` or a
                   `(k_sei, e_sei)` pair from the reference fit
    :param pool:   Optional `multiprocessing.Pool` running the fits
    :return:       An :class:`XFit`; failed conditions are listed in
                   `failures` and left out of the map
    :raises cellfade.ValidationError: repeated conditions
    """
    datasets = _as_list(datasets)
    _require_kind(datasets, DatasetKind.CALENDAR)
    k_sei, e_sei = _frozen_sei(frozen)

    conditions = [(d.soc, d.temp) for d in datasets]
    if len(set(conditions)) != len(conditions):
        raise ValidationError('Calendar datasets repeat a condition')

    jobs = [(d, k_sei, e_sei, x_bounds, tolerances) for d in datasets]
    if pool is None:
        outcomes = [_fit_x_job(job) for job in jobs]
    else:
        outcomes = pool.map(_fit_x_job, jobs)

    results = OrderedDict()
    failures = []
    for dataset, (result, error) in zip(datasets, outcomes):
        if error is not None:
            log.warn('X fit of {name} failed: {error}', name=dataset.name,
                     error=error)
            failures.append((dataset.name, error))
            continue
        results[(dataset.soc, dataset.temp)] = result
        log.info('X at soc={soc}, temp={temp:.2f}C: {x:.6g}', soc=dataset.soc,
                 temp=kelvin_to_celsius(dataset.temp),
                 x=result.parameters['x'])

    xmap = None
    if results:
        xmap = XMap([(s, t, r.parameters['x'])
                     for (s, t), r in results.items()])
    return XFit(xmap, results, failures)


#-------------------------------------------------------------------------------
# Step 3: loss of active material on cycling data
#-------------------------------------------------------------------------------
CyclingBasis = namedtuple('CyclingBasis', ['q_sei', 'temps', 'weights'])
CyclingBasis.__doc__ = """
Aging-independent quantities of a cycling dataset: the calendar loss at the
measurement times and, per distinct temperature, the cumulative SOC-weighted
charge throughput (Ah) at the measurement times.
"""


#-------------------------------------------------------------------------------
def _drive_dataset(profile, ecm, initial_soc, times, dt):
    records = np.asarray(times, dtype=float)
    return drive(profile, ecm, initial_soc, float(records[-1]), dt, records)


#-------------------------------------------------------------------------------
def cycling_basis(profile, params, xmap, ecm, initial_soc, times, dt=60.):
    """
    Run the circuit over the profile once and collect the
    :class:`CyclingBasis` at `times`. The aging never feeds back into the
    circuit, so any loss of active material coefficients can be scored
    against the result without simulating again.
    """
    trace = _drive_dataset(profile, ecm, initial_soc, times, dt)
    soc = trace.soc[:-1]
    q_sei, _, _ = integrate(FRESH, params, xmap, trace.dts, soc,
                            trace.current, trace.temp)
    q_sei = np.concatenate(([0.], q_sei))

    temps = np.unique(trace.temp)
    throughput = soc * np.abs(trace.current) * trace.dts / 3600.
    weights = np.empty((len(trace.record_index), len(temps)))
    for j, temp in enumerate(temps):
        cumulative = np.concatenate(
            ([0.], np.cumsum(np.where(trace.temp == temp, throughput, 0.))))
        weights[:, j] = cumulative[trace.record_index]
    return CyclingBasis(q_sei[trace.record_index], temps, weights)


#-------------------------------------------------------------------------------
def _q_am(basis, k_am, e_am):
    return k_am * basis.weights.dot(np.exp(-e_am / (R * basis.temps)))


#-------------------------------------------------------------------------------
def fit_am(datasets, frozen, xmap, ecm, initial_guess=None, bounds=None,
           dt=60., **tolerances):
    """
    Fit the loss of active material prefactor and activation energy to
    cycling data against the total capacity fade, with the SEI coefficients
    and the X map frozen. Datasets at several temperatures are needed to
    separate the two coefficients; with one temperature the activation energy
    stays at its initial guess and the result is flagged under-determined.

    :param frozen: :class:`cellfade.aging.BatteryParams` carrying the frozen
                   SEI coefficients; its own `k_am` and `e_am` are ignored
    :param dt:     Longest simulation step (s)
    :return:       A :class:`FitResult` with `k_am` and `e_am`
    """
    datasets = _as_list(datasets)
    _require_kind(datasets, DatasetKind.CYCLING)
    bounds = dict(DEFAULT_BOUNDS, **(bounds or {}))
    k_bounds, e_bounds = bounds['k_am'], bounds['e_am']

    bases = []
    for dataset in datasets:
        try:
            bases.append(cycling_basis(dataset.profile, frozen, xmap, ecm,
                                       dataset.soc, dataset.times, dt))
        except DomainError as e:
            raise FitError('{}: simulation failed: {}'.format(dataset.name,
                                                              str(e)))
    excess = [d.losses - b.q_sei for d, b in zip(datasets, bases)]

    #---------------------------------------------------------------------------
    # Starting point: the rate of every dataset run at a single temperature,
    # then the Arrhenius line through them
    #---------------------------------------------------------------------------
    if initial_guess:
        k0 = _clip(initial_guess['k_am'], k_bounds)
        e0 = _clip(initial_guess['e_am'], e_bounds)
    else:
        rates, rate_temps = [], []
        for basis, r in zip(bases, excess):
            if len(basis.temps) != 1:
                continue
            w = basis.weights[:, 0]
            ww = np.dot(w, w)
            if ww > 0:
                rates.append(np.dot(w, r) / ww)
                rate_temps.append(basis.temps[0])
        k0, e0 = _arrhenius_guess(rates, rate_temps, DEFAULT_E_AM, k_bounds,
                                  e_bounds)

    all_temps = np.unique(np.concatenate([b.temps for b in bases]))
    separable = len(all_temps) > 1

    def sse(k_am, e_am):
        total = 0.
        for basis, r in zip(bases, excess):
            d = _q_am(basis, k_am, e_am) - r
            total += np.dot(d, d)
        return total

    def objective(p):
        try:
            with np.errstate(over='raise', invalid='raise'):
                e = p[1] * E_SCALE if separable else e0
                return sse(math.exp(p[0]), e)
        except (FloatingPointError, OverflowError) as e:
            log.warn('Candidate {p} rejected: {e}', p=list(p), e=str(e))
            return math.inf

    if separable:
        result = minimize(objective, [math.log(k0), e0 / E_SCALE],
                          [_log_bounds(k_bounds), _e_bounds(e_bounds)],
                          ['log_k', 'e'], **tolerances)
        e_am = result.parameters['e'] * E_SCALE
    else:
        result = minimize(objective, [math.log(k0)], [_log_bounds(k_bounds)],
                          ['log_k'], **tolerances)
        e_am = e0
    k_am = math.exp(result.parameters['log_k'])

    notes = []
    if not separable:
        notes.append('a single temperature cannot separate k_am from e_am; '
                     'e_am kept at {}'.format(e_am))
    parameters = OrderedDict([('k_am', k_am), ('e_am', e_am)])
    log.info('Active material fit: k_am={k:.6g}, e_am={e:.6g}, '
             'sse={sse:.3g} in {it} iterations', k=k_am, e=e_am,
             sse=result.sse, it=result.iterations)
    return FitResult(parameters, result.sse, result.iterations,
                     result.converged, not separable, tuple(notes))


#-------------------------------------------------------------------------------
def cycling_model(params, xmap, ecm, dataset, dt=60.):
    """
    Predicted total loss of a cycling dataset as a function of its times.
    """
    basis = cycling_basis(dataset.profile, params, xmap, ecm, dataset.soc,
                          dataset.times, dt)
    total = basis.q_sei + _q_am(basis, params.k_am, params.e_am)

    def model_eval(times):
        if not np.array_equal(np.asarray(times, dtype=float), dataset.times):
            raise DomainError('The cycling model is bound to its dataset')
        return total
    return model_eval


#-------------------------------------------------------------------------------
# Synthetic data
#-------------------------------------------------------------------------------
def _noisy(values, noise, seed):
    if noise <= 0:
        return values
    rng = np.random.default_rng(seed)
    jitter = 1. + noise * rng.standard_normal(values.shape)
    return np.clip(values * jitter, 0., None)


#-------------------------------------------------------------------------------
def synthesize_calendar(params, x, soc, temp, times, noise=0., seed=0,
                        name=None):
    """
    Generate a calendar dataset from known parameters. A positive `noise`
    applies seeded multiplicative Gaussian jitter of that relative size.
    """
    times = np.asarray(times, dtype=float)
    losses = calendar_model(params.k_sei, params.e_sei, x, temp)(times)
    losses = _noisy(losses, noise, seed)
    name = name or 'calendar-{:g}-{:g}C'.format(soc, kelvin_to_celsius(temp))
    return CalibrationDataset(DatasetKind.CALENDAR,
                              np.column_stack((times, losses)), soc, temp,
                              name=name)


#-------------------------------------------------------------------------------
def synthesize_cycling(params, xmap, ecm, profile, times, initial_soc=0.5,
                       dt=60., noise=0., seed=0, name=None):
    """
    Generate a cycling dataset by simulating the profile with known
    parameters.
    """
    times = np.asarray(times, dtype=float)
    basis = cycling_basis(profile, params, xmap, ecm, initial_soc, times, dt)
    losses = basis.q_sei + _q_am(basis, params.k_am, params.e_am)
    losses = _noisy(losses, noise, seed)
    return CalibrationDataset(DatasetKind.CYCLING,
                              np.column_stack((times, losses)), initial_soc,
                              profile=profile,
                              name=name or 'cycling-' + profile.name)


#-------------------------------------------------------------------------------
# Reports
#-------------------------------------------------------------------------------
def fit_report(result, datasets, model_eval):
    """
    Build a JSON-ready report of a fit.

    :param model_eval: A callable mapping a dataset to the predicted-loss
                       function of that dataset
    """
    report = {
        'parameters': dict(result.parameters),
        'sse': result.sse,
        'iterations': result.iterations,
        'converged': result.converged,
        'under_determined': result.under_determined,
        'notes': list(result.notes),
        'datasets': []
    }
    for dataset in _as_list(datasets):
        r = residuals(model_eval(dataset), dataset)
        report['datasets'].append({
            'name': dataset.name,
            'kind': dataset.kind.value,
            'times_s': dataset.times.tolist(),
            'residuals_pct': r.tolist()
        })
    return report


#-------------------------------------------------------------------------------
def model_predictor(params, xmap, ecm=None, dt=60.):
    """
    Map a dataset to the loss predicted for it by a complete set of
    parameters: the calendar law at the X of the dataset's condition, or a
    simulation of a cycling dataset's profile.

    :param ecm: Circuit parameters; needed for cycling datasets only
    """
    def model_eval(dataset):
        if dataset.kind == DatasetKind.CALENDAR:
            x = xmap.lookup(dataset.soc, dataset.temp)
            return calendar_model(params.k_sei, params.e_sei, x, dataset.temp)
        if ecm is None:
            raise DomainError('{}: cycling predictions need circuit '
                              'parameters'.format(dataset.name))
        return cycling_model(params, xmap, ecm, dataset, dt)
    return model_eval


#-------------------------------------------------------------------------------
def validation_report(params, xmap, ecm, datasets, dt=60.):
    """
    Score calibrated parameters against datasets they were not fitted to,
    typically cycling under a profile other than the calibration one. The
    report has the layout of :func:`fit_report`; every dataset entry adds
    the root mean square, the largest absolute and the mean residual. A
    negative mean residual means the model underestimates the loss.
    """
    datasets = _as_list(datasets)
    model_eval = model_predictor(params, xmap, ecm, dt)
    predictions = {}
    sse = 0.
    for dataset in datasets:
        try:
            predict = model_eval(dataset)
            r = residuals(predict, dataset)
        except DomainError as e:
            raise FitError('{}: cannot predict: {}'.format(dataset.name,
                                                          str(e)))
        predictions[id(dataset)] = predict
        sse += float(np.dot(r, r))

    parameters = OrderedDict(params._asdict())
    result = FitResult(parameters, sse, 0, True)
    report = fit_report(result, datasets, lambda d: predictions[id(d)])
    for entry in report['datasets']:
        r = np.array(entry['residuals_pct'])
        entry['rmse_pct'] = float(np.sqrt(np.mean(r ** 2)))
        entry['max_abs_pct'] = float(np.max(np.abs(r)))
        entry['bias_pct'] = float(np.mean(r))
        log.info('Validation of {name}: rmse={rmse:.4g}%, '
                 'bias={bias:.4g}%', name=entry['name'],
                 rmse=entry['rmse_pct'], bias=entry['bias_pct'])
    return report
