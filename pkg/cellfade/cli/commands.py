#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

import datetime
import math
import os

import numpy as np
import pandas as pd

from collections import namedtuple
from dateutil.tz import tzutc
from twisted.logger import Logger

from cellfade import ConfigurationError, FitError, ValidationError
from cellfade import __version__
from cellfade.aging import (BatteryParams, load_battery_params, load_xmap,
                            save_battery_params, save_xmap)
from cellfade.calibration import (DatasetKind, calendar_model, cycling_model,
                                  fit_am, fit_report, fit_sei_reference,
                                  fit_x_points, load_dataset, save_dataset,
                                  synthesize_calendar, synthesize_cycling,
                                  validation_report)
from cellfade.ecm import load_ecm_params
from cellfade.profile import (constant_profile, generate_cycle,
                              generate_hev_cycle, load_profile_csv)
from cellfade.scenario import (PackConfig, drive, extrapolate_eol,
                               load_household_trace, load_trajectory_csv,
                               mass_above, record_times, simulate,
                               synthesize_household_trace, usage_histograms)
from cellfade.utils import (celsius_to_kelvin, ensure_dir, get_object,
                            pprint_years, write_json)

log = Logger()

#-------------------------------------------------------------------------------
Command = namedtuple('Command', [
    'arg_setup', 'arg_process', 'run', 'report_parse'
])

#: Profiles that can be named instead of a CSV path
BUILTIN_PROFILES = ['rest', 'cycle', 'hev', 'low-c']

#: Synthetic calibration fixture: reference temperatures (C) of the SEI fit,
#: cycling temperatures (C) and the time grids (days)
SYNTHETIC_REFERENCE_TEMPS = [25., 45., 60.]
SYNTHETIC_CYCLING_TEMPS = [25., 45.]
SYNTHETIC_CALENDAR_DAYS = np.arange(1, 13) * 30.
SYNTHETIC_CYCLING_DAYS = np.arange(1, 11) * 3.


#-------------------------------------------------------------------------------
# Shared helpers
#-------------------------------------------------------------------------------
def report_meta(command):
    """
    Metadata of a report. `generated` is the only field that changes between
    identical runs.
    """
    return {
        'command': command,
        'version': __version__,
        'generated': datetime.datetime.now(tzutc()).isoformat()
    }


#-------------------------------------------------------------------------------
def out_dir(config):
    return ensure_dir(config.get_path('cellfade', 'out') or 'results')


#-------------------------------------------------------------------------------
def load_models(config):
    """
    Load the battery parameters, the X map and the circuit parameters named
    in the configuration, falling back to the packaged ones.
    """
    params = load_battery_params(config.get_path('battery', 'params'))
    xmap = load_xmap(config.get_path('battery', 'xmap'))
    ecm = load_ecm_params(config.get_path('ecm', 'params'))
    return params, xmap, ecm


#-------------------------------------------------------------------------------
def pack_config(config):
    return PackConfig(config.get_int('pack', 'series'),
                      config.get_int('pack', 'parallel'),
                      config.get_float('pack', 'cell-voltage'))


#-------------------------------------------------------------------------------
def horizon_s(config):
    days = config.get_float('simulation', 'horizon-days')
    if not days > 0:
        raise ConfigurationError('horizon-days must be positive')
    return days * 86400.


#-------------------------------------------------------------------------------
def bin_edges(config, option):
    """
    Build histogram edges from a `start stop step` option.
    """
    try:
        start, stop, step = config.get_float_list('analyze', option)
    except ValueError:
        raise ConfigurationError(
            '{} must be given as "start stop step"'.format(option))
    if not (step > 0 and stop > start):
        raise ConfigurationError('Malformed bins: {}'.format(option))
    n = int(round((stop - start) / step))
    return start + np.arange(n + 1) * step


#-------------------------------------------------------------------------------
def builtin_profile(config, name, capacity, temp):
    """
    Build one of the :data:`BUILTIN_PROFILES`.

    :return: A `(profile, initial_soc)` pair; `initial_soc` is `None` when
             the configured one applies
    """
    if name == 'rest':
        return constant_profile(0., temp, 86400., 'rest'), None
    if name == 'cycle':
        soc_low = config.get_float('profiles', 'cycle-soc-low')
        profile = generate_cycle(
            capacity, soc_low, config.get_float('profiles', 'cycle-soc-high'),
            config.get_float('profiles', 'cycle-charge-c'),
            config.get_float('profiles', 'cycle-discharge-c'),
            config.get_float('profiles', 'cycle-rest'), temp)
        return profile, soc_low
    if name == 'low-c':
        soc_low = config.get_float('profiles', 'low-c-soc-low')
        profile = generate_cycle(
            capacity, soc_low, config.get_float('profiles', 'low-c-soc-high'),
            config.get_float('profiles', 'low-c-charge-c'),
            config.get_float('profiles', 'low-c-discharge-c'),
            config.get_float('profiles', 'low-c-rest'), temp,
            config.get_float('profiles', 'low-c-throughput-ah'))
        profile.name = 'low-c'
        return profile, soc_low
    return generate_hev_cycle(
        capacity, config.get_float('profiles', 'hev-throughput-ah'),
        temp), None


#-------------------------------------------------------------------------------
def household_trace(config, horizon):
    path = config.get_path('simulation', 'trace')
    if path is not None:
        trace = load_household_trace(path)
        if trace.end < horizon:
            log.warn('The trace ends at {end:.0f} s, before the horizon',
                     end=trace.end)
        return trace

    return synthesize_household_trace(
        days=int(math.ceil(horizon / 86400.)),
        step_s=config.get_float('trace', 'step'),
        pv_peak_w=config.get_float('trace', 'pv-peak-w'),
        base_load_w=config.get_float('trace', 'base-load-w'),
        evening_peak_w=config.get_float('trace', 'evening-peak-w'),
        morning_peak_w=config.get_float('trace', 'morning-peak-w'),
        temp_c=config.get_float('trace', 'temp-c'),
        noise=config.get_float('trace', 'noise'),
        seed=config.get_int('cellfade', 'seed'))


#-------------------------------------------------------------------------------
def scenarios(config, option, ecm, capacity):
    """
    Collect the runs to perform: the configured profile if there is one,
    otherwise the household trace dispatched by every policy named in
    `[simulation] <option>`.

    :return: A list of `(name, profile, initial_soc, horizon)` tuples
    """
    horizon = horizon_s(config)
    initial_soc = config.get_float('simulation', 'initial-soc')
    temp = celsius_to_kelvin(config.get_float('simulation', 'temp-c'))

    profile = config.get_string('simulation', 'profile', '').strip()
    if profile:
        if profile in BUILTIN_PROFILES:
            prof, soc = builtin_profile(config, profile, capacity, temp)
            name = profile
        else:
            prof = load_profile_csv(config.get_path('simulation', 'profile'),
                                    temp)
            soc, name = None, os.path.splitext(os.path.basename(profile))[0]
        return [(name, prof, initial_soc if soc is None else soc, horizon)]

    trace = household_trace(config, horizon)
    horizon = min(horizon, trace.end - trace.times[0])
    voltage = pack_config(config).nominal_voltage
    soc_floor = config.get_float('simulation', 'soc-floor')

    runs = []
    for name in config.get_list('simulation', option):
        try:
            policy = get_object(config.get_string('policies', name))
        except Exception as e:
            raise ConfigurationError(
                'Cannot load policy "{}": {}'.format(name, str(e)))
        prof = policy(trace, ecm, voltage, soc_floor=soc_floor,
                      initial_soc=initial_soc)
        runs.append((name, prof, initial_soc, horizon))
    if not runs:
        raise ConfigurationError('No policies selected')
    return runs


#-------------------------------------------------------------------------------
def simulate_job(job):
    """
    Run one scenario; a top-level function so that it can be sent to a
    process pool.
    """
    name, profile, initial_soc, horizon, params, xmap, ecm, every, dt = job
    every = min(every, horizon)
    return simulate(profile, params, xmap, ecm, initial_soc, horizon, every,
                    dt, name)


#-------------------------------------------------------------------------------
def run_scenarios(config, option, pool):
    params, xmap, ecm = load_models(config)
    runs = scenarios(config, option, ecm, params.nominal_capacity)
    every = config.get_float('simulation', 'record-every')
    dt = config.get_float('simulation', 'step')
    jobs = [run + (params, xmap, ecm, every, dt) for run in runs]
    if pool is None:
        return [simulate_job(job) for job in jobs]
    return pool.map(simulate_job, jobs)


#-------------------------------------------------------------------------------
def set_if_given(config, section, option, value):
    if value is None:
        return
    if isinstance(value, list):
        value = ' '.join(str(v) for v in value)
    config.set(section, option, value)


#-------------------------------------------------------------------------------
def add_scenario_args(parser):
    parser.add_argument('--profile', type=str, default=None,
                        help='profile CSV or one of: ' +
                             ', '.join(BUILTIN_PROFILES))
    parser.add_argument('--policy', type=str, nargs='+', default=None,
                        help='dispatch policies applied to the household '
                             'trace')
    parser.add_argument('--trace', type=str, default=None,
                        help='household trace CSV')
    parser.add_argument('--horizon-days', type=float, default=None,
                        help='simulated time in days')
    parser.add_argument('--temp-c', type=float, default=None,
                        help='temperature of the built-in profiles')


#-------------------------------------------------------------------------------
def process_scenario_args(args, config, option):
    set_if_given(config, 'simulation', 'profile', args.profile)
    set_if_given(config, 'simulation', option, args.policy)
    set_if_given(config, 'simulation', 'trace', args.trace)
    set_if_given(config, 'simulation', 'horizon-days', args.horizon_days)
    set_if_given(config, 'simulation', 'temp-c', args.temp_c)


#-------------------------------------------------------------------------------
# Calibrate
#-------------------------------------------------------------------------------
def calibrate_arg_setup(subparsers):
    parser = subparsers.add_parser('calibrate',
                                   help='Fit the aging model to datasets')
    parser.set_defaults(command='calibrate')
    parser.add_argument('--reference', type=str, nargs='+', default=None,
                        help='reference calendar datasets')
    parser.add_argument('--calendar', type=str, nargs='+', default=None,
                        help='calendar datasets of the X map')
    parser.add_argument('--cycling', type=str, nargs='+', default=None,
                        help='cycling datasets')
    parser.add_argument('--synthetic', action='store_true', default=False,
                        help='generate the datasets from the packaged '
                             'parameters first')
    parser.add_argument('--noise', type=float, default=0.,
                        help='relative noise of the synthetic datasets')


def calibrate_arg_process(args, config):
    set_if_given(config, 'calibration', 'reference', args.reference)
    set_if_given(config, 'calibration', 'calendar', args.calendar)
    set_if_given(config, 'calibration', 'cycling', args.cycling)
    return {'synthetic': args.synthetic, 'noise': args.noise}


#-------------------------------------------------------------------------------
def write_synthetic_datasets(config, directory, noise):
    """
    Generate a calibration fixture from the configured parameters: a
    temperature sweep at the reference condition, one calendar dataset per
    X map knot and HEV-type cycling at two temperatures.
    """
    params, xmap, ecm = load_models(config)
    x_ref = config.get_float('calibration', 'x-ref')
    seed = config.get_int('cellfade', 'seed')
    ensure_dir(directory)

    datasets = {'reference': [], 'calendar': [], 'cycling': []}

    def store(kind, dataset):
        path = os.path.join(directory, dataset.name + '.csv')
        save_dataset(dataset, path)
        datasets[kind].append(path)

    times = SYNTHETIC_CALENDAR_DAYS * 86400.
    for i, temp_c in enumerate(SYNTHETIC_REFERENCE_TEMPS):
        temp = celsius_to_kelvin(temp_c)
        store('reference', synthesize_calendar(
            params, x_ref, 0.5, temp, times, noise, seed + i,
            'reference-{:g}C'.format(temp_c)))

    for i, (soc, temp, x) in enumerate(xmap.knots):
        store('calendar', synthesize_calendar(params, x, soc, temp, times,
                                              noise, seed + 100 + i))

    times = SYNTHETIC_CYCLING_DAYS * 86400.
    throughput = config.get_float('profiles', 'hev-throughput-ah')
    dt = config.get_float('calibration', 'step')
    for i, temp_c in enumerate(SYNTHETIC_CYCLING_TEMPS):
        profile = generate_hev_cycle(params.nominal_capacity, throughput,
                                     celsius_to_kelvin(temp_c))
        store('cycling', synthesize_cycling(
            params, xmap, ecm, profile, times, 0.5, dt, noise, seed + 200 + i,
            'cycling-hev-{:g}C'.format(temp_c)))

    for kind, paths in datasets.items():
        config.set('calibration', kind, ' '.join(paths))


#-------------------------------------------------------------------------------
def load_datasets(config, option, section='calibration'):
    paths = config.get_list(section, option, [])
    return [load_dataset(os.path.expanduser(p)) for p in paths]


#-------------------------------------------------------------------------------
def calibration_settings(config):
    def bounds(option):
        values = config.get_float_list('calibration', option)
        if len(values) != 2:
            raise ConfigurationError('{} needs two values'.format(option))
        return tuple(values)

    tolerances = {
        'xatol': config.get_float('calibration', 'xatol'),
        'fatol': config.get_float('calibration', 'fatol'),
        'maxiter': config.get_int('calibration', 'maxiter'),
        'restarts': config.get_int('calibration', 'restarts')
    }
    all_bounds = {
        'k_sei': bounds('k-sei-bounds'),
        'e_sei': bounds('e-sei-bounds'),
        'x': bounds('x-bounds'),
        'k_am': bounds('k-am-bounds'),
        'e_am': bounds('e-am-bounds')
    }
    return all_bounds, tolerances


#-------------------------------------------------------------------------------
def initial_guesses(config):
    """
    Read the initial guesses of the SEI and the active material fits. A pair
    with an empty value is estimated from the data instead.
    """
    def guess(*names):
        values = [config.get_string('calibration', n + '-guess', '').strip()
                  for n in names]
        if not all(values):
            return None
        return {n.replace('-', '_'): config.get_float('calibration', n +
                                                      '-guess')
                for n in names}

    return guess('k-sei', 'e-sei'), guess('k-am', 'e-am')


#-------------------------------------------------------------------------------
def calibrate_run(config, opts, pool):
    out = out_dir(config)
    if opts['synthetic']:
        write_synthetic_datasets(config, os.path.join(out, 'datasets'),
                                 opts['noise'])

    #---------------------------------------------------------------------------
    # Validate all the inputs before fitting anything
    #---------------------------------------------------------------------------
    reference = load_datasets(config, 'reference')
    calendar = load_datasets(config, 'calendar') or reference
    cycling = load_datasets(config, 'cycling')
    if not reference:
        raise ValidationError('No reference calendar datasets configured')
    for dataset in reference + calendar:
        if dataset.kind != DatasetKind.CALENDAR:
            raise ValidationError('{} is not a calendar dataset'.format(
                dataset.name))
    base = load_battery_params(config.get_path('battery', 'params'))
    ecm = load_ecm_params(config.get_path('ecm', 'params')) if cycling \
        else None
    bounds, tolerances = calibration_settings(config)
    sei_guess, am_guess = initial_guesses(config)
    x_ref = config.get_float('calibration', 'x-ref')

    #---------------------------------------------------------------------------
    # Step 1: SEI coefficients
    #---------------------------------------------------------------------------
    sei = fit_sei_reference(reference, sei_guess, bounds, x_ref,
                            **tolerances)
    k_sei, e_sei = sei.parameters['k_sei'], sei.parameters['e_sei']
    steps = {'sei_reference': fit_report(
        sei, reference,
        lambda d: calendar_model(k_sei, e_sei, x_ref, d.temp))}

    #---------------------------------------------------------------------------
    # Step 2: X map
    #---------------------------------------------------------------------------
    xfit = fit_x_points(calendar, (k_sei, e_sei), pool, bounds['x'],
                        **tolerances)
    if xfit.xmap is None:
        raise FitError('None of the X fits succeeded')
    steps['x_points'] = {
        'knots': [{'soc_frac': s, 'temp_k': t, 'x': r.parameters['x'],
                   'sse': r.sse, 'converged': r.converged}
                  for (s, t), r in xfit.results.items()],
        'failures': [{'dataset': n, 'error': e} for n, e in xfit.failures]
    }

    #---------------------------------------------------------------------------
    # Step 3: loss of active material
    #---------------------------------------------------------------------------
    params = BatteryParams(base.nominal_capacity, k_sei, e_sei, base.k_am,
                           base.e_am)
    results = [sei] + list(xfit.results.values())
    if cycling:
        dt = config.get_float('calibration', 'step')
        am = fit_am(cycling, params, xfit.xmap, ecm, am_guess, bounds, dt,
                    **tolerances)
        params = params._replace(k_am=am.parameters['k_am'],
                                 e_am=am.parameters['e_am'])
        steps['active_material'] = fit_report(
            am, cycling,
            lambda d: cycling_model(params, xfit.xmap, ecm, d, dt))
        results.append(am)
    else:
        log.info('No cycling datasets, skipping the active material fit')
        steps['active_material'] = {'skipped': True}

    unconverged = [r for r in results if not r.converged]
    if unconverged:
        raise FitError('{} fit(s) did not converge'.format(len(unconverged)))

    save_battery_params(params, os.path.join(out, 'battery.conf'))
    save_xmap(xfit.xmap, os.path.join(out, 'xmap.csv'))
    report = {'meta': report_meta('calibrate'), 'parameters': params._asdict(),
              'steps': steps}
    write_json(os.path.join(out, 'calibration.json'), report)
    return report


def calibrate_report_parse(report):
    data = [[k, v] for k, v in report['parameters'].items()]
    data += [['x({:g}, {:.2f}K)'.format(k['soc_frac'], k['temp_k']), k['x']]
             for k in report['steps']['x_points']['knots']]
    return {'headers': ['parameter', 'value'], 'data': data}


calibrate_cmd = Command(
    calibrate_arg_setup, calibrate_arg_process, calibrate_run,
    calibrate_report_parse)


#-------------------------------------------------------------------------------
# Simulate
#-------------------------------------------------------------------------------
def simulate_arg_setup(subparsers):
    parser = subparsers.add_parser('simulate',
                                   help='Simulate the capacity fade')
    parser.set_defaults(command='simulate')
    add_scenario_args(parser)
    parser.add_argument('--record-every', type=float, default=None,
                        help='trajectory cadence in seconds')


def simulate_arg_process(args, config):
    process_scenario_args(args, config, 'policy')
    set_if_given(config, 'simulation', 'record-every', args.record_every)
    return {}


def trajectory_summary(trajectory):
    return {
        'name': trajectory.meta['profile'],
        'q_sei_pct': float(trajectory.q_sei[-1]),
        'q_am_pct': float(trajectory.q_am[-1]),
        'q_total_pct': float(trajectory.q_total[-1]),
        'horizon_s': trajectory.meta['horizon_s'],
        'saturated_steps': trajectory.meta['saturated_steps'],
        'saturated_seconds': trajectory.meta['saturated_seconds']
    }


def simulate_run(config, opts, pool):
    out = out_dir(config)
    runs = []
    for trajectory in run_scenarios(config, 'policy', pool):
        summary = trajectory_summary(trajectory)
        name = summary['name']
        trajectory.save_csv(os.path.join(out, 'trajectory-{}.csv'.format(
            name)))
        write_json(os.path.join(out, 'summary-{}.json'.format(name)),
                   {'meta': report_meta('simulate'), 'summary': summary})
        runs.append(summary)
    return {'runs': runs}


def simulate_report_parse(report):
    headers = ['name', 'q_sei_pct', 'q_am_pct', 'q_total_pct',
               'saturated_steps']
    data = [[run[h] for h in headers] for run in report['runs']]
    return {'headers': headers, 'data': data}


simulate_cmd = Command(
    simulate_arg_setup, simulate_arg_process, simulate_run,
    simulate_report_parse)


#-------------------------------------------------------------------------------
# End of life
#-------------------------------------------------------------------------------
def eol_arg_setup(subparsers):
    parser = subparsers.add_parser('eol',
                                   help='Extrapolate the end of life')
    parser.set_defaults(command='eol')
    add_scenario_args(parser)
    parser.add_argument('--trajectory', type=str, nargs='+', default=None,
                        help='trajectory CSVs to extrapolate instead of '
                             'simulating')
    parser.add_argument('--threshold', type=float, default=None,
                        help='remaining capacity fraction at end of life')


def eol_arg_process(args, config):
    process_scenario_args(args, config, 'policies')
    set_if_given(config, 'eol', 'trajectory', args.trajectory)
    set_if_given(config, 'eol', 'threshold', args.threshold)
    return {}


def eol_run(config, opts, pool):
    out = out_dir(config)
    threshold = config.get_float('eol', 'threshold')
    window = config.get_float('eol', 'min-window-days')

    paths = config.get_list('eol', 'trajectory', [])
    trajectories = []
    if paths:
        for path in paths:
            trajectory = load_trajectory_csv(os.path.expanduser(path))
            name = os.path.splitext(os.path.basename(path))[0]
            trajectories.append((name, trajectory))
    else:
        for trajectory in run_scenarios(config, 'policies', pool):
            name = trajectory.meta['profile']
            trajectory.save_csv(os.path.join(out, 'trajectory-{}.csv'.format(
                name)))
            trajectories.append((name, trajectory))

    results = {}
    for name, trajectory in trajectories:
        estimate = extrapolate_eol(trajectory, threshold, window)
        results[name] = {
            'years_to_eol': estimate.years_to_eol,
            'pretty': pprint_years(estimate.years_to_eol),
            'sqrt_coefficient': estimate.fit_coefficients.sqrt,
            'linear_coefficient': estimate.fit_coefficients.linear
        }
        log.info('End of life of {name}: {years:.2f} years', name=name,
                 years=estimate.years_to_eol)

    report = {'meta': report_meta('eol'), 'threshold': threshold,
              'results': results}
    write_json(os.path.join(out, 'eol.json'), report)
    return report


def eol_report_parse(report):
    headers = ['name', 'years_to_eol', 'pretty', 'sqrt_coefficient',
               'linear_coefficient']
    data = [[name] + [r[h] for h in headers[1:]]
            for name, r in sorted(report['results'].items())]
    return {'headers': headers, 'data': data}


eol_cmd = Command(
    eol_arg_setup, eol_arg_process, eol_run, eol_report_parse)


#-------------------------------------------------------------------------------
# Analyze
#-------------------------------------------------------------------------------
def analyze_arg_setup(subparsers):
    parser = subparsers.add_parser('analyze',
                                   help='Compute the C-rate and SOC '
                                        'histograms')
    parser.set_defaults(command='analyze')
    add_scenario_args(parser)


def analyze_arg_process(args, config):
    process_scenario_args(args, config, 'policies')
    return {}


def save_histogram(histogram, path):
    df = pd.DataFrame({'bin_low': histogram.edges[:-1],
                       'bin_high': histogram.edges[1:],
                       'seconds': histogram.seconds})
    df.to_csv(path, index=False, float_format='%.17g')


def analyze_run(config, opts, pool):
    out = out_dir(config)
    params, _, ecm = load_models(config)
    c_rate_bins = bin_edges(config, 'c-rate-bins')
    soc_bins = bin_edges(config, 'soc-bins')
    dt = config.get_float('simulation', 'step')

    results = {}
    for name, profile, initial_soc, horizon in scenarios(
            config, 'policies', ecm, params.nominal_capacity):
        trace = drive(profile, ecm, initial_soc, horizon, dt,
                      record_times(horizon, horizon))
        series = np.column_stack((np.append(trace.times, horizon),
                                  trace.soc))
        c_rate, soc = usage_histograms(profile, series,
                                       params.nominal_capacity, c_rate_bins,
                                       soc_bins)
        save_histogram(c_rate, os.path.join(out, 'c-rate-{}.csv'.format(
            name)))
        save_histogram(soc, os.path.join(out, 'soc-{}.csv'.format(name)))
        results[name] = {
            'c_rate': {'edges': c_rate.edges.tolist(),
                       'seconds': c_rate.seconds.tolist()},
            'soc': {'edges': soc.edges.tolist(),
                    'seconds': soc.seconds.tolist()},
            'seconds_above_half_c': mass_above(c_rate, 0.5, absolute=True),
            'seconds_above_soc_0.8': mass_above(soc, 0.8),
            'voltage_min_v': float(np.min(trace.voltage)),
            'voltage_max_v': float(np.max(trace.voltage)),
            'horizon_s': horizon
        }

    report = {'meta': report_meta('analyze'), 'results': results}
    write_json(os.path.join(out, 'histograms.json'), report)
    return report


def analyze_report_parse(report):
    headers = ['name', 'horizon_s', 'seconds_above_half_c',
               'seconds_above_soc_0.8']
    data = [[name] + [r[h] for h in headers[1:]]
            for name, r in sorted(report['results'].items())]
    return {'headers': headers, 'data': data}


analyze_cmd = Command(
    analyze_arg_setup, analyze_arg_process, analyze_run,
    analyze_report_parse)


#-------------------------------------------------------------------------------
# Validate
#-------------------------------------------------------------------------------
def validate_arg_setup(subparsers):
    parser = subparsers.add_parser('validate',
                                   help='Score the model against datasets '
                                        'it was not calibrated on')
    parser.set_defaults(command='validate')
    parser.add_argument('--dataset', type=str, nargs='+', default=None,
                        help='calendar or cycling datasets')
    parser.add_argument('--synthetic', action='store_true', default=False,
                        help='generate a cycling dataset under the '
                             'validation profile from the configured '
                             'parameters first')
    parser.add_argument('--noise', type=float, default=0.,
                        help='relative noise of the synthetic dataset')


def validate_arg_process(args, config):
    set_if_given(config, 'validation', 'datasets', args.dataset)
    return {'synthetic': args.synthetic, 'noise': args.noise}


def write_validation_dataset(config, directory, noise):
    """
    Simulate the configured model under the validation profile and store the
    result as a cycling dataset.
    """
    params, xmap, ecm = load_models(config)
    name = config.get_string('validation', 'profile')
    if name not in BUILTIN_PROFILES:
        raise ConfigurationError('Unknown validation profile: {}'.format(
            name))
    temp_c = config.get_float('validation', 'temp-c')
    profile, soc = builtin_profile(config, name, params.nominal_capacity,
                                   celsius_to_kelvin(temp_c))
    if soc is None:
        soc = config.get_float('simulation', 'initial-soc')
    times = np.array(config.get_float_list('validation', 'days')) * 86400.
    dataset = synthesize_cycling(
        params, xmap, ecm, profile, times, soc,
        config.get_float('calibration', 'step'), noise,
        config.get_int('cellfade', 'seed') + 300,
        'validation-{}-{:g}C'.format(name, temp_c))

    ensure_dir(directory)
    path = os.path.join(directory, dataset.name + '.csv')
    save_dataset(dataset, path)
    config.set('validation', 'datasets', path)


def validate_run(config, opts, pool):
    out = out_dir(config)
    if opts['synthetic']:
        write_validation_dataset(config, os.path.join(out, 'datasets'),
                                 opts['noise'])

    datasets = load_datasets(config, 'datasets', 'validation')
    if not datasets:
        raise ValidationError('No validation datasets configured')
    params, xmap, ecm = load_models(config)
    report = validation_report(params, xmap, ecm, datasets,
                               config.get_float('calibration', 'step'))
    report['meta'] = report_meta('validate')
    write_json(os.path.join(out, 'validation.json'), report)
    return report


def validate_report_parse(report):
    headers = ['name', 'rmse_pct', 'max_abs_pct', 'bias_pct']
    data = [[d[h] for h in headers] for d in report['datasets']]
    return {'headers': headers, 'data': data}


validate_cmd = Command(
    validate_arg_setup, validate_arg_process, validate_run,
    validate_report_parse)


#-------------------------------------------------------------------------------
commands = {
    'calibrate': calibrate_cmd,
    'simulate': simulate_cmd,
    'eol': eol_cmd,
    'analyze': analyze_cmd,
    'validate': validate_cmd
}
