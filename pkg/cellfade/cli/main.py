#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

import argparse
import configparser
import sys

from multiprocessing import Pool
from tabulate import tabulate, tabulate_formats
from twisted.logger import (FilteringLogObserver, InvalidLogLevelError,
                            LogLevel, LogLevelFilterPredicate,
                            globalLogBeginner, textFileLogObserver)

from cellfade import CellFadeError, ConfigurationError, __version__
from cellfade.cli import EXIT_OK, EXIT_VALIDATION, exit_code
from cellfade.cli.commands import commands
from cellfade.config import Config
from cellfade.utils import exc_repr

_log_predicate = None


#-------------------------------------------------------------------------------
def setup_logging(level):
    """
    Send the log events at or above `level` to stderr. Later calls only
    change the level.
    """
    global _log_predicate
    try:
        level = LogLevel.levelWithName(level)
    except InvalidLogLevelError:
        raise ConfigurationError('Unknown log level: {}'.format(level))

    if _log_predicate is not None:
        _log_predicate.defaultLogLevel = level
        return

    _log_predicate = LogLevelFilterPredicate(defaultLogLevel=level)
    observer = FilteringLogObserver(textFileLogObserver(sys.stderr),
                                    [_log_predicate])
    globalLogBeginner.beginLoggingTo([observer], redirectStandardIO=False)


#-------------------------------------------------------------------------------
def build_parser():
    parser = argparse.ArgumentParser(
        description='Battery capacity fade calibration and simulation')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    parser.add_argument('--config', type=str, action='append', default=[],
                        help='configuration file; may be repeated, later '
                             'files override earlier ones')
    parser.add_argument('--out', type=str, default=None,
                        help='output directory')
    parser.add_argument('--seed', type=int, default=None,
                        help='seed of the synthetic data generators')
    parser.add_argument('--parallel', type=int, default=None,
                        help='number of worker processes')
    parser.add_argument('--log-level', type=str, default=None,
                        choices=['debug', 'info', 'warn', 'error',
                                 'critical'],
                        help='log level')
    parser.add_argument('--print-format', type=str, default=None,
                        choices=tabulate_formats,
                        help='format of the printed summary table')

    subparsers = parser.add_subparsers(title='commands')
    for command in commands.values():
        command.arg_setup(subparsers)
    return parser


#-------------------------------------------------------------------------------
def apply_global_args(args, config):
    overrides = [
        ('out', args.out), ('seed', args.seed), ('parallel', args.parallel),
        ('log-level', args.log_level), ('print-format', args.print_format)
    ]
    for option, value in overrides:
        if value is not None:
            config.set('cellfade', option, value)


#-------------------------------------------------------------------------------
def run_command(command, config, opts):
    workers = config.get_int('cellfade', 'parallel')
    if workers > 1:
        with Pool(workers) as pool:
            return command.run(config, opts, pool)
    return command.run(config, opts, None)


#-------------------------------------------------------------------------------
def main(argv=None):
    """
    Run the command line tool.

    :return: The exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, 'command'):
        parser.print_help()
        return EXIT_VALIDATION

    command = commands[args.command]
    try:
        config = Config(args.config)
        apply_global_args(args, config)
        setup_logging(config.get_string('cellfade', 'log-level'))
        opts = command.arg_process(args, config)
        report = run_command(command, config, opts)
    except CellFadeError as e:
        print('[!] {}'.format(exc_repr(e)), file=sys.stderr)
        return exit_code(e)
    except (FileNotFoundError, configparser.Error) as e:
        print('[!] {}'.format(exc_repr(e)), file=sys.stderr)
        return EXIT_VALIDATION

    table = command.report_parse(report)
    print(tabulate(table['data'], headers=table['headers'],
                   tablefmt=config.get_string('cellfade', 'print-format')))
    return EXIT_OK
