#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

"""
A collection of utility classes and functions used throughout the project.
"""

import importlib
import json
import os

from dateutil.relativedelta import relativedelta

#: Offset between the Celsius and the kelvin scales
KELVIN_OFFSET = 273.15

#: Seconds in a (365 day) year, the unit of all the lifetime extrapolations
YEAR_S = 365 * 24 * 3600.


#-------------------------------------------------------------------------------
def exc_repr(e):
    """
    Return a string representation of an exception together with the excepion
    name.
    """
    return "{}: {}".format(type(e).__name__, str(e))


#-------------------------------------------------------------------------------
def get_object(name):
    """
    Retrieve an object from a module given its fully qualified name. For
    example: `get_object('cellfade.scenario.baseline_policy')`.
    """
    name = name.split('.')
    object_name = name[-1]
    module = importlib.import_module('.'.join(name[:-1]))
    return getattr(module, object_name)


#-------------------------------------------------------------------------------
def celsius_to_kelvin(temp_c):
    return temp_c + KELVIN_OFFSET


#-------------------------------------------------------------------------------
def kelvin_to_celsius(temp):
    return temp - KELVIN_OFFSET


#-------------------------------------------------------------------------------
def pprint_relativedelta(delta):
    """
    Return a string representation of a relativedelta object in the form
    similar to: "1y 2m 3d 5h 6m". If any of the components is equal to zero,
    it's omitted.
    """
    ret = ''
    if delta.years:
        ret += '{}y '.format(delta.years)
    if delta.months:
        ret += '{}m '.format(delta.months)
    if delta.days:
        ret += '{}d '.format(delta.days)
    if delta.hours:
        ret += '{}h '.format(delta.hours)
    if delta.minutes:
        ret += '{}m '.format(delta.minutes)
    ret += '{}s'.format(delta.seconds)
    return ret


#-------------------------------------------------------------------------------
def pprint_years(years):
    """
    Return a fractional number of years as a string like "31y 2m 3d", dropping
    the sub-day components which are meaningless at lifetime scales.
    """
    whole = int(years)
    months = (years - whole) * 12
    days = int(round((months - int(months)) * 365 / 12))
    delta = relativedelta(years=whole, months=int(months), days=days)
    ret = pprint_relativedelta(delta)
    if ret == '0s':
        return '0d'
    return ret[:-3]


#-------------------------------------------------------------------------------
def parse_header_comments(lines):
    """
    Collect the `# key=value` lines from the top of a CSV file into
    a dictionary. Parsing stops at the first line that is not a comment.
    """
    meta = {}
    for line in lines:
        line = line.strip()
        if not line.startswith('#'):
            break
        line = line[1:].strip()
        if '=' not in line:
            continue
        key, value = line.split('=', 1)
        meta[key.strip()] = value.strip()
    return meta


#-------------------------------------------------------------------------------
def ensure_dir(path):
    try:
        os.makedirs(path)
    except FileExistsError:
        pass
    return path


#-------------------------------------------------------------------------------
def write_json(path, data):
    """
    Write a report as JSON. The keys are sorted so that identical reports
    produce identical files.
    """
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')
