#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

import os

from unittest.mock import Mock

from cellfade.aging import load_battery_params, load_xmap
from cellfade.ecm import load_ecm_params
from cellfade.utils import celsius_to_kelvin

#: Knots of the packaged X map as (soc, temp C, x)
XMAP_KNOTS = [
    (0.30, 30., 1.6227), (0.30, 45., 1.0331),
    (0.50, 25., 0.6970), (0.50, 45., 0.2841),
    (1.00, 25., 0.0482), (1.00, 45., 0.0331), (1.00, 60., -0.1433)
]

T25 = celsius_to_kelvin(25.)
T45 = celsius_to_kelvin(45.)
T60 = celsius_to_kelvin(60.)

DAY = 86400.
YEAR = 365 * DAY


#-------------------------------------------------------------------------------
def packaged_models():
    """
    Load the packaged battery parameters, X map and circuit parameters.
    """
    return load_battery_params(), load_xmap(), load_ecm_params()


#-------------------------------------------------------------------------------
def write_file(directory, name, content):
    path = os.path.join(directory, name)
    with open(path, 'w') as f:
        f.write(content)
    return path


#-------------------------------------------------------------------------------
def build_mock_config(data):
    """
    Build a mock of :class:`cellfade.config.Config` backed by a dictionary of
    sections.
    """
    def get(section, option, default, dtype):
        try:
            val = data[section][option]
            if isinstance(val, dtype):
                return val
            if isinstance(val, Exception):
                raise val
            if dtype == str:
                return str(val)
            raise ValueError
        except (KeyError, ValueError):
            if default is not None:
                return default
            raise

    def get_list(section, option, default=None):
        value = get(section, option, None if default is None else '', str)
        if value == '' and default is not None:
            return list(default)
        return value.split()

    mock = Mock()
    mock.get_bool.side_effect = lambda s, o, d=None: get(s, o, d, bool)
    mock.get_int.side_effect = lambda s, o, d=None: get(s, o, d, int)
    mock.get_float.side_effect = lambda s, o, d=None: get(s, o, d, float)
    mock.get_string.side_effect = lambda s, o, d=None: get(s, o, d, str)
    mock.get_list.side_effect = get_list
    mock.get_float_list.side_effect = \
        lambda s, o, d=None: [float(x) for x in get_list(s, o, d)]
    mock.get_path.side_effect = \
        lambda s, o: get(s, o, '', str) or None
    mock.get_options.side_effect = lambda s: data[s].items()
    return mock
