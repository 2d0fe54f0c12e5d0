#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

"""
First-order equivalent circuit of a cell: a series resistance and one RC
branch in front of an SOC-dependent open-circuit voltage. Positive current
discharges the cell.
"""

import configparser
import bisect
import math
import os

import pandas as pd

from collections import namedtuple
from pkgutil import get_data

from . import ConfigurationError, DomainError, ValidationError


#-------------------------------------------------------------------------------
EcmState = namedtuple('EcmState', ['soc', 'v1'])
EcmStep = namedtuple('EcmStep', ['state', 'voltage', 'saturated'])


#-------------------------------------------------------------------------------
class EcmParams:
    """
    Parameters of the equivalent circuit.

    :param r0:        Series resistance (Ohm)
    :param r1:        Polarization resistance (Ohm)
    :param c1:        Polarization capacitance (F)
    :param ocv_curve: A list of `(soc, volts)` pairs, strictly increasing in
                      both and covering [0, 1]
    :param capacity:  Cell capacity (Ah)
    :raises cellfade.ConfigurationError: invalid parameters
    """

    #---------------------------------------------------------------------------
    def __init__(self, r0, r1, c1, ocv_curve, capacity):
        self.r0 = float(r0)
        self.r1 = float(r1)
        self.c1 = float(c1)
        self.capacity = float(capacity)

        if not self.r0 >= 0:
            raise ConfigurationError('r0 must not be negative')
        for name in ['r1', 'c1', 'capacity']:
            if not getattr(self, name) > 0:
                raise ConfigurationError('{} must be positive'.format(name))

        curve = sorted((float(s), float(v)) for s, v in ocv_curve)
        if len(curve) < 2:
            raise ConfigurationError('The OCV curve needs at least two points')
        if curve[0][0] != 0 or curve[-1][0] != 1:
            raise ConfigurationError('The OCV curve must cover SOC 0 to 1')
        for (s0, v0), (s1, v1) in zip(curve[:-1], curve[1:]):
            if not (s1 > s0 and v1 > v0):
                raise ConfigurationError(
                    'The OCV curve must be strictly increasing near '
                    'soc={}'.format(s1))

        self.ocv_socs = [s for s, _ in curve]
        self.ocv_volts = [v for _, v in curve]
        self.tau = self.r1 * self.c1

    #---------------------------------------------------------------------------
    @property
    def ocv_curve(self):
        return list(zip(self.ocv_socs, self.ocv_volts))

    #---------------------------------------------------------------------------
    def ocv(self, soc):
        """
        Open-circuit voltage interpolated linearly in the OCV table.

        :raises cellfade.DomainError: SOC outside of [0, 1]
        """
        if not 0 <= soc <= 1:
            raise DomainError('SOC outside of [0, 1]: {}'.format(soc))
        socs = self.ocv_socs
        i = bisect.bisect_right(socs, soc) - 1
        if i >= len(socs) - 1:
            return self.ocv_volts[-1]
        if soc == socs[i]:
            return self.ocv_volts[i]
        w = (soc - socs[i]) / (socs[i + 1] - socs[i])
        return (1 - w) * self.ocv_volts[i] + w * self.ocv_volts[i + 1]


#-------------------------------------------------------------------------------
def ocv(params, soc):
    return params.ocv(soc)


#-------------------------------------------------------------------------------
def ecm_step(state, params, current, dt):
    """
    Advance the circuit by `dt` seconds at a constant current. The RC branch
    uses the exact zero-order-hold discretization. The state of charge is
    clamped to [0, 1] and the clamping is reported in the `saturated` flag of
    the result.

    :return: An :class:`EcmStep` with the new state and the terminal voltage
    :raises cellfade.DomainError: non-positive `dt`
    """
    if not dt > 0:
        raise DomainError('Time step must be positive, got {}'.format(dt))

    soc = state.soc - current * dt / (3600. * params.capacity)
    saturated = False
    if soc < 0:
        soc, saturated = 0., True
    elif soc > 1:
        soc, saturated = 1., True

    decay = math.exp(-dt / params.tau)
    v1 = state.v1 * decay + params.r1 * (1 - decay) * current
    voltage = params.ocv(soc) - current * params.r0 - v1
    return EcmStep(EcmState(soc, v1), voltage, saturated)


#-------------------------------------------------------------------------------
def _parse_ocv_table(text):
    curve = []
    for item in text.split():
        try:
            soc, volts = item.split(':')
            curve.append((float(soc), float(volts)))
        except ValueError:
            raise ConfigurationError(
                'Malformed OCV table entry: "{}"'.format(item))
    return curve


#-------------------------------------------------------------------------------
def load_ocv_csv(path):
    """
    Load an OCV curve from a CSV file with the `soc_frac,ocv_v` header.
    """
    try:
        df = pd.read_csv(path, comment='#', skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ValidationError('Empty OCV table: {}'.format(path))
    except pd.errors.ParserError as e:
        raise ValidationError('{}: {}'.format(path, str(e)))
    if not {'soc_frac', 'ocv_v'} <= set(df.columns):
        raise ValidationError(
            '{}: expected the soc_frac,ocv_v header'.format(path))
    df = df[['soc_frac', 'ocv_v']].apply(pd.to_numeric, errors='coerce')
    bad = df.isna().any(axis=1).to_numpy().nonzero()[0]
    if len(bad):
        raise ValidationError('{}: malformed row {}'.format(path, bad[0] + 1))
    return list(df.itertuples(index=False, name=None))


#-------------------------------------------------------------------------------
def load_ecm_params(path=None):
    """
    Load the circuit parameters from the `[ecm]` section of an INI file. The
    OCV curve comes either from the `ocv-csv` file, resolved relative to the
    parameter file, or from the inline `ocv-table` of `soc:volts` pairs. The
    packaged illustrative parameters are loaded if no path is given.
    """
    conf = configparser.ConfigParser()
    if path is None:
        conf.read_string(get_data(__package__,
                                  'data/lfp_a123_ecm.conf').decode('utf-8'))
        base = os.getcwd()
    else:
        with open(path) as f:
            conf.read_file(f)
        base = os.path.dirname(os.path.abspath(path))

    try:
        values = {k: conf.getfloat('ecm', k)
                  for k in ['r0', 'r1', 'c1', 'capacity_ah']}
        ocv_csv = conf.get('ecm', 'ocv-csv', fallback='').strip()
        ocv_table = conf.get('ecm', 'ocv-table', fallback='').strip()
    except (configparser.Error, ValueError) as e:
        raise ConfigurationError('ECM parameters: {}'.format(str(e)))

    if ocv_csv:
        curve = load_ocv_csv(os.path.join(base, ocv_csv))
    elif ocv_table:
        curve = _parse_ocv_table(ocv_table)
    else:
        raise ConfigurationError('ECM parameters: no OCV curve given')

    return EcmParams(values['r0'], values['r1'], values['c1'], curve,
                     values['capacity_ah'])
