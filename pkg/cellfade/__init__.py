#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

__version__ = '0.1.0'


#-------------------------------------------------------------------------------
class CellFadeError(Exception):
    """
    Base class of all the errors raised by this package.
    """
    pass


#-------------------------------------------------------------------------------
class ValidationError(CellFadeError, ValueError):
    """
    Malformed input data. Whenever the problem can be pinned down to a row of
    an input file, the message names the row.
    """
    pass


#-------------------------------------------------------------------------------
class ConfigurationError(ValidationError):
    pass


#-------------------------------------------------------------------------------
class DomainError(CellFadeError, ValueError):
    """
    An argument outside of the domain of a model equation.
    """
    pass


#-------------------------------------------------------------------------------
class ModelValidityError(DomainError):
    """
    The SEI denominator 1 + X is not positive.
    """
    pass


#-------------------------------------------------------------------------------
class FitError(CellFadeError):
    pass


#-------------------------------------------------------------------------------
class EolError(CellFadeError):
    pass


#-------------------------------------------------------------------------------
class NoEolError(EolError):
    pass


#-------------------------------------------------------------------------------
class DegenerateFitError(EolError):
    pass
