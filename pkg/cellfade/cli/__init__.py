#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

from cellfade import DomainError, EolError, FitError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_FIT = 2
EXIT_MODEL = 3


#-------------------------------------------------------------------------------
def exit_code(exc):
    """
    Map an exception to the exit code of the command line tool.

    :raises: the exception itself if it is not one of the package errors
    """
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION
    if isinstance(exc, FitError):
        return EXIT_FIT
    if isinstance(exc, (DomainError, EolError)):
        return EXIT_MODEL
    raise exc
