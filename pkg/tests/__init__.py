
from logging import getLogger
getLogger('flake8').propagate = False
