#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

import sys

from cellfade.cli.main import main

sys.exit(main())
