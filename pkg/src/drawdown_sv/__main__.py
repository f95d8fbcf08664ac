"""``python -m drawdown_sv``."""

import sys

from drawdown_sv.cli import main

sys.exit(main())
