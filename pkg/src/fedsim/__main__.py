"""`python -m fedsim` entry point."""

import sys

from fedsim.cli.main import main

sys.exit(main())
