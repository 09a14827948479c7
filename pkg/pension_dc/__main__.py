"""Run the pension_dc command line interface."""

from __future__ import annotations

import sys

from .cli_experiments import main

if __name__ == "__main__":
    sys.exit(main())
