#!/usr/bin/env python3
"""
Entry point for the tsepi package when run with -m.
For example: python -m tsepi eval --help
"""

import sys

from tsepi.cli import main

if __name__ == "__main__":
    sys.exit(main())
