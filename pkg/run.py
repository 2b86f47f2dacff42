#!/usr/bin/env python3
"""
Run script for the ONH robustness lab CLI
"""
import sys

from app.main import main

if __name__ == "__main__":
    sys.exit(main())
