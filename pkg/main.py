#!/usr/bin/env python3
"""
Main entry point for the region-based self-triggered sampling toolkit.
Synthesizes region partitions, benchmarks samplers and runs the verify suites.
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
