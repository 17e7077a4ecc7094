#!/usr/bin/env python3
"""Flow/field coupling statistics at kappa=4 (mean, variance, KS normality).

Usage: run_coupling.py [--n-samples N] [--threads T] [extra slitflow flags...]
"""

import sys

from slitflow.cli import main

if __name__ == "__main__":
    sys.exit(main(["gff-couple", "--seed", "0", *sys.argv[1:]]))
