#!/usr/bin/env python3
"""
Wrapper script for the prior study: 10^4 draws of the depth-5, width-4 prior
with Mahalanobis and moment diagnostics.

Extra arguments are passed through, e.g. ``--seed 3 --set prior_draws=2000``.
"""

import sys

import main

print("Applying prior_study preset...")

if __name__ == "__main__":
    sys.exit(main.main(["prior", "--preset", "prior_study"] + sys.argv[1:]))
