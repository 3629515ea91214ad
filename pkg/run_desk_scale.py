#!/usr/bin/env python3
"""
Wrapper script for the desk-scale replication: the f3 size sweep with
5 replicates at n = 100, 800, 1600 (Wahkon, MLP and constant mean),
followed by the f1 objective comparison.
"""

import sys

import main

print("Applying desk preset...")

if __name__ == "__main__":
    status = main.main(["benchmark", "--preset", "desk"] + sys.argv[1:])
    if status == 0:
        status = main.main(["compare", "--preset", "desk"] + sys.argv[1:])
    sys.exit(status)
