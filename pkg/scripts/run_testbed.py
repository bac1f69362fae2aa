#!/usr/bin/env python3
"""Drifting-landscape comparison suite with the shipped defaults.

Writes records.csv, summary.txt, curves.svg and trajectories.svg under
results/testbed (and a stationary control under results/testbed-stationary).
"""

import sys

from curvboost.bench import main

if __name__ == "__main__":
    rc = main(["testbed", "--seeds", "15", "--out", "results/testbed",
               "--set", 'optimizers=["ctagd_sgd","ctagd_adam","sgd","momentum_sgd","adam","yogi","lbfgs","newton2d"]'])
    rc |= main(["testbed", "--stationary", "--seeds", "15",
                "--out", "results/testbed-stationary",
                "--set", 'optimizers=["sgd","momentum_sgd","adam","lbfgs"]'])
    sys.exit(rc)
