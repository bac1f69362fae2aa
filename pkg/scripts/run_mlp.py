#!/usr/bin/env python3
"""Blobs-MLP epochs-to-accuracy suite with the shipped defaults.

Writes records.csv, summary.txt and curves.svg under results/mlp.
"""

import sys

from curvboost.bench import main

if __name__ == "__main__":
    sys.exit(main(["mlp", "--seeds", "10", "--out", "results/mlp",
                   "--set", 'optimizers=["ctagd_sgd","ctagd_adam","sgd","momentum_sgd","adam"]']))
