#!/usr/bin/env python3
"""Booster knob ablations on the testbed: annealing mode, quantile, clamp, noise.

Each sweep writes an ablation.txt report under results/ablate-<knob>.
"""

import sys

from curvboost.bench import main

SWEEPS = [
    ("anneal", '["linear","exponential","none"]'),
    ("omega", '[0.05,0.1,0.25,0.5]'),
    ("clamp", '[[0.01,100],[0.1,10],[1,1]]'),
    ("noise", '[0.0,0.01,0.1,1.0]'),
]

if __name__ == "__main__":
    rc = 0
    for knob, values in SWEEPS:
        rc |= main(["ablate", "--task", "testbed", "--knob", knob,
                    "--values", values, "--seeds", "8",
                    "--out", f"results/ablate-{knob}",
                    "--set", 'optimizers=["ctagd_sgd","ctagd_adam"]'])
    sys.exit(rc)
