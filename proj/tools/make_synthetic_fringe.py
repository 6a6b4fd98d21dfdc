#!/usr/bin/env python3
"""Regenerate data/synthetic_fringe_lambda_m1p2.csv.

A weak fringe of visibility 0.022 on a mean of 0.5, 200 phase points over
2.2 pi, additive Gaussian noise at 17 dB (rms 0.5 * 10^-1.7).
"""
import numpy as np

VISIBILITY = 0.022
PHI0 = 0.7
POINTS = 200
SNR_DB = 17.0
SEED = 1


def main(path="data/synthetic_fringe_lambda_m1p2.csv"):
    rng = np.random.default_rng(SEED)
    phase = np.linspace(0.0, 2.2 * np.pi, POINTS)
    rms = 0.5 * 10 ** (-SNR_DB / 10)
    intensity = 0.5 * (1 + VISIBILITY * np.cos(phase + PHI0)) + rng.normal(0.0, rms, POINTS)
    with open(path, "w", encoding="utf-8") as out:
        out.write("phase_rad,intensity\n")
        for p, i in zip(phase, intensity):
            out.write(f"{p:.10f},{i:.10f}\n")


if __name__ == "__main__":
    main()
