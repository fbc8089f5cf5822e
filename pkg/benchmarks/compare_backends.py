#!/usr/bin/env python3
"""Benchmark the compiled basin-classification kernel against the pure
Python twin on the built-in presets.

Usage: python3 benchmarks/compare_backends.py [--trials 50]
"""
import argparse
import time

import numpy as np

from separatrix import backend, models
from separatrix.integration import IntegratorConfig

PRESETS = (("hilker-ref", 0), ("competition-2eq", 1), ("competition-3eq", 1))


def bench(kernel, model_id, par, ics, attractors, cfg):
    t0 = time.perf_counter()
    labels = [kernel(model_id, par, ic, attractors, cfg.atol, cfg.rtol,
                     cfg.t_max, cfg.eps_attr, cfg.dwell, cfg.max_steps)
              for ic in ics]
    return time.perf_counter() - t0, labels


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=50,
                    help="initial conditions per preset")
    args = ap.parse_args()

    cfg = IntegratorConfig()
    rng = np.random.default_rng(1)
    print(f"active backend: {backend.BACKEND}")
    print(f"{'preset':<18} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for preset, model_id in PRESETS:
        system = models.preset_system(preset)
        att = np.array([a.location
                        for a in models.stable_attractors(system)])
        ics = rng.uniform(0.0, 10.0, size=(args.trials, system.dim))
        tc, lc = bench(backend.classify_kernel, model_id,
                       system.kernel_params, ics, att, cfg)
        tp, lp = bench(backend.pure_python_kernel, model_id,
                       system.kernel_params, ics, att, cfg)
        if lc != lp:
            raise SystemExit(f"{preset}: backends disagree")
        print(f"{preset:<18} {tc / args.trials * 1e3:>8.2f}ms "
              f"{tp / args.trials * 1e3:>8.2f}ms {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
