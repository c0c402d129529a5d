"""Compare the compiled and numpy detection-overlap kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Prints the time per call of one tensor-rule sum at a few rule sizes and
the maximum relative difference between backends.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from focalfield.core import OpticalConfig
from focalfield.kernels import available_backends, get_tilde_sums
from focalfield.quadrature import panel_rule


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    cfg = OpticalConfig.from_focusing(0.29)
    f, k, w = cfg.focal_length, cfg.k, cfg.beam_waist
    x_a, z_a = 0.7e-6, f + 2e-6
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'panels':>7} {'n_phi':>6} " + " ".join(f"{b + ' (ms)':>14}" for b in backends)
          + f" {'speedup':>8} {'max rel diff':>13}")
    for panels, n_phi in [(64, 64), (256, 64), (256, 256), (1024, 128)]:
        rho, wr = panel_rule(0.0, cfg.radial_cutoff, panels, 32)
        times = {}
        values = {}
        for name in backends:
            fn = get_tilde_sums(name)
            values[name] = np.array(fn(x_a, z_a, f, k, w, rho, wr, n_phi, 0)[:4])
            t = timeit.repeat(lambda: fn(x_a, z_a, f, k, w, rho, wr, n_phi, 0),
                              number=1, repeat=args.repeat)
            times[name] = 1e3 * min(t)
        ref = values["python"]
        diff = max(float(np.max(np.abs(values[b] - ref) / np.abs(ref))) for b in backends)
        speed = times["python"] / times.get("cython", times["python"])
        print(f"{panels:>7} {n_phi:>6} " + " ".join(f"{times[b]:>14.3f}" for b in backends)
              + f" {speed:>8.2f} {diff:>13.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
