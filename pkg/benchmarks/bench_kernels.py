"""Time the numba loop kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Each pair is also cross-checked, so a speedup on a wrong answer shows up as
a mismatch rather than a win.  With LIMTERP_DISABLE_NUMBA=1 the loop
versions run as plain Python and the sizes are cut down.
"""

import argparse
import time

import numpy as np

from limterp import kernels as K
from limterp._accel import USE_NUMBA


def _time(fn, args, repeat):
    fn(*args)  # compile / warm caches
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(scale):
    rng = np.random.default_rng(0)
    n = 8
    s = np.linspace(-46.0, 46.0, 1281 * scale)
    logabsf = rng.uniform(-14.0, 14.0, n)
    logw0 = np.zeros(n)
    logw1 = np.linspace(-4.2, 4.2, n)
    yield "diag_logk", K.diag_logk_numpy, K.diag_logk_loop, (s, logabsf, logw0, logw1)

    t = np.exp(s)
    absf, w0, w1 = np.exp(logabsf), np.exp(logw0), np.exp(logw1)
    yield "intersection_k", K.intersection_k_numpy, K.intersection_k_loop, (t, absf, w0, w1)

    g = np.cumsum(rng.normal(size=20000 * scale))
    yield "envelope_gap", K.envelope_gap_numpy, K.envelope_gap_loop, (g,)

    m = 40
    alpha = 2.0 ** -np.arange(m, dtype=np.float64)
    beta = np.ones(m)
    gg = rng.normal(size=n)
    yield "block_dual", K.block_dual_numpy, K.block_dual_loop, (gg, alpha, beta, w0, w1)
    yield "onehot_upper", K.onehot_upper_numpy, K.onehot_upper_loop, (absf, alpha, beta, w0, w1, 2.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=int, default=None, help="problem size multiplier")
    args = ap.parse_args(argv)
    scale = args.scale or (8 if USE_NUMBA else 1)
    print(f"numba enabled: {USE_NUMBA}   scale: {scale}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'loop [ms]':>12}{'speedup':>10}  agree")
    for name, np_fn, loop_fn, a in cases(scale):
        tn, out_n = _time(np_fn, a, args.repeat)
        tl, out_l = _time(loop_fn, a, args.repeat)
        ok = np.allclose(out_n, out_l, rtol=1e-10, atol=0.0, equal_nan=True)
        print(f"{name:<16}{tn * 1e3:>12.3f}{tl * 1e3:>12.3f}{tn / tl:>10.2f}  {ok}")


if __name__ == "__main__":
    main()
