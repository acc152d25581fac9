"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_backends.py --mn-product 2**21 --cols 8,32 --reps 5
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from skinny_qr import SpectrumSpec, _backend, cholqr2, generate, svqb2, tsqr_qless


def _time(fn, reps):
    fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mn-product", default="2**21")
    p.add_argument("--cols", default="1,8,16,32,64")
    p.add_argument("--reps", type=int, default=5)
    args = p.parse_args(argv)
    base, _, exp = args.mn_product.partition("**")
    mn = int(float(base) ** int(exp)) if exp else int(float(base))
    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled extension not available; only the fallback can run")
    methods = {"tsqr": tsqr_qless, "cholqr2": cholqr2, "svqb2": svqb2}
    print(f"{'method':>8} {'n':>3} " + " ".join(f"{b + ' [ms]':>14}" for b in backends) + "  speedup")
    for n in (int(c) for c in args.cols.split(",")):
        X = generate(mn // n, n, SpectrumSpec(1.0 if n == 1 else 1e3))
        for name, fn in methods.items():
            t = {}
            out = {}
            for b in backends:
                with _backend.use_backend(b):
                    t[b] = _time(lambda: fn(X), args.reps)
                    r = fn(X)
                    out[b] = r.z if hasattr(r, "z") else r
            speed = t["python"] / t["compiled"] if "compiled" in t else float("nan")
            agree = max(np.max(np.abs(v - out["python"])) for v in out.values())
            row = " ".join(f"{t[b] * 1e3:14.3f}" for b in backends)
            print(f"{name:>8} {n:>3} {row}  {speed:6.1f}x  (max diff {agree:.1e})")


if __name__ == "__main__":
    main()
