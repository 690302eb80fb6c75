"""Time the compiled and numpy kernel backends on the same inputs.

Run ``python benchmarks/bench_kernels.py``. Each case is checked for agreement
between backends before timing, so a speedup is never reported for a wrong
answer.
"""

import argparse
import timeit

import numpy as np

from rmtquench._backend import available_backends


def _cases(N):
    x = np.linspace(-20.0, 20.0, 400) + 0.5j
    E = np.linspace(-2 * np.sqrt(2 * N), 2 * np.sqrt(2 * N), 2000)
    t = np.linspace(0.0, 40.0, 400)
    return {
        "laguerre_rows": lambda k: k.laguerre_rows(N, 1, x),
        "hermite_table": lambda k: k.hermite_table(N, E),
        "dos_sum": lambda k: k.dos_sum(N, E),
        "connected_ff": lambda k: k.connected_ff(N, 1.0, t),
    }


def _value(out):
    if isinstance(out, tuple):
        mant, expo = out
        return np.asarray(mant) * np.exp2(np.asarray(expo, dtype=float))
    return np.asarray(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy backend is available")
    print(f"N = {args.N}, best of {args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, fn in _cases(args.N).items():
        ref = _value(fn(backends["python"]))
        times = {}
        for b, mod in backends.items():
            got = _value(fn(mod))
            if not np.allclose(got, ref, rtol=1e-10, atol=0, equal_nan=False):
                raise SystemExit(f"{name}: backend {b} disagrees with numpy")
            times[b] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = "".join(f"{times[b] * 1e3:>11.2f} ms" for b in backends)
        ratio = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<16}{row}{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
