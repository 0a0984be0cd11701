"""Compare the compiled kernels with the NumPy fallback.

Run with ``python benchmarks/bench_kernels.py``. Reports the best of
several repeats for each kernel and backend, plus the agreement between
backends.
"""

import argparse
import timeit

import numpy as np

from forecastval import _kernels_py

try:
    from forecastval import _kernels as _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None


def _cells(ncells, size, rng):
    sizes = rng.integers(max(size // 2, 2), 2 * size, ncells)
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    y = (rng.random(offsets[-1]) < 0.3).astype(np.float64)
    w = rng.random(offsets[-1])
    return y, w, offsets


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=2000)
    ap.add_argument("--size", type=int, default=30)
    ap.add_argument("--gray-n", type=int, default=18)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    y, w, off = _cells(args.cells, args.size, rng)
    p = rng.uniform(0.05, 0.95, args.gray_n)
    cases = {
        "cell_sums": lambda k: k.cell_sums(w, off),
        "cell_moments": lambda k: k.cell_moments(y, off),
        "cell_weighted_ss": lambda k: k.cell_weighted_ss(y, w, off),
        f"gray_code_weights(n={args.gray_n})": lambda k: k.gray_code_weights(p),
    }
    backends = {"python": _kernels_py}
    if _kernels_cy is not None:
        backends["cython"] = _kernels_cy
    print(f"{y.size} records in {args.cells} cells")
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>12}")
    for name, fn in cases.items():
        times = {b: _time(lambda k=k: fn(k), args.repeat) for b, k in backends.items()}
        row = f"{name:<28}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if "cython" in backends:
            ref, fast = fn(_kernels_py), fn(_kernels_cy)
            ref = ref if isinstance(ref, tuple) else (ref,)
            fast = fast if isinstance(fast, tuple) else (fast,)
            diff = max(float(np.nanmax(np.abs(np.asarray(a, float) - np.asarray(b, float))))
                       for a, b in zip(ref, fast))
            row += f"{times['python'] / times['cython']:>9.1f}x{diff:>12.2e}"
        print(row)


if __name__ == "__main__":
    main()
