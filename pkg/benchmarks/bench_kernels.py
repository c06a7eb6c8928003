"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py --sites 12 --repeat 5
"""
import argparse
import timeit

import numpy as np

from locality_lab import _kernels_py

try:
    from locality_lab import _kernels as _compiled
except ImportError:
    _compiled = None


def _cases(args):
    rng = np.random.default_rng(args.seed)
    mat2 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    support = (args.sites // 2 - 1, args.sites // 2)
    t = rng.uniform(-50, 50, args.times)
    w = rng.uniform(0, 1, args.freqs)
    c = rng.standard_normal(args.freqs)
    return {
        f"embed_coo  n={args.sites} two-site": lambda m: m.embed_coo(args.sites, 2, support, mat2),
        f"fourier_sums {args.times}x{args.freqs}": lambda m: m.fourier_sums(t, w, c, True),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sites", type=int, default=12)
    p.add_argument("--times", type=int, default=2000)
    p.add_argument("--freqs", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':<32} " + " ".join(f"{b:>12}" for b in backends) + "   speedup")
    for name, fn in _cases(args).items():
        best = {}
        for b, mod in backends.items():
            fn(mod)  # warm up
            best[b] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        cols = " ".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
        speed = f"{best['python'] / best['cython']:8.1f}x" if "cython" in best else ""
        print(f"{name:<32} {cols} {speed}")


if __name__ == "__main__":
    main()
