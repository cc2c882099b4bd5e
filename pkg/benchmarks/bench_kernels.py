"""Compare the compiled kernels with their numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are checked
for identical output before timing; the FFT Toeplitz route is timed as a
reference because it serves large inputs in either backend.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from qrng_cert import extract, kernels
from qrng_cert.bits import pack_words


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def toeplitz_case(n: int, ell: int, repeat: int, rng: np.random.Generator) -> list[tuple]:
    x = rng.integers(0, 2, n, dtype=np.uint8)
    s = rng.integers(0, 2, n + ell - 1, dtype=np.uint8)
    xrev = pack_words(x[::-1])
    seed_words = np.zeros(((ell - 1) >> 6) + xrev.size + 1, dtype=np.uint64)
    sw = pack_words(s)
    seed_words[: sw.size] = sw
    backends = [("numpy", kernels.py_backend)]
    if kernels.c_backend is not None:
        backends.append(("cython", kernels.c_backend))
    ref = None
    rows = []
    for name, mod in backends:
        out = np.asarray(mod.toeplitz_direct(seed_words, xrev, ell))
        if ref is None:
            ref = out
        elif not np.array_equal(ref, out):
            raise SystemExit(f"toeplitz backends disagree at n={n}, ell={ell}")
        rows.append((f"toeplitz n={n} ell={ell}", name, _best(lambda: mod.toeplitz_direct(seed_words, xrev, ell), repeat)))
    if not np.array_equal(ref, extract.toeplitz_hash(x, ell, s, method="fft")):
        raise SystemExit("FFT route disagrees with the direct route")
    rows.append((f"toeplitz n={n} ell={ell}", "fft", _best(lambda: extract.toeplitz_hash(x, ell, s, method="fft"), repeat)))
    return rows


def compositions_case(n: int, d: int, repeat: int) -> list[tuple]:
    backends = [("numpy", kernels.py_backend)]
    if kernels.c_backend is not None:
        backends.append(("cython", kernels.c_backend))
    ref = None
    rows = []
    for name, mod in backends:
        out = np.asarray(mod.compositions(n, d))
        if ref is None:
            ref = out
        elif not np.array_equal(ref, out):
            raise SystemExit(f"composition backends disagree at n={n}, d={d}")
        rows.append((f"compositions n={n} d={d}", name, _best(lambda: mod.compositions(n, d), repeat)))
    return rows


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(1)
    sizes = [(4096, 2048)] if args.quick else [(4096, 2048), (50_000, 40_000), (200_000, 160_000)]
    rows = []
    for n, ell in sizes:
        rows += toeplitz_case(n, ell, args.repeat, rng)
    for n, d in [(2000, 2), (100, 4)] if args.quick else [(100_000, 2), (180, 4), (20, 8)]:
        rows += compositions_case(n, d, args.repeat)
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'backend':<7}  seconds")
    for case, backend, sec in rows:
        print(f"{case:<{width}}  {backend:<7}  {sec:.4f}")


if __name__ == "__main__":
    main()
