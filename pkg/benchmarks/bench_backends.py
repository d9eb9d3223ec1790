"""Time the numba Jacobi kernel against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py [--sizes 10 30 60] [--repeats 5]

Both backends run on the same random correlation matrices. The script reports
median wall time per decomposition, the speedup, and the largest absolute
difference between the two backends' eigenvalues and eigenvectors.
"""

import argparse
import statistics
import time

import numpy as np

from eigenfolio import _kernels
from eigenfolio.eigensolver import eigh
from eigenfolio.stats import CorrelationMatrix


def random_correlation(rng, n):
    x = rng.normal(size=(3 * n, 2)) @ rng.normal(size=(2, n)) + rng.normal(size=(3 * n, n))
    return np.corrcoef(x, rowvar=False)


def time_backend(rho, backend, repeats):
    eigh(rho, backend=backend)  # warm-up, includes jit compilation for numba
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        d = eigh(rho, backend=backend)
        times.append(time.perf_counter() - start)
    return statistics.median(times), d


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[10, 30, 60])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'N':>4} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for n in args.sizes:
        rho = CorrelationMatrix(random_correlation(rng, n), tuple(f"A{i}" for i in range(n)))
        t_nb, d_nb = time_backend(rho, "numba", args.repeats)
        t_np, d_np = time_backend(rho, "numpy", args.repeats)
        diff = max(np.abs(d_nb.eigenvalues - d_np.eigenvalues).max(),
                   np.abs(d_nb.eigenvectors - d_np.eigenvectors).max())
        print(f"{n:>4} {1e3 * t_nb:>10.3f} {1e3 * t_np:>10.3f} {t_np / t_nb:>7.1f}x {diff:>11.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
