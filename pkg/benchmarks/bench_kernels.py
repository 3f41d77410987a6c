"""Time each numeric kernel under numba and numpy and check that they agree.

    python benchmarks/bench_kernels.py [--repeat N] [--scale S]

``--scale`` multiplies the problem sizes. Numba compile time is excluded by
a warm-up call.
"""
import argparse
import time

import numpy as np

from mechlab import _accel, kernels


def _time(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def _close(a, b):
    if isinstance(a, tuple):
        return all(_close(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=1e-12)


def cases(scale, rng):
    n = int(200_000 * scale)
    w = rng.random(n)
    dw = rng.standard_normal(n)
    yield "ratio_test", (w, dw, 1e-9)

    vals = np.sort(np.repeat(rng.integers(0, n // 4, n).astype(float), 2))
    probs = np.full(vals.size, 1.0 / vals.size)
    yield "merge_atoms", (vals, probs, 1e-12)

    u = rng.random((int(20_000 * scale), 100))
    yield "er_block_sums", (u,)

    t = int(150 * np.sqrt(scale))
    yield "pair_gaps", (rng.random((t, 2)), rng.random((t, 2)), rng.random(t))

    worth = rng.integers(0, 20, (36, 3)).astype(float)
    prices = rng.integers(0, 25, (int(50_000 * scale), 3)).astype(float)
    prices[prices > 22] = np.inf
    yield "menu_revenues", (worth, prices, np.full(36, 1 / 36), 0.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy kernels can run")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<15} {'numpy s':>10} {'numba s':>10} {'speedup':>8}  agree")
    for name, inputs in cases(args.scale, rng):
        f_np = getattr(kernels, name + "_numpy")
        t_np = _time(f_np, inputs, args.repeat)
        if _accel.NUMBA_AVAILABLE:
            f_nb = getattr(kernels, name + "_numba")
            t_nb = _time(f_nb, inputs, args.repeat)
            agree = _close(f_np(*inputs), f_nb(*inputs))
            print(f"{name:<15} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f}  {agree}")
        else:
            print(f"{name:<15} {t_np:>10.4f} {'-':>10} {'-':>8}  -")


if __name__ == "__main__":
    main()
