"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--dim 65536] [--repeat 5]

Both implementations are called directly, so the DIXLAB_DISABLE_NUMBA flag
does not matter here.  The first numba call (compilation or cache load) is
excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from dixlab import _kernels


def bands(rng, dim, offsets):
    offsets = np.asarray(offsets, dtype=np.int64)
    data = rng.standard_normal((offsets.size, dim)) + 1j * rng.standard_normal((offsets.size, dim))
    return offsets, data


def cases(dim, rng):
    off_a, a = bands(rng, dim, [-3, -1, 0, 2, 5])
    off_b, b = bands(rng, dim, [-2, 0, 1, 4])
    sums = off_a[:, None] + off_b[None, :]
    out_off = np.unique(sums)
    pair_out = np.searchsorted(out_off, sums).astype(np.int64)

    def matmul(fill):
        out = np.zeros((out_off.size, dim), dtype=np.complex128)
        fill(off_a, a, off_b, b, pair_out, out)
        return out

    half = dim // 2
    off_c, c = bands(rng, dim, [-half, 0, half])
    blocks = _kernels._np_blocks_from_bands(off_c, c, half, 2)
    ks = np.arange(-1, 2, dtype=np.int64)

    yield "band_matmul", lambda: matmul(_kernels._np_band_matmul_fill), lambda: matmul(_kernels._nb_band_matmul_fill)
    yield (
        "band_diag_product",
        lambda: _kernels._np_band_diag_product(off_a, a, off_b, b),
        lambda: _kernels._nb_band_diag_product(off_a, a, off_b, b),
    )
    yield (
        "blocks_from_bands",
        lambda: _kernels._np_blocks_from_bands(off_c, c, half, 2),
        lambda: _kernels._nb_blocks_from_bands(off_c, c, half, 2),
    )
    yield (
        "bands_from_blocks",
        lambda: _kernels._np_bands_from_blocks(blocks, ks),
        lambda: _kernels._nb_bands_from_blocks(blocks, ks),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=65536)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if not hasattr(_kernels, "_nb_band_matmul_fill"):
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"dim={args.dim}, best of {args.repeat}")
    print(f"{'kernel':20s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, np_fn, nb_fn in cases(args.dim, rng):
        ref, got = np_fn(), nb_fn()
        if not np.allclose(ref, got, atol=1e-10):
            raise SystemExit(f"{name}: implementations disagree")
        t_np = min(timeit.repeat(np_fn, number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(nb_fn, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:20s} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
