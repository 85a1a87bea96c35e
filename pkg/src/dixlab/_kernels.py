"""Hot loops over diagonal-stored (banded) operators.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version.  Set ``DIXLAB_DISABLE_NUMBA=1`` to force the numpy path (also used
automatically when numba cannot be imported).

Storage convention ("row aligned"): ``data[b, i] = A[i, i + offsets[b]]``;
positions where ``i + offsets[b]`` falls outside ``[0, dim)`` hold zero.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("DIXLAB_DISABLE_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path


def _np_band_matmul_fill(off_a, data_a, off_b, data_b, pair_out, out):
    dim = data_a.shape[1]
    for ia in range(off_a.shape[0]):
        p = off_a[ia]
        lo = max(0, -p)
        hi = min(dim, dim - p)
        if lo >= hi:
            continue
        for ib in range(off_b.shape[0]):
            o = pair_out[ia, ib]
            if o < 0:
                continue
            out[o, lo:hi] += data_a[ia, lo:hi] * data_b[ib, lo + p : hi + p]
    return out


def _np_band_diag_product(off_a, data_a, off_b, data_b):
    dim = data_a.shape[1]
    diag = np.zeros(dim, dtype=np.complex128)
    lookup = {int(o): k for k, o in enumerate(off_b)}
    for ia in range(off_a.shape[0]):
        p = int(off_a[ia])
        ib = lookup.get(-p)
        if ib is None:
            continue
        lo = max(0, -p)
        hi = min(dim, dim - p)
        if lo < hi:
            diag[lo:hi] += data_a[ia, lo:hi] * data_b[ib, lo + p : hi + p]
    return diag


def _np_blocks_from_bands(offsets, data, period, size):
    blocks = np.zeros((period, size, size), dtype=np.complex128)
    for b in range(offsets.shape[0]):
        k = offsets[b] // period
        rows = data[b].reshape(size, period)
        s_lo = max(0, -k)
        s_hi = min(size, size - k)
        if s_lo >= s_hi:
            continue
        s = np.arange(s_lo, s_hi)
        blocks[:, s, s + k] = rows[s_lo:s_hi, :].T
    return blocks


def _np_bands_from_blocks(blocks, ks):
    period, size, _ = blocks.shape
    data = np.zeros((ks.shape[0], period * size), dtype=np.complex128)
    for b in range(ks.shape[0]):
        k = ks[b]
        s_lo = max(0, -k)
        s_hi = min(size, size - k)
        if s_lo >= s_hi:
            continue
        s = np.arange(s_lo, s_hi)
        view = data[b].reshape(size, period)
        view[s_lo:s_hi, :] = blocks[:, s, s + k].T
    return data


# ---------------------------------------------------------------- numba path

if numba is not None:

    @numba.njit(cache=True)
    def _nb_band_matmul_fill(off_a, data_a, off_b, data_b, pair_out, out):
        dim = data_a.shape[1]
        for ia in range(off_a.shape[0]):
            p = off_a[ia]
            lo = max(0, -p)
            hi = min(dim, dim - p)
            for ib in range(off_b.shape[0]):
                o = pair_out[ia, ib]
                if o < 0:
                    continue
                for i in range(lo, hi):
                    out[o, i] += data_a[ia, i] * data_b[ib, i + p]
        return out

    @numba.njit(cache=True)
    def _nb_band_diag_product(off_a, data_a, off_b, data_b):
        dim = data_a.shape[1]
        diag = np.zeros(dim, dtype=np.complex128)
        for ia in range(off_a.shape[0]):
            p = off_a[ia]
            ib = -1
            for j in range(off_b.shape[0]):
                if off_b[j] == -p:
                    ib = j
                    break
            if ib < 0:
                continue
            lo = max(0, -p)
            hi = min(dim, dim - p)
            for i in range(lo, hi):
                diag[i] += data_a[ia, i] * data_b[ib, i + p]
        return diag

    @numba.njit(cache=True)
    def _nb_blocks_from_bands(offsets, data, period, size):
        blocks = np.zeros((period, size, size), dtype=np.complex128)
        for b in range(offsets.shape[0]):
            k = offsets[b] // period
            for s in range(max(0, -k), min(size, size - k)):
                base = period * s
                for r in range(period):
                    blocks[r, s, s + k] = data[b, base + r]
        return blocks

    @numba.njit(cache=True)
    def _nb_bands_from_blocks(blocks, ks):
        period, size, _ = blocks.shape
        data = np.zeros((ks.shape[0], period * size), dtype=np.complex128)
        for b in range(ks.shape[0]):
            k = ks[b]
            for s in range(max(0, -k), min(size, size - k)):
                base = period * s
                for r in range(period):
                    data[b, base + r] = blocks[r, s, s + k]
        return data


# ---------------------------------------------------------------- dispatch


def band_matmul(off_a, data_a, off_b, data_b):
    """Product of two row-aligned band stores; returns ``(offsets, data)``."""
    dim = data_a.shape[1]
    sums = off_a[:, None] + off_b[None, :]
    valid = np.abs(sums) < dim
    out_offsets = np.unique(sums[valid])
    pair_out = np.full(sums.shape, -1, dtype=np.int64)
    pair_out[valid] = np.searchsorted(out_offsets, sums[valid])
    out = np.zeros((out_offsets.shape[0], dim), dtype=np.complex128)
    if out_offsets.shape[0] == 0:
        return out_offsets.astype(np.int64), out
    fill = _nb_band_matmul_fill if USE_NUMBA else _np_band_matmul_fill
    fill(off_a, data_a, off_b, data_b, pair_out, out)
    return out_offsets.astype(np.int64), out


def band_diag_product(off_a, data_a, off_b, data_b):
    """Diagonal of ``A @ B`` without forming the product."""
    if off_a.shape[0] == 0 or off_b.shape[0] == 0:
        return np.zeros(data_a.shape[1], dtype=np.complex128)
    fn = _nb_band_diag_product if USE_NUMBA else _np_band_diag_product
    return fn(off_a, data_a, off_b, data_b)


def blocks_from_bands(offsets, data, period, size):
    """Gather the ``period`` independent ``size x size`` blocks.

    Block ``r`` acts on indices ``r, r + period, r + 2*period, ...``; every
    offset must be a multiple of ``period``.
    """
    if offsets.shape[0] == 0:
        return np.zeros((period, size, size), dtype=np.complex128)
    fn = _nb_blocks_from_bands if USE_NUMBA else _np_blocks_from_bands
    return fn(offsets, data, period, size)


def bands_from_blocks(blocks, ks):
    """Scatter blocks back into bands with offsets ``ks * period``."""
    fn = _nb_bands_from_blocks if USE_NUMBA else _np_bands_from_blocks
    return fn(np.ascontiguousarray(blocks, dtype=np.complex128), ks)
