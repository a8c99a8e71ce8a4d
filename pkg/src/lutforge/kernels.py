"""Fused inference kernel: n curve steps driven by the LLUT, then NLUT and weight map.

Rows are distributed over numba threads; every pixel is computed independently
with the same instruction sequence, so output bytes do not depend on the
thread count.
"""

import os

import numba
import numpy as np
from numba import njit, prange

from ._validation import check_image, check_positive_int
from .curve import CURVE_MODES
from .noise import check_weight_map

THREADS_ENV = "LUTFORGE_THREADS"

# the bundled TBB is too old for numba; avoid probing it
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "omp"


@njit(inline="always")
def _cell(x, scale, size):
    # lower cell on exact interior lattice planes, same as ceil(p) - 1
    p = min(max(x, 0.0), 1.0) * scale
    i = int(p)
    if i == p:
        i -= 1
    return min(max(i, 0), size - 2), p


@njit(inline="always")
def _lookup_row(t, size, v, out, lo, hi):
    """Trilinear lookup of every pixel in the (3, w) plane ``v`` into ``out``.

    ``t`` is the channel-major table flattened to 1D. Results are clamped to
    [lo, hi]. Structure-of-arrays rows keep this loop vectorizable.
    """
    scale = size - 1
    sj = size
    si = size * size
    n3 = si * size
    for x in range(v.shape[1]):
        i, pr = _cell(v[0, x], scale, size)
        j, pg = _cell(v[1, x], scale, size)
        k, pb = _cell(v[2, x], scale, size)
        fr = pr - i
        fg = pg - j
        fb = pb - k
        base = i * si + j * sj + k
        for c in range(3):
            o = c * n3 + base
            # same lerp order as lut._blend: b, then g, then r
            c00 = t[o] + fb * (t[o + 1] - t[o])
            c01 = t[o + sj] + fb * (t[o + sj + 1] - t[o + sj])
            c10 = t[o + si] + fb * (t[o + si + 1] - t[o + si])
            c11 = t[o + si + sj] + fb * (t[o + si + sj + 1] - t[o + si + sj])
            c0 = c00 + fg * (c01 - c00)
            c1 = c10 + fg * (c11 - c10)
            val = c0 + fr * (c1 - c0)
            out[c, x] = min(max(val, lo), hi)


@njit(parallel=True, cache=True)
def _pipeline_kernel(img, llut, lsize, n, per_step, nlut, nsize, m, use_nlut, coarse, final):
    h, w = img.shape[0], img.shape[1]
    for y in prange(h):
        v = np.empty((3, w))
        a = np.empty((3, w))
        for x in range(w):
            for c in range(3):
                v[c, x] = img[y, x, c]
        for s in range(n):
            if s == 0 or per_step:
                _lookup_row(llut, lsize, v, a, -1.0, 1.0)
            for c in range(3):
                for x in range(w):
                    v[c, x] = v[c, x] + a[c, x] * v[c, x] * (1.0 - v[c, x])
        for x in range(w):
            for c in range(3):
                coarse[y, x, c] = v[c, x]
        if use_nlut:
            _lookup_row(nlut, nsize, v, a, -np.inf, np.inf)
            for x in range(w):
                for c in range(3):
                    final[y, x, c] = min(max(a[c, x] * m[y, x, c], 0.0), 1.0)


def _flat_table(lut):
    return np.ascontiguousarray(lut.table).reshape(-1)


def resolve_threads(threads=None):
    """Worker count from the argument, then ``LUTFORGE_THREADS``, capped at numba's pool size."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else numba.config.NUMBA_NUM_THREADS
    threads = check_positive_int(threads, "threads")
    return min(threads, numba.config.NUMBA_NUM_THREADS)


def run_pipeline(img, llut, nlut=None, weight_map=None, n=8, mode="per_step_lookup", threads=None):
    """Enhance ``img`` with the fused kernel.

    Returns ``(coarse, final)``; ``final`` is ``None`` when no NLUT is given.
    A missing weight map means ``m = 1``.
    """
    if not llut.is_param:
        raise ValueError("llut must be a (-1, 1) parameter LUT")
    if mode not in CURVE_MODES:
        raise ValueError(f"mode must be one of {CURVE_MODES}, got {mode!r}")
    n = check_positive_int(n, "n")
    img = np.ascontiguousarray(check_image(img))
    use_nlut = nlut is not None
    if use_nlut:
        if nlut.is_param:
            raise ValueError("nlut must be a (0, 1) color LUT")
        ntab, nsize = _flat_table(nlut), nlut.size
        if weight_map is None:
            m = np.ones_like(img)
        else:
            m = np.ascontiguousarray(check_weight_map(weight_map, img.shape))
    else:
        ntab, nsize = np.zeros(24), 2
        m = np.ones((1, 1, 3))
    ltab = _flat_table(llut)
    coarse = np.empty_like(img)
    final = np.empty_like(img) if use_nlut else np.empty((1, 1, 3))
    previous = numba.get_num_threads()
    numba.set_num_threads(resolve_threads(threads))
    try:
        _pipeline_kernel(img, ltab, llut.size, n, mode == "per_step_lookup",
                         ntab, nsize, m, use_nlut, coarse, final)
    finally:
        numba.set_num_threads(previous)
    return coarse, (final if use_nlut else None)
