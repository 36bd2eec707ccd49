"""Independent reference implementations shared by the test modules."""

import numba
import numpy as np


@numba.njit(cache=True)
def _naive(x, K, circular):
    c_out, c_in, k = K.shape[0], K.shape[1], K.shape[2]
    D, H, W = x.shape[1], x.shape[2], x.shape[3]
    h = (k - 1) // 2
    out = np.zeros((c_out, D, H, W))
    for o in range(c_out):
        for z in range(D):
            for y in range(H):
                for xx in range(W):
                    acc = 0.0
                    for i in range(c_in):
                        for dz in range(k):
                            for dy in range(k):
                                for dx in range(k):
                                    zz, yy, ww = z + dz - h, y + dy - h, xx + dx - h
                                    if circular:
                                        zz, yy, ww = zz % D, yy % H, ww % W
                                    elif zz < 0 or zz >= D or yy < 0 or yy >= H or ww < 0 or ww >= W:
                                        continue
                                    acc += K[o, i, dz, dy, dx] * x[i, zz, yy, ww]
                    out[o, z, y, xx] = acc
    return out


def naive_correlate(x, K, circular=False):
    """Same-size correlation by explicit loops over every output voxel."""
    return _naive(np.ascontiguousarray(x, dtype=np.float64), np.ascontiguousarray(K, dtype=np.float64), bool(circular))


def random_instance(rng, max_channels=4, max_size=16, kernel_sizes=(1, 3, 5)):
    c_in = int(rng.integers(1, max_channels + 1))
    c_out = int(rng.integers(1, max_channels + 1))
    k = int(rng.choice(kernel_sizes))
    shape = tuple(int(s) for s in rng.integers(max(k, 4), max_size + 1, size=3))
    return rng.standard_normal((c_in,) + shape), rng.standard_normal((c_out, c_in, k, k, k))
