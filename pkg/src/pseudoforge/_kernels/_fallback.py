"""Pure-Python (numpy) implementations of the hot kernels.

Used when the compiled extension is unavailable. Every function here must
produce bit-identical output to its compiled counterpart; the arithmetic is
kept in the same order on purpose.
"""

import numpy as np

BACKEND_NAME = "python"


def distance_field(boundary):
    """Exact Euclidean distance of every pixel to the nearest True pixel.

    Two-pass separable transform: a vertical sweep collects per-column
    nearest-seed distances, then a per-row lower-envelope pass over the
    squared distances makes them fully 2-D. Squared distances stay integral
    throughout, so the result is exact.
    """
    b = np.ascontiguousarray(boundary, dtype=bool)
    h, w = b.shape
    inf = h + w  # exceeds any within-image vertical distance

    d1 = np.full((h, w), inf, dtype=np.int64)
    d1[b] = 0
    for i in range(1, h):
        np.minimum(d1[i], d1[i - 1] + 1, out=d1[i])
    for i in range(h - 2, -1, -1):
        np.minimum(d1[i], d1[i + 1] + 1, out=d1[i])

    d2 = np.empty((h, w), dtype=np.int64)
    v = [0] * w          # parabola sites
    z = [0.0] * (w + 1)  # envelope breakpoints
    for i in range(h):
        f = d1[i]
        fsq = (f * f).tolist()
        k = 0
        v[0] = 0
        z[0] = -np.inf
        z[1] = np.inf
        for q in range(1, w):
            fq = fsq[q] + q * q
            s = (fq - fsq[v[k]] - v[k] * v[k]) / (2 * (q - v[k]))
            while s <= z[k]:
                k -= 1
                s = (fq - fsq[v[k]] - v[k] * v[k]) / (2 * (q - v[k]))
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        k = 0
        row = d2[i]
        for j in range(w):
            while z[k + 1] < j:
                k += 1
            dj = j - v[k]
            row[j] = dj * dj + fsq[v[k]]
    return np.sqrt(d2.astype(np.float64))


def laplacian5(values):
    """5-point Laplacian with replicate padding at the image border."""
    p = np.pad(np.ascontiguousarray(values, dtype=np.float64), 1, mode="edge")
    return (
        p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
        - 4.0 * p[1:-1, 1:-1]
    )


def rle_encode(bits):
    """Column-major run lengths, alternating and starting with background."""
    flat = np.ascontiguousarray(bits, dtype=bool).ravel(order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    runs = (ends - starts).astype(np.int64)
    if flat[0]:
        runs = np.concatenate(([0], runs))
    return runs


def rle_decode(counts, height, width):
    """Inverse of rle_encode; counts must sum to height * width."""
    counts = np.asarray(counts, dtype=np.int64)
    vals = np.arange(counts.size, dtype=np.int64) % 2 == 1
    flat = np.repeat(vals, counts)
    return flat.reshape((height, width), order="F")
