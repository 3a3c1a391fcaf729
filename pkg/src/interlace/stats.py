"""Statistical verification helpers: energy-distance permutation test."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform


def energy_distance_test(x, y, n_perm: int = 1000, rng=None,
                         max_points: int = 2048):
    """Two-sample energy distance test with a permutation p-value.

    Both samples are (m, d) arrays.  To keep the pooled distance matrix at
    desk scale, each group is subsampled (without replacement, seeded) to at
    most ``max_points`` rows before the permutation stage; the null validity
    of the p-value is unaffected.  Returns (statistic, pvalue).
    """
    rng = np.random.default_rng() if rng is None else rng
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise ValueError("samples must share the coordinate dimension")
    if x.shape[0] > max_points:
        x = x[rng.choice(x.shape[0], size=max_points, replace=False)]
    if y.shape[0] > max_points:
        y = y[rng.choice(y.shape[0], size=max_points, replace=False)]
    nx, ny = x.shape[0], y.shape[0]
    pooled = np.vstack([x, y])
    dist = squareform(pdist(pooled))
    total = dist.sum()

    def estat(mask):
        u = dist @ mask
        sx = mask @ u
        sy = total - 2.0 * u.sum() + sx  # sum over the complement block
        sxy = u.sum() - sx
        na = mask.sum()
        nb = mask.size - na
        return 2.0 * sxy / (na * nb) - sx / (na * (na - 1)) - sy / (nb * (nb - 1))

    base = np.zeros(nx + ny)
    base[:nx] = 1.0
    observed = estat(base)
    count = 0
    for _ in range(n_perm):
        perm = rng.permutation(nx + ny)
        if estat(base[perm]) >= observed:
            count += 1
    pvalue = (count + 1.0) / (n_perm + 1.0)
    return float(observed), float(pvalue)
