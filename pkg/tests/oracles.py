"""Independent brute-force reference computations used by the tests.

Nothing here imports the code paths it checks; inputs are plain lists and
arrays.
"""

import itertools
import math

import numpy as np


def cantor_direct(x, y, resolution=64):
    """Per-position Cantor distances by explicit scanning (pure Python)."""
    n = len(x) - resolution + 1
    out = []
    for j in range(n):
        d = 0.0
        for i in range(resolution):
            if x[j + i] != y[j + i]:
                d = 2.0 ** -i
                break
        out.append(d)
    return out


def besicovitch_direct(d, nks):
    """max over n_k of the running average of ``d``."""
    best = 0.0
    for n in nks:
        best = max(best, sum(d[:n]) / n)
    return best


def density_scan(d, nks, grid):
    """Smallest grid value delta with max_k |{j < n_k : d_j >= delta}| / n_k < delta."""
    d = np.asarray(d)
    for delta in sorted(grid):
        worst = max(np.count_nonzero(d[:n] >= delta) / n for n in nks)
        if worst < delta:
            return delta
    return None


def transport_vertex_enum(a, b, cost):
    """Minimum of the transportation LP over all basic feasible solutions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    rows = []
    for i in range(m):
        r = np.zeros(m * n)
        r[i * n:(i + 1) * n] = 1
        rows.append(r)
    for j in range(n - 1):
        r = np.zeros(m * n)
        r[j::n] = 1
        rows.append(r)
    A = np.array(rows)
    rhs = np.concatenate([a, b[:-1]])
    r = m + n - 1
    combos = np.array(list(itertools.combinations(range(m * n), r)))
    mats = A[:, combos].transpose(1, 0, 2)  # (num, r, r)
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-9
    sols = np.linalg.solve(mats[ok], np.broadcast_to(rhs, (ok.sum(), r))[..., None])[..., 0]
    feasible = np.all(sols >= -1e-12, axis=1)
    costs = np.sum(sols * cost.ravel()[combos[ok]], axis=1)
    return float(costs[feasible].min())


def binary_entropy(p):
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def block_counts_direct(seq, n, k):
    """Dictionary word -> count over positions j < n (pure Python)."""
    out = {}
    for j in range(n):
        w = tuple(seq[j:j + k])
        out[w] = out.get(w, 0) + 1
    return out
