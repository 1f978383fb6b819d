"""Reference implementations of the orbit kernels (numpy, no compiled code).

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and bit-identical output; ``ergomet.kernels`` picks one at import time.
"""

import numpy as np

INDEPENDENT, MONOTONE, MAXIMAL = 0, 1, 2


def first_mismatch(x, y, n, resolution):
    """Offset of the first disagreement of ``x[j:]`` and ``y[j:]`` for ``j < n``.

    Offsets at or beyond ``resolution`` are reported as ``resolution``.
    Both windows must hold at least ``n + resolution - 1`` symbols.
    """
    length = n + resolution - 1
    x = np.asarray(x[:length])
    y = np.asarray(y[:length])
    big = np.int64(length + resolution)
    idx = np.where(x != y, np.arange(length, dtype=np.int64), big)
    nxt = np.minimum.accumulate(idx[::-1])[::-1]
    out = nxt[:n] - np.arange(n, dtype=np.int64)
    np.minimum(out, resolution, out=out)
    return out


def block_codes(x, k, base, n):
    """Base-``base`` integer code of each length-``k`` window starting at ``j < n``."""
    x = np.asarray(x, dtype=np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for i in range(k):
        codes *= base
        codes += x[i:i + n]
    return codes


def _inverse_cdf(cdf, u):
    a = 0
    last = cdf.shape[0] - 1
    while a < last and u >= cdf[a]:
        a += 1
    return a


def coupled_chain(cdf, acc, rcdf, rule, u, state, iid=False):
    """Advance ``C`` coupled finite-state chains through one window of uniforms.

    Parameters
    ----------
    cdf : (C, S+1, A) float array
        Cumulative transition rows; row ``S`` is the initial law.
    acc, rcdf : (C, S+1, S+1, A) float arrays
        Acceptance probabilities and residual CDFs of the per-step maximal
        coupling of component ``i`` against component 0.
    rule : int
        ``INDEPENDENT``, ``MONOTONE`` or ``MAXIMAL``.
    u : (W, 2C) float array
        Uniforms; component ``i`` owns columns ``2i`` and ``2i+1``.
    state : (C,) int array
        Previous symbols (``S`` before the first step); updated in place.
    iid : bool
        All transition rows equal the initial law, so steps are independent.

    Returns
    -------
    (C, W) int64 array of symbols.
    """
    n_comp = cdf.shape[0]
    width = u.shape[0]
    n_states = cdf.shape[1] - 1
    out = np.empty((n_comp, width), dtype=np.int64)
    if width == 0:
        return out
    if iid:
        _iid_chain(cdf, acc, rcdf, rule, u, out, n_states)
        state[:] = out[:, -1]
        return out
    for t in range(width):
        row = u[t]
        if rule == MAXIMAL:
            s0 = state[0]
            a0 = _inverse_cdf(cdf[0, s0], row[0])
            out[0, t] = a0
            for i in range(1, n_comp):
                si = state[i]
                if row[2 * i] < acc[i, s0, si, a0]:
                    out[i, t] = a0
                else:
                    out[i, t] = _inverse_cdf(rcdf[i, s0, si], row[2 * i + 1])
        else:
            for i in range(n_comp):
                col = 0 if rule == MONOTONE else 2 * i
                out[i, t] = _inverse_cdf(cdf[i, state[i]], row[col])
        state[:] = out[:, t]
    return out


def _search(cdf_row, u):
    a = np.searchsorted(cdf_row, u, side="right")
    return np.minimum(a, cdf_row.shape[0] - 1)


def _iid_chain(cdf, acc, rcdf, rule, u, out, n_states):
    n_comp = cdf.shape[0]
    s = n_states
    if rule == MAXIMAL:
        a0 = _search(cdf[0, s], u[:, 0])
        out[0] = a0
        for i in range(1, n_comp):
            keep = u[:, 2 * i] < acc[i, s, s][a0]
            other = _search(rcdf[i, s, s], u[:, 2 * i + 1])
            out[i] = np.where(keep, a0, other)
    else:
        for i in range(n_comp):
            col = 0 if rule == MONOTONE else 2 * i
            out[i] = _search(cdf[i, s], u[:, col])
