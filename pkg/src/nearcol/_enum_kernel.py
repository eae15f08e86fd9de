"""Floating-point Schnorr-Euchner tree walk.

The walk only proposes candidates; callers re-check every candidate exactly.
"""

import numpy as np
from numba import njit

MARGIN = 1.0 + 2.0**-20


@njit(cache=True)
def enum_walk(mu, r, tau, radius_sq, svp, max_sols):
    """Enumerate integer x with sum_j (y_j - tau_j)^2 r_j <= radius_sq.

    ``mu`` is lower triangular (mu[i, j], j < i), y_j = x_j + sum_{i>j} x_i mu[i, j].
    In svp mode tau must be zero, the zero vector is skipped and only vectors
    whose last nonzero coordinate is positive are produced. Whenever a leaf
    is found the radius shrinks to its (float) distance times MARGIN, so the
    last candidates returned are the relevant ones.
    """
    n = r.shape[0]
    sols = np.zeros((max_sols, n), dtype=np.int64)
    dists = np.zeros(max_sols, dtype=np.float64)
    nsol = 0
    x = np.zeros(n, dtype=np.int64)
    base = np.zeros(n, dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    sgn = np.zeros(n, dtype=np.int64)
    half = np.zeros(n, dtype=np.bool_)  # svp: all coordinates above are zero
    c = np.zeros(n, dtype=np.float64)
    part = np.zeros(n + 1, dtype=np.float64)
    nodes = 0

    k = n - 1
    c[k] = tau[k]
    half[k] = svp
    if svp:
        base[k] = 0
        sgn[k] = 1
    else:
        base[k] = np.int64(np.floor(c[k] + 0.5))
        sgn[k] = 1 if c[k] >= base[k] else -1
    step[k] = 0
    x[k] = base[k]

    while True:
        nodes += 1
        d = x[k] - c[k]
        newl = part[k + 1] + d * d * r[k]
        if newl <= radius_sq:
            if k == 0:
                is_zero = False
                if svp and half[0] and x[0] == 0:
                    is_zero = True
                if not is_zero:
                    if nsol == max_sols:
                        # compact: keep those still inside the current radius
                        w = 0
                        for s in range(nsol):
                            if dists[s] <= radius_sq:
                                sols[w, :] = sols[s, :]
                                dists[w] = dists[s]
                                w += 1
                        nsol = w
                        if nsol == max_sols:
                            # cannot shrink: drop the oldest half
                            keep = max_sols // 2
                            for s in range(keep):
                                sols[s, :] = sols[nsol - keep + s, :]
                                dists[s] = dists[nsol - keep + s]
                            nsol = keep
                    sols[nsol, :] = x
                    dists[nsol] = newl
                    nsol += 1
                    if newl * MARGIN < radius_sq:
                        radius_sq = newl * MARGIN
            else:
                part[k] = newl
                k -= 1
                s = tau[k]
                for i in range(k + 1, n):
                    s -= x[i] * mu[i, k]
                c[k] = s
                half[k] = half[k + 1] and x[k + 1] == 0
                if half[k]:
                    base[k] = 0
                    sgn[k] = 1
                else:
                    base[k] = np.int64(np.floor(s + 0.5))
                    sgn[k] = 1 if s >= base[k] else -1
                step[k] = 0
                x[k] = base[k]
                continue
        else:
            k += 1
            if k == n:
                break
        # next sibling at level k
        step[k] += 1
        if half[k]:
            x[k] = step[k]
        else:
            t = step[k]
            if t % 2 == 1:
                x[k] = base[k] + sgn[k] * ((t + 1) // 2)
            else:
                x[k] = base[k] - sgn[k] * (t // 2)
    return sols[:nsol].copy(), dists[:nsol].copy(), nodes
