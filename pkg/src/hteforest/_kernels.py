"""Compiled kernels for tree growing and prediction.

All randomness inside the kernels comes from a splitmix64 counter stream
whose initial state is derived outside from (seed, tree_index), so tree
training is bit-reproducible regardless of execution order or thread count.
"""

import numpy as np
from numba import njit, uint64

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)

# Relative tolerance below which a variance-reduction gain is treated as
# floating-point cancellation noise rather than a real improvement.
_GAIN_RTOL = 1e-12


@njit(cache=True, nogil=True, inline="always")
def _next_u64(st):
    st[0] = st[0] + _GOLDEN
    z = st[0]
    z = (z ^ (z >> uint64(30))) * _MIX1
    z = (z ^ (z >> uint64(27))) * _MIX2
    return z ^ (z >> uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _rand_below(st, n):
    return np.int64(_next_u64(st) % uint64(n))


@njit(cache=True, nogil=True)
def _draw_subsample(st, n, k):
    """First k entries of a seeded partial Fisher-Yates shuffle of 0..n-1."""
    idx = np.arange(n)
    for i in range(k):
        j = i + _rand_below(st, n - i)
        tmp = idx[i]
        idx[i] = idx[j]
        idx[j] = tmp
    return idx[:k].copy()


@njit(cache=True, nogil=True)
def _sample_features(st, p, mtry):
    if mtry >= p:
        return np.arange(p)
    pool = np.arange(p)
    for i in range(mtry):
        j = i + _rand_below(st, p - i)
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp
    return pool[:mtry].copy()


@njit(cache=True, nogil=True)
def _grow_tree(X, y, w, arm, s_init, e_init, mtry, min_node, is_causal, seed_state):
    """Grow one tree; returns flat node arrays.

    s_init / e_init are the structure and estimation index sets.  For a
    regression tree, w and arm are ignored.  For a causal tree, y and w are
    the residualized outcome/treatment and arm is the raw 0/1 treatment used
    for per-arm child admissibility.

    Node arrays use feature == -1 to mark leaves.
    """
    n_s = s_init.shape[0]
    p = X.shape[1]
    max_nodes = 2 * n_s + 1

    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)
    est_count = np.zeros(max_nodes, np.int64)

    st = np.empty(1, np.uint64)
    st[0] = seed_state

    s = s_init.copy()
    e = e_init.copy()

    # stack rows: node_id, s_lo, s_hi, e_lo, e_hi
    stack = np.empty((max_nodes, 5), np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_s
    stack[0, 3] = 0
    stack[0, 4] = e.shape[0]
    node_count = 1

    while top >= 0:
        nid = stack[top, 0]
        s_lo = stack[top, 1]
        s_hi = stack[top, 2]
        e_lo = stack[top, 3]
        e_hi = stack[top, 4]
        top -= 1

        m = s_hi - s_lo
        ne = e_hi - e_lo

        # leaf estimate from the estimation half only
        if is_causal:
            swy = 0.0
            sww = 0.0
            for k in range(e_lo, e_hi):
                i = e[k]
                swy += w[i] * y[i]
                sww += w[i] * w[i]
            value[nid] = swy / sww if sww > 0.0 else 0.0
        else:
            sy = 0.0
            for k in range(e_lo, e_hi):
                sy += y[e[k]]
            value[nid] = sy / ne
        est_count[nid] = ne

        if m < 2 * min_node or ne < 2:
            continue

        # node-level structure statistics; the regression criterion works on
        # centered targets, the causal slope needs the raw residuals
        mu = 0.0
        if not is_causal:
            for k in range(s_lo, s_hi):
                mu += y[s[k]]
            mu /= m
        msq = 0.0
        for k in range(s_lo, s_hi):
            msq += y[s[k]] * y[s[k]]
        msq /= m
        gain_eps = _GAIN_RTOL * m * msq

        tot_arm1 = 0
        if is_causal:
            for k in range(s_lo, s_hi):
                tot_arm1 += arm[s[k]]

        feats = _sample_features(st, p, mtry)

        best_crit = 0.0
        best_feat = -1
        best_thr = 0.0
        found = False

        sv = np.empty(m)
        sy_c = np.empty(m)
        sw_s = np.empty(m)
        sa_s = np.empty(m, np.int64)
        ev = np.empty(ne)
        ea = np.empty(ne, np.int64)

        for fi in range(feats.shape[0]):
            f = feats[fi]
            for k in range(m):
                sv[k] = X[s[s_lo + k], f]
            order = np.argsort(sv)
            svs = sv[order]
            if svs[0] == svs[m - 1]:
                continue
            for k in range(m):
                idx = s[s_lo + order[k]]
                sy_c[k] = y[idx] - mu
                if is_causal:
                    sw_s[k] = w[idx]
                    sa_s[k] = arm[idx]

            for k in range(ne):
                ev[k] = X[e[e_lo + k], f]
            eorder = np.argsort(ev)
            evs = ev[eorder]
            if is_causal:
                for k in range(ne):
                    ea[k] = arm[e[e_lo + eorder[k]]]

            # running left-side accumulators over the sorted structure units
            cy = 0.0
            cwy = 0.0
            cww = 0.0
            ca1 = 0
            # totals
            ty = 0.0
            twy = 0.0
            tww = 0.0
            for k in range(m):
                ty += sy_c[k]
                if is_causal:
                    twy += sw_s[k] * sy_c[k]
                    tww += sw_s[k] * sw_s[k]

            j = 0  # estimation pointer
            ce1 = 0  # arm-1 estimation units on the left

            for i in range(1, m):
                k = i - 1
                cy += sy_c[k]
                if is_causal:
                    cwy += sw_s[k] * sy_c[k]
                    cww += sw_s[k] * sw_s[k]
                    ca1 += sa_s[k]
                if svs[k] == svs[i]:
                    continue
                thr = 0.5 * (svs[k] + svs[i])
                n_l = i
                n_r = m - i
                if n_l < min_node or n_r < min_node:
                    continue
                while j < ne and evs[j] <= thr:
                    if is_causal:
                        ce1 += ea[j]
                    j += 1
                e_l = j
                e_r = ne - j
                if e_l < 1 or e_r < 1:
                    continue

                if is_causal:
                    # each child's structure and estimation halves need
                    # both treatment arms
                    if ca1 < 1 or n_l - ca1 < 1:
                        continue
                    if tot_arm1 - ca1 < 1 or n_r - (tot_arm1 - ca1) < 1:
                        continue
                    if ce1 < 1 or e_l - ce1 < 1:
                        continue
                    e_r1 = 0
                    for q in range(j, ne):
                        e_r1 += ea[q]
                    if e_r1 < 1 or e_r - e_r1 < 1:
                        continue
                    rww = tww - cww
                    if cww <= 0.0 or rww <= 0.0:
                        continue
                    tau_l = cwy / cww
                    tau_r = (twy - cwy) / rww
                    d = tau_l - tau_r
                    crit = (n_l * n_r) / float(m * m) * d * d
                    ok = crit > 0.0
                else:
                    ry = ty - cy
                    crit = cy * cy / n_l + ry * ry / n_r - ty * ty / m
                    ok = crit > gain_eps

                if ok and (
                    crit > best_crit
                    or (
                        crit == best_crit
                        and found
                        and (f < best_feat or (f == best_feat and thr < best_thr))
                    )
                ):
                    best_crit = crit
                    best_feat = f
                    best_thr = thr
                    found = True

        if not found:
            continue

        # partition structure and estimation index ranges (stable)
        s_mid = _partition(s, s_lo, s_hi, X, best_feat, best_thr)
        e_mid = _partition(e, e_lo, e_hi, X, best_feat, best_thr)

        feature[nid] = best_feat
        threshold[nid] = best_thr
        lid = node_count
        rid = node_count + 1
        node_count += 2
        left[nid] = lid
        right[nid] = rid

        top += 1
        stack[top, 0] = rid
        stack[top, 1] = s_mid
        stack[top, 2] = s_hi
        stack[top, 3] = e_mid
        stack[top, 4] = e_hi
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = s_lo
        stack[top, 2] = s_mid
        stack[top, 3] = e_lo
        stack[top, 4] = e_mid

    return (
        feature[:node_count].copy(),
        threshold[:node_count].copy(),
        left[:node_count].copy(),
        right[:node_count].copy(),
        value[:node_count].copy(),
        est_count[:node_count].copy(),
    )


@njit(cache=True, nogil=True)
def _partition(idx, lo, hi, X, f, thr):
    """Stable in-place partition of idx[lo:hi] by X[., f] <= thr."""
    n = hi - lo
    buf = np.empty(n, np.int64)
    mid = 0
    for k in range(lo, hi):
        if X[idx[k], f] <= thr:
            buf[mid] = idx[k]
            mid += 1
    pos = mid
    for k in range(lo, hi):
        if X[idx[k], f] > thr:
            buf[pos] = idx[k]
            pos += 1
    for k in range(n):
        idx[lo + k] = buf[k]
    return lo + mid


@njit(cache=True, nogil=True)
def _predict_tree(feature, threshold, left, right, value, X, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
