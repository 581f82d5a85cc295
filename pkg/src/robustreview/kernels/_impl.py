"""Hot kernels shared by both backends.

Every function here is written in njit-compatible Python (explicit loops,
no object-mode features) and wrapped by numba when the backend enables it.
The pure-numpy backend runs the same bodies interpreted, so results agree
across backends up to float reduction order (reductions here are all
sequential loops, so in practice they agree exactly).
"""

import numpy as np

from ._backend import jit

# ---------------------------------------------------------------------------
# binary heap with lexicographic (dist, node) keys, used by Dijkstra


@jit
def _heap_push(hd, hv, size, d, v):
    i = size
    hd[i] = d
    hv[i] = v
    size += 1
    while i > 0:
        p = (i - 1) // 2
        if hd[i] < hd[p] or (hd[i] == hd[p] and hv[i] < hv[p]):
            hd[i], hd[p] = hd[p], hd[i]
            hv[i], hv[p] = hv[p], hv[i]
            i = p
        else:
            break
    return size


@jit
def _heap_pop(hd, hv, size):
    d = hd[0]
    v = hv[0]
    size -= 1
    hd[0] = hd[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        best = i
        if l < size and (
            hd[l] < hd[best] or (hd[l] == hd[best] and hv[l] < hv[best])
        ):
            best = l
        if r < size and (
            hd[r] < hd[best] or (hd[r] == hd[best] and hv[r] < hv[best])
        ):
            best = r
        if best == i:
            break
        hd[i], hd[best] = hd[best], hd[i]
        hv[i], hv[best] = hv[best], hv[i]
        i = best
    return d, v, size


# ---------------------------------------------------------------------------
# exact assignment: min-cost max-flow by successive shortest augmenting paths
# with node potentials (integer arithmetic throughout)


@jit
def mincost_assign(score, demands, caps, blocked):
    """Maximize sum of scores over 0/1 assignments with row sums == demands,
    column sums <= caps, zeros on blocked pairs.

    score: (n, m) int64 scaled scores; returns (x int8 (n,m), achieved_flow).
    Pushes one unit per augmentation; ties broken toward lower node index,
    which yields the lexicographically smallest assignment among optima.
    """
    n, m = score.shape
    src = n + m
    snk = n + m + 1
    nn = n + m + 2
    big = np.int64(1) << 62

    x = np.zeros((n, m), dtype=np.int8)
    row_used = np.zeros(n, dtype=np.int64)
    col_used = np.zeros(m, dtype=np.int64)
    pi = np.zeros(nn, dtype=np.int64)
    dist = np.empty(nn, dtype=np.int64)
    pred = np.empty(nn, dtype=np.int64)
    settled = np.empty(nn, dtype=np.bool_)

    cmax = np.int64(0)
    for p in range(n):
        for r in range(m):
            if not blocked[p, r] and score[p, r] > cmax:
                cmax = score[p, r]
    for v in range(n, n + m):
        pi[v] = -cmax
    pi[snk] = -cmax

    heap_cap = 2 * (n * m + n + m + 4)
    hd = np.empty(heap_cap, dtype=np.int64)
    hv = np.empty(heap_cap, dtype=np.int64)

    total = np.int64(0)
    for p in range(n):
        total += demands[p]

    flow = np.int64(0)
    while flow < total:
        for v in range(nn):
            dist[v] = big
            settled[v] = False
            pred[v] = -1
        dist[src] = 0
        hsize = _heap_push(hd, hv, 0, np.int64(0), np.int64(src))
        while hsize > 0:
            d, v, hsize = _heap_pop(hd, hv, hsize)
            if settled[v]:
                continue
            settled[v] = True
            if v == snk:
                break
            if v == src:
                for p in range(n):
                    if row_used[p] < demands[p]:
                        nd = d + pi[src] - pi[p]
                        if nd < dist[p]:
                            dist[p] = nd
                            pred[p] = src
                            hsize = _heap_push(hd, hv, hsize, nd, np.int64(p))
            elif v < n:
                p = v
                for r in range(m):
                    if x[p, r] == 0 and not blocked[p, r]:
                        nd = d - score[p, r] + pi[p] - pi[n + r]
                        if nd < dist[n + r]:
                            dist[n + r] = nd
                            pred[n + r] = p
                            hsize = _heap_push(
                                hd, hv, hsize, nd, np.int64(n + r)
                            )
            else:
                r = v - n
                if col_used[r] < caps[r]:
                    nd = d + pi[v] - pi[snk]
                    if nd < dist[snk]:
                        dist[snk] = nd
                        pred[snk] = v
                        hsize = _heap_push(hd, hv, hsize, nd, np.int64(snk))
                for p in range(n):
                    if x[p, r] == 1:
                        nd = d + score[p, r] + pi[v] - pi[p]
                        if nd < dist[p]:
                            dist[p] = nd
                            pred[p] = v
                            hsize = _heap_push(hd, hv, hsize, nd, np.int64(p))
        if not settled[snk]:
            break
        dsink = dist[snk]
        for v in range(nn):
            if dist[v] < dsink:
                pi[v] += dist[v]
            else:
                pi[v] += dsink
        v = snk
        while v != src:
            u = pred[v]
            if v == snk:
                col_used[u - n] += 1
            elif u == src:
                row_used[v] += 1
            elif u < n:
                x[u, v - n] = 1
            else:
                x[v, u - n] = 0
            v = u
        flow += 1
    return x, flow


# ---------------------------------------------------------------------------
# Euclidean projection onto the fractional assignment polytope (Dykstra)


@jit
def _project_capped_simplex(v, k, allowed, out):
    """out = argmin ||y - v|| s.t. y in [0,1] on allowed (0 elsewhere), sum y = k.

    Bisection on the shift tau in y = clip(v - tau, 0, 1); sum tolerance 1e-12.
    Assumes k <= number of allowed entries.
    """
    d = v.shape[0]
    cnt = 0
    vmin = np.inf
    vmax = -np.inf
    for j in range(d):
        if allowed[j]:
            cnt += 1
            if v[j] < vmin:
                vmin = v[j]
            if v[j] > vmax:
                vmax = v[j]
        else:
            out[j] = 0.0
    if k <= 0.0:
        for j in range(d):
            if allowed[j]:
                out[j] = 0.0
        return
    if cnt == int(k):
        for j in range(d):
            if allowed[j]:
                out[j] = 1.0
        return
    lo = vmin - 1.0
    hi = vmax
    tau = 0.5 * (lo + hi)
    while hi - lo > 1e-13:
        tau = 0.5 * (lo + hi)
        s = 0.0
        for j in range(d):
            if allowed[j]:
                y = v[j] - tau
                if y > 1.0:
                    y = 1.0
                elif y < 0.0:
                    y = 0.0
                s += y
        if abs(s - k) <= 1e-12:
            break
        if s > k:
            lo = tau
        else:
            hi = tau
    for j in range(d):
        if allowed[j]:
            y = v[j] - tau
            if y > 1.0:
                y = 1.0
            elif y < 0.0:
                y = 0.0
            out[j] = y


@jit
def _project_capped_sum_le(v, u, allowed, out):
    """out = argmin ||y - v|| s.t. y in [0,1] on allowed (0 elsewhere), sum y <= u."""
    d = v.shape[0]
    s = 0.0
    for j in range(d):
        if allowed[j]:
            y = v[j]
            if y > 1.0:
                y = 1.0
            elif y < 0.0:
                y = 0.0
            out[j] = y
            s += y
        else:
            out[j] = 0.0
    if s <= u:
        return
    _project_capped_simplex(v, u, allowed, out)


@jit
def dykstra_project(x0, demands, caps, blocked, tol, max_iters, resid_log):
    """Dykstra alternating projections between the row block (equality sums +
    box) and the column block (capped sums + box). Conflicted entries stay 0.

    Returns (x, iters, last_diff, last_resid); resid_log[i] records the max
    row-sum violation after sweep i (caps and box are exact after the column
    half-sweep).
    """
    n, m = x0.shape
    x = np.empty((n, m), dtype=np.float64)
    for p in range(n):
        for r in range(m):
            x[p, r] = 0.0 if blocked[p, r] else x0[p, r]
    p_corr = np.zeros((n, m), dtype=np.float64)
    q_corr = np.zeros((n, m), dtype=np.float64)
    t_row = np.empty(m, dtype=np.float64)
    t_col = np.empty(n, dtype=np.float64)
    y_row = np.empty(m, dtype=np.float64)
    y_col = np.empty(n, dtype=np.float64)
    row_allowed = np.empty(m, dtype=np.bool_)
    col_allowed = np.empty(n, dtype=np.bool_)
    x_prev = np.empty((n, m), dtype=np.float64)

    diff = np.inf
    resid = np.inf
    it = 0
    while it < max_iters:
        for p in range(n):
            for r in range(m):
                x_prev[p, r] = x[p, r]
        # row block
        for p in range(n):
            for r in range(m):
                t_row[r] = x[p, r] + p_corr[p, r]
                row_allowed[r] = not blocked[p, r]
            _project_capped_simplex(t_row, demands[p], row_allowed, y_row)
            for r in range(m):
                p_corr[p, r] = t_row[r] - y_row[r]
                x[p, r] = y_row[r]
        # column block
        for r in range(m):
            for p in range(n):
                t_col[p] = x[p, r] + q_corr[p, r]
                col_allowed[p] = not blocked[p, r]
            _project_capped_sum_le(t_col, caps[r], col_allowed, y_col)
            for p in range(n):
                q_corr[p, r] = t_col[p] - y_col[p]
                x[p, r] = y_col[p]
        diff = 0.0
        for p in range(n):
            for r in range(m):
                dv = abs(x[p, r] - x_prev[p, r])
                if dv > diff:
                    diff = dv
        resid = 0.0
        for p in range(n):
            s = 0.0
            for r in range(m):
                s += x[p, r]
            rv = abs(s - demands[p])
            if rv > resid:
                resid = rv
        resid_log[it] = resid
        it += 1
        if diff < tol and resid <= tol:
            break
    return x, it, diff, resid


# ---------------------------------------------------------------------------
# worst-case scores over an axis-aligned ellipsoid intersected with a box


@jit
def _ellipsoid_box_point(a, mu, w, lo, hi, nu, s_out):
    """Fill s_out with the box-clamped dual candidate for multiplier nu > 0
    (nu <= 0 means the limit: lower bound wherever a > 0) and return the
    quadratic form value sum((s - mu)^2 / w)."""
    d = a.shape[0]
    q = 0.0
    for i in range(d):
        if nu <= 0.0:
            s = lo[i] if a[i] > 0.0 else mu[i]
        else:
            s = mu[i] - a[i] * w[i] / (2.0 * nu)
        if s < lo[i]:
            s = lo[i]
        elif s > hi[i]:
            s = hi[i]
        s_out[i] = s
        dv = s - mu[i]
        q += dv * dv / w[i]
    return q


@jit
def ellipsoid_worst_box(a, mu, w, radius_sq, lo, hi, tol, max_iter, s_out):
    """Minimize a.s over {sum((s-mu)^2/w) <= radius_sq, lo <= s <= hi} by
    bisection on the dual multiplier of the quadratic constraint.

    Returns (nu, iters, resid, status): status 0 ok, 1 residual above tol
    after max_iter, 2 the ellipsoid does not meet the box.
    """
    q0 = _ellipsoid_box_point(a, mu, w, lo, hi, 0.0, s_out)
    if q0 <= radius_sq + tol:
        return 0.0, 0, 0.0, 0
    d = a.shape[0]
    qmin = 0.0
    for i in range(d):
        s = mu[i]
        if s < lo[i]:
            s = lo[i]
        elif s > hi[i]:
            s = hi[i]
        dv = s - mu[i]
        qmin += dv * dv / w[i]
    if qmin > radius_sq + tol:
        return 0.0, 0, qmin - radius_sq, 2

    nu_hi = 1.0
    it = 0
    while it < 200:
        q = _ellipsoid_box_point(a, mu, w, lo, hi, nu_hi, s_out)
        if q <= radius_sq:
            break
        nu_hi *= 2.0
        it += 1
    nu_lo = 0.0
    nu = nu_hi
    resid = np.inf
    iters = 0
    while iters < max_iter:
        nu = 0.5 * (nu_lo + nu_hi)
        q = _ellipsoid_box_point(a, mu, w, lo, hi, nu, s_out)
        resid = abs(q - radius_sq)
        iters += 1
        if resid <= tol:
            break
        if q > radius_sq:
            nu_lo = nu
        else:
            nu_hi = nu
    _ellipsoid_box_point(a, mu, w, lo, hi, nu, s_out)
    status = 0 if resid <= tol else 1
    return nu, iters, resid, status


# ---------------------------------------------------------------------------
# dependent randomized rounding on the bipartite graph of fractional entries


@jit
def _find_next_edge(x, n, m, is_row, idx, skip_p, skip_r, tol):
    """First strictly fractional edge at the given node, excluding the edge
    (skip_p, skip_r). Returns (p, r) or (-1, -1)."""
    if is_row:
        p = idx
        for r in range(m):
            if p == skip_p and r == skip_r:
                continue
            v = x[p, r]
            if v > tol and v < 1.0 - tol:
                return p, r
    else:
        r = idx
        for p in range(n):
            if p == skip_p and r == skip_r:
                continue
            v = x[p, r]
            if v > tol and v < 1.0 - tol:
                return p, r
    return -1, -1


@jit
def dependent_round(x, uniforms, tol):
    """Round a fractional assignment in place to 0/1 preserving expectations.

    Walks cycles / maximal paths in the graph of fractional entries, shifting
    alternate edges by +-theta with probabilities that keep each entry's
    expectation; every step makes at least one entry integral. Row sums are
    preserved exactly (paths can only end at column nodes), caps never
    increase past their bound. One uniform draw is consumed per step.

    Returns (draws_used, status); status 1 means the uniform stream ran out
    (callers size it at the initial fractional-entry count, which suffices).
    """
    n, m = x.shape
    row_deg = np.zeros(n, dtype=np.int64)
    col_deg = np.zeros(m, dtype=np.int64)
    nfrac = 0
    for p in range(n):
        for r in range(m):
            v = x[p, r]
            if v <= tol:
                x[p, r] = 0.0
            elif v >= 1.0 - tol:
                x[p, r] = 1.0
            else:
                row_deg[p] += 1
                col_deg[r] += 1
                nfrac += 1

    # walk storage: a simple path/cycle visits each node at most once, so
    # n + m + 1 edges is a safe bound
    cap = n + m + 2
    ep = np.empty(cap, dtype=np.int64)
    er = np.empty(cap, dtype=np.int64)
    mark_row = np.full(n, -1, dtype=np.int64)
    mark_col = np.full(m, -1, dtype=np.int64)
    stamp_row = np.zeros(n, dtype=np.int64)
    stamp_col = np.zeros(m, dtype=np.int64)
    stamp = 0

    draws = 0
    while nfrac > 0:
        # rows of degree 1 only arise from near-integral inputs: their single
        # fractional entry is forced, snap it to the nearest integer
        snapped = False
        for p in range(n):
            if row_deg[p] == 1:
                for r in range(m):
                    v = x[p, r]
                    if v > tol and v < 1.0 - tol:
                        x[p, r] = 0.0 if v < 0.5 else 1.0
                        row_deg[p] -= 1
                        col_deg[r] -= 1
                        nfrac -= 1
                        snapped = True
                        break
        if snapped or nfrac == 0:
            continue

        # prefer a free column endpoint (maximal path); otherwise hunt a cycle
        start_is_row = False
        start_idx = -1
        for r in range(m):
            if col_deg[r] == 1:
                start_idx = r
                break
        if start_idx < 0:
            for p in range(n):
                if row_deg[p] > 0:
                    start_is_row = True
                    start_idx = p
                    break

        stamp += 1
        elen = 0
        cyc_from = -1
        cur_is_row = start_is_row
        cur_idx = start_idx
        if cur_is_row:
            mark_row[cur_idx] = 0
            stamp_row[cur_idx] = stamp
        else:
            mark_col[cur_idx] = 0
            stamp_col[cur_idx] = stamp
        skip_p = -1
        skip_r = -1
        while True:
            p, r = _find_next_edge(
                x, n, m, cur_is_row, cur_idx, skip_p, skip_r, tol
            )
            if p < 0:
                break  # dead end: maximal path
            ep[elen] = p
            er[elen] = r
            elen += 1
            skip_p = p
            skip_r = r
            if cur_is_row:
                cur_is_row = False
                cur_idx = r
                if stamp_col[r] == stamp:
                    cyc_from = mark_col[r]
                    break
                mark_col[r] = elen
                stamp_col[r] = stamp
            else:
                cur_is_row = True
                cur_idx = p
                if stamp_row[p] == stamp:
                    cyc_from = mark_row[p]
                    break
                mark_row[p] = elen
                stamp_row[p] = stamp

        lo_e = 0
        if cyc_from >= 0:
            lo_e = cyc_from

        # theta for both alternating directions
        th1 = np.inf  # even edges up, odd edges down
        th2 = np.inf  # even edges down, odd edges up
        for i in range(lo_e, elen):
            v = x[ep[i], er[i]]
            if (i - lo_e) % 2 == 0:
                if 1.0 - v < th1:
                    th1 = 1.0 - v
                if v < th2:
                    th2 = v
            else:
                if v < th1:
                    th1 = v
                if 1.0 - v < th2:
                    th2 = 1.0 - v

        if draws >= uniforms.shape[0]:
            return draws, 1
        u = uniforms[draws]
        draws += 1
        if u < th2 / (th1 + th2):
            theta = th1
            sgn = 1.0
        else:
            theta = th2
            sgn = -1.0
        for i in range(lo_e, elen):
            p = ep[i]
            r = er[i]
            if (i - lo_e) % 2 == 0:
                v = x[p, r] + sgn * theta
            else:
                v = x[p, r] - sgn * theta
            if v <= tol:
                v = 0.0
            elif v >= 1.0 - tol:
                v = 1.0
            if v == 0.0 or v == 1.0:
                row_deg[p] -= 1
                col_deg[r] -= 1
                nfrac -= 1
            x[p, r] = v
    return draws, 0
