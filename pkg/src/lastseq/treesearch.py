"""Search kernels over upper-triangular systems y ~= R z, z integer.

All searches here run bottom row first: a partial path of depth d fixes
z[m-1], ..., z[m-d], matching the orientation in which the equalizer stores
R.  Candidate integers at each level are generated lazily in Schnorr-Euchner
zig-zag order, so siblings come out with nondecreasing residual cost.

Hot loops deliberately use plain Python floats and lists; numpy scalar
arithmetic is several times slower at these dimensions (m <= a few dozen).
"""

from __future__ import annotations

import math
from heapq import heappush, heappop

import numpy as np

DEFAULT_MAX_STACK = 2_000_000


class StackOverflow(RuntimeError):
    """Raised when the best-first stack outgrows its configured size cap.

    Distinct from a time-out: it signals a pathological configuration
    (e.g. singular R or an absurd node budget), not high channel noise.
    """


def _round_half_up(c):
    return math.floor(c + 0.5)


def _sibling_candidate(base, step, t):
    # t = 0 -> base, then base+step, base-step, base+2*step, ...
    if t == 0:
        return base
    mag = (t + 1) // 2
    return base + mag * step if (t & 1) else base - mag * step


def _as_rows(R):
    return [[float(v) for v in row] for row in R]


def _center(rows, yy, m, i, path):
    # residual target at row i given the fixed suffix stored in path
    acc = yy[i]
    row = rows[i]
    for idx in range(len(path)):
        acc -= row[m - 1 - idx] * path[idx]
    return acc / row[i]


def _path_to_z(path, m):
    z = [0] * m
    for idx, v in enumerate(path):
        z[m - 1 - idx] = v
    return z


def stack_search(R, y, bias=0.0, node_limit=None, max_stack=DEFAULT_MAX_STACK,
                 trace=None, node_log=None):
    """Best-first (stack) search for an integer z maximizing bias*m - |y-Rz|^2.

    Each stack entry is a partial path; one step pops the best entry, counts
    it as one visited node at its depth, and inserts its best child together
    with its own next-best sibling.  With ``bias == 0`` and no node limit the
    returned path is an exact closest-point solution.

    Returns a dict with keys:
      found       True when a depth-m path topped the stack
      z           integer path (list of length m) or None on time-out
      counts      visited-node count per level, index 1..m (index 0 unused)
      total       total visited nodes; never exceeds ``node_limit``
      dist        squared residual of the accepted path (found only)

    Raises StackOverflow when the stack would outgrow ``max_stack``.
    ``trace``, when a list, receives one (depth, metric, running_total) row
    per counted visit; ``node_log`` similarly collects (depth, path, metric).

    Runs on the compiled arena kernel when available and no logging is
    requested; exact metric ties then break by node creation order rather
    than path order, which changes nothing on generic (noisy) inputs.
    """
    if trace is None and node_log is None and _HAVE_STACK_KERNEL:
        return _stack_search_compiled(R, y, bias, node_limit, max_stack)
    return _stack_search_python(R, y, bias, node_limit, max_stack, trace,
                                node_log)


def _stack_search_python(R, y, bias, node_limit, max_stack, trace, node_log):
    m = len(y)
    rows = _as_rows(R)
    yy = [float(v) for v in y]
    bias = float(bias)

    counts = [0] * (m + 1)
    total = 0
    heap = []

    # seed with the root's best child (the root itself has no siblings)
    c = _center(rows, yy, m, m - 1, ())
    base = _round_half_up(c)
    step = 1 if c >= base else -1
    r = rows[m - 1][m - 1] * (c - base)
    dist = r * r
    heappush(heap, (bias * -1.0 + dist, 1, (base,), dist, 0.0, c, base, step, 0))
    # entry layout: (neg_mu, depth, path, dist, parent_dist, center, base, step, sib_t)

    while heap:
        neg_mu, depth, path, dist, pdist, center, base, step, sib_t = heappop(heap)

        if node_limit is not None and total >= node_limit:
            # counting this node would exceed the cap
            return {"found": False, "z": None, "counts": counts,
                    "total": total, "dist": None}

        total += 1
        counts[depth] += 1
        if trace is not None:
            trace.append((depth, -neg_mu, total))
        if node_log is not None:
            node_log.append((depth, path, -neg_mu))

        if depth == m:
            return {"found": True, "z": _path_to_z(path, m), "counts": counts,
                    "total": total, "dist": dist}

        # best child one row up
        i = m - 1 - depth
        cc = _center(rows, yy, m, i, path)
        cbase = _round_half_up(cc)
        cstep = 1 if cc >= cbase else -1
        rr = rows[i][i] * (cc - cbase)
        cdist = dist + rr * rr
        heappush(heap, (bias * -(depth + 1) + cdist, depth + 1, path + (cbase,),
                        cdist, dist, cc, cbase, cstep, 0))

        # own next-best sibling (same level, same parent residual)
        t = sib_t + 1
        cand = _sibling_candidate(base, step, t)
        i_self = m - depth
        rs = rows[i_self][i_self] * (center - cand)
        sdist = pdist + rs * rs
        heappush(heap, (bias * -depth + sdist, depth, path[:-1] + (cand,),
                        sdist, pdist, center, base, step, t))

        if len(heap) > max_stack:
            raise StackOverflow(
                f"stack grew past {max_stack} entries at {total} visited nodes")

    raise StackOverflow("search stack exhausted unexpectedly")


def _stack_kernel(R, y, bias, node_limit, cap):
    """Arena form of the best-first search; see _stack_search_python.

    Returns (status, total, counts, z, dist) with status 0 = found,
    1 = node limit reached, 2 = arena full.
    """
    m = y.shape[0]
    depth = np.empty(cap, np.int64)
    zval = np.empty(cap, np.int64)
    parent = np.empty(cap, np.int64)
    dist = np.empty(cap)
    pdist = np.empty(cap)
    center = np.empty(cap)
    base = np.empty(cap, np.int64)
    step = np.empty(cap, np.int64)
    sibt = np.empty(cap, np.int64)
    negmu = np.empty(cap)
    heap = np.empty(cap, np.int64)
    heap_n = 0
    n_nodes = 0
    counts = np.zeros(m + 1, np.int64)
    z_out = np.zeros(m, np.int64)
    total = 0

    # root's best child
    c = y[m - 1] / R[m - 1, m - 1]
    b0 = int(np.floor(c + 0.5))
    r = R[m - 1, m - 1] * (c - b0)
    depth[0] = 1
    zval[0] = b0
    parent[0] = -1
    dist[0] = r * r
    pdist[0] = 0.0
    center[0] = c
    base[0] = b0
    step[0] = 1 if c >= b0 else -1
    sibt[0] = 0
    negmu[0] = -bias + r * r
    heap[0] = 0
    heap_n = 1
    n_nodes = 1

    while heap_n > 0:
        idx = heap[0]
        heap_n -= 1
        moved = heap[heap_n]
        pos = 0
        while True:
            left = 2 * pos + 1
            if left >= heap_n:
                break
            right = left + 1
            child = left
            if right < heap_n:
                a, b = heap[right], heap[left]
                if (negmu[a] < negmu[b]
                        or (negmu[a] == negmu[b]
                            and (depth[a] < depth[b]
                                 or (depth[a] == depth[b] and a < b)))):
                    child = right
            cnode = heap[child]
            if (negmu[cnode] < negmu[moved]
                    or (negmu[cnode] == negmu[moved]
                        and (depth[cnode] < depth[moved]
                             or (depth[cnode] == depth[moved]
                                 and cnode < moved)))):
                heap[pos] = cnode
                pos = child
            else:
                break
        heap[pos] = moved

        dnode = depth[idx]
        if node_limit >= 0 and total >= node_limit:
            return 1, total, counts, z_out, 0.0
        total += 1
        counts[dnode] += 1
        if dnode == m:
            cur = idx
            while cur != -1:
                z_out[m - depth[cur]] = zval[cur]
                cur = parent[cur]
            return 0, total, counts, z_out, dist[idx]

        if n_nodes + 2 > cap:
            return 2, total, counts, z_out, 0.0

        # best child one row up
        i = m - 1 - dnode
        acc = y[i]
        cur = idx
        while cur != -1:
            acc -= R[i, m - depth[cur]] * zval[cur]
            cur = parent[cur]
        c = acc / R[i, i]
        cb = int(np.floor(c + 0.5))
        rr = R[i, i] * (c - cb)
        child_idx = n_nodes
        n_nodes += 1
        depth[child_idx] = dnode + 1
        zval[child_idx] = cb
        parent[child_idx] = idx
        dist[child_idx] = dist[idx] + rr * rr
        pdist[child_idx] = dist[idx]
        center[child_idx] = c
        base[child_idx] = cb
        step[child_idx] = 1 if c >= cb else -1
        sibt[child_idx] = 0
        negmu[child_idx] = -bias * (dnode + 1) + dist[child_idx]

        # own next-best sibling
        t = sibt[idx] + 1
        mag = (t + 1) // 2
        cand = base[idx] + mag * step[idx] if (t & 1) \
            else base[idx] - mag * step[idx]
        i_self = m - dnode
        rs = R[i_self, i_self] * (center[idx] - cand)
        sib_idx = n_nodes
        n_nodes += 1
        depth[sib_idx] = dnode
        zval[sib_idx] = cand
        parent[sib_idx] = parent[idx]
        dist[sib_idx] = pdist[idx] + rs * rs
        pdist[sib_idx] = pdist[idx]
        center[sib_idx] = center[idx]
        base[sib_idx] = base[idx]
        step[sib_idx] = step[idx]
        sibt[sib_idx] = t
        negmu[sib_idx] = -bias * dnode + dist[sib_idx]

        for new in (child_idx, sib_idx):
            pos = heap_n
            heap_n += 1
            while pos > 0:
                up = (pos - 1) // 2
                unode = heap[up]
                if (negmu[new] < negmu[unode]
                        or (negmu[new] == negmu[unode]
                            and (depth[new] < depth[unode]
                                 or (depth[new] == depth[unode]
                                     and new < unode)))):
                    heap[pos] = unode
                    pos = up
                else:
                    break
            heap[pos] = new

    return 2, total, counts, z_out, 0.0


_HAVE_STACK_KERNEL = False
try:
    from numba import njit as _njit_stack
    _stack_kernel = _njit_stack(cache=True)(_stack_kernel)
    _HAVE_STACK_KERNEL = True
except ImportError:
    pass


def _stack_search_compiled(R, y, bias, node_limit, max_stack):
    R = np.ascontiguousarray(R, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    limit = -1 if node_limit is None else int(node_limit)
    cap = min(max(4096, 2 * (limit + 2) if limit >= 0 else 4096),
              2 * max_stack + 4)
    while True:
        status, total, counts, z, dist = _stack_kernel(
            R, y, float(bias), limit, cap)
        if status == 2 and cap < 2 * max_stack + 4:
            cap = min(cap * 8, 2 * max_stack + 4)
            continue
        break
    if status == 2:
        raise StackOverflow(
            f"stack grew past {max_stack} entries at {total} visited nodes")
    if status == 1:
        return {"found": False, "z": None, "counts": [int(v) for v in counts],
                "total": int(total), "dist": None}
    return {"found": True, "z": [int(v) for v in z],
            "counts": [int(v) for v in counts], "total": int(total),
            "dist": float(dist)}


def closest_point(R, y, max_stack=DEFAULT_MAX_STACK):
    """Exact closest-point solve: argmin over integer z of |y - R z|^2."""
    out = stack_search(R, y, bias=0.0, node_limit=None, max_stack=max_stack)
    return out["z"]


def _dfs_kernel(R, y):
    m = y.shape[0]
    resid = np.zeros((m, m))
    resid[m - 1, :] = y
    dist = np.zeros(m)
    u = np.zeros(m, dtype=np.int64)
    step = np.zeros(m, dtype=np.int64)
    best = np.zeros(m, dtype=np.int64)
    bestdist = np.inf

    i = m - 1
    c = resid[i, i] / R[i, i]
    u[i] = int(np.floor(c + 0.5))
    step[i] = 1 if c >= u[i] else -1
    while True:
        r = resid[i, i] - u[i] * R[i, i]
        d = dist[i] + r * r
        if d < bestdist:
            if i > 0:
                ui = u[i]
                for j in range(i):
                    resid[i - 1, j] = resid[i, j] - ui * R[j, i]
                i -= 1
                dist[i] = d
                c = resid[i, i] / R[i, i]
                u[i] = int(np.floor(c + 0.5))
                step[i] = 1 if c >= u[i] else -1
                continue
            bestdist = d
            best[:] = u
            if i == m - 1:
                return best, bestdist
        elif i == m - 1:
            return best, bestdist
        i += 1
        u[i] += step[i]
        step[i] = -step[i] - (1 if step[i] > 0 else -1)


try:  # optional accelerator; the fallback runs the identical algorithm
    from numba import njit as _njit
    _dfs_kernel = _njit(cache=True)(_dfs_kernel)
except ImportError:
    pass


def dfs_closest_point(R, y):
    """Exact closest point by depth-first Schnorr-Euchner descent.

    Equivalent answer to the zero-bias stack search, but with the shrinking
    search radius and flat working arrays of the classic sphere decoder;
    preferred for quantization targets deep inside the cell, where the
    best-first stack gets wide.
    """
    R = np.ascontiguousarray(R, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    best, bestdist = _dfs_kernel(R, y)
    return best, float(bestdist)


def babai_nearest(R, y):
    """Single greedy rounding pass, one node per level.

    Returns (z, dist, counts) with the same conventions as stack_search.
    """
    m = len(y)
    rows = _as_rows(R)
    yy = [float(v) for v in y]
    path = ()
    dist = 0.0
    counts = [0] * (m + 1)
    for depth in range(1, m + 1):
        i = m - depth
        c = _center(rows, yy, m, i, path)
        v = _round_half_up(c)
        r = rows[i][i] * (c - v)
        dist += r * r
        path = path + (v,)
        counts[depth] += 1
    return _path_to_z(path, m), dist, counts


class ListSizeExceeded(RuntimeError):
    """Sphere enumeration outgrew its point cap or node budget."""

    def __init__(self, message, examined=0, points_found=0):
        super().__init__(message)
        self.examined = examined
        self.points_found = points_found


def _sphere_kernel(R, y, radius_sq, out, budget):
    m = y.shape[0]
    cap = out.shape[0]
    resid = np.zeros((m, m))
    resid[m - 1, :] = y
    dist = np.zeros(m)
    u = np.zeros(m, dtype=np.int64)
    step = np.zeros(m, dtype=np.int64)
    npts = 0
    examined = 0

    i = m - 1
    c = resid[i, i] / R[i, i]
    u[i] = int(np.floor(c + 0.5))
    step[i] = 1 if c >= u[i] else -1
    while True:
        r = resid[i, i] - u[i] * R[i, i]
        d = dist[i] + r * r
        examined += 1
        if examined > budget:
            return npts, examined, 2
        if d <= radius_sq:
            if i == 0:
                if npts >= cap:
                    return npts, examined, 1
                out[npts] = u
                npts += 1
                u[0] += step[0]
                step[0] = -step[0] - (1 if step[0] > 0 else -1)
                continue
            ui = u[i]
            for j in range(i):
                resid[i - 1, j] = resid[i, j] - ui * R[j, i]
            i -= 1
            dist[i] = d
            c = resid[i, i] / R[i, i]
            u[i] = int(np.floor(c + 0.5))
            step[i] = 1 if c >= u[i] else -1
            continue
        # Schnorr-Euchner order: this level is exhausted past the radius
        if i == m - 1:
            return npts, examined, 0
        i += 1
        u[i] += step[i]
        step[i] = -step[i] - (1 if step[i] > 0 else -1)


try:
    from numba import njit as _njit_sphere
    _sphere_kernel = _njit_sphere(cache=True)(_sphere_kernel)
except ImportError:
    pass


def sphere_enumerate(R, y, radius_sq, cap=1_000_000, node_budget=None):
    """All integer z with |y - R z|^2 <= radius_sq, by depth-first pruning.

    Candidates at each level are scanned in Schnorr-Euchner order, so the
    per-level scan stops at the first candidate falling outside the sphere.
    Returns (points, examined) where ``examined`` counts every candidate
    whose partial residual was evaluated.  Raises ListSizeExceeded when more
    than ``cap`` lattice points fit inside the sphere or when ``examined``
    outgrows ``node_budget``.
    """
    R = np.ascontiguousarray(R, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    m = y.shape[0]
    if cap > 5_000_000:
        raise ValueError("point cap above 5e6 is not supported")
    budget = float("inf") if node_budget is None else float(node_budget)
    bufsize = min(cap, 65536)
    while True:
        out = np.empty((bufsize, m), dtype=np.int64)
        npts, examined, status = _sphere_kernel(R, y, float(radius_sq), out,
                                                budget)
        if status == 1 and bufsize < cap:
            bufsize = min(bufsize * 8, cap)   # buffer full, cap not reached
            continue
        break
    if status == 1:
        raise ListSizeExceeded(f"sphere list exceeded cap of {cap} points",
                               examined, npts)
    if status == 2:
        raise ListSizeExceeded(
            f"sphere enumeration exceeded node budget of {node_budget}",
            examined, npts)
    points = [out[i].copy() for i in range(npts)]
    return points, examined


def path_metrics(R, y, z, bias=0.0):
    """Per-level metrics b*k - |y_1^k - R_kk z_1^k|^2 along a full path z.

    Returns the list [mu_1, ..., mu_m]; min(...) is the mu_min quantity the
    stack decoder's accepted path realizes.
    """
    m = len(y)
    rows = _as_rows(R)
    yy = [float(v) for v in y]
    zz = [float(v) for v in z]
    mus = []
    dist = 0.0
    for k in range(1, m + 1):
        i = m - k
        acc = yy[i]
        row = rows[i]
        for j in range(i, m):
            acc -= row[j] * zz[j]
        dist += acc * acc
        mus.append(bias * k - dist)
    return mus
