"""Pure-Python implementations of the search kernels.

Same contracts as the compiled ``_kernels`` module; used when the extension
is not built or when ``CSBM_PURE_PYTHON=1``.
"""

import numpy as np


def _lists(A, B):
    return np.asarray(A, dtype=np.uint8).tolist(), np.asarray(B, dtype=np.uint8).tolist()


def exhaustive_argmax(A, B):
    """Lexicographically smallest maximiser of sum_{i<j} A[i,j] B[pi(i),pi(j)].

    Returns ``(perm, best_score, n_maximisers)``.
    """
    a, b = _lists(A, B)
    n = len(a)
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0, 1
    # remaining[d]: edges of A whose later endpoint is >= d
    remaining = [0] * (n + 1)
    for d in range(n - 1, -1, -1):
        remaining[d] = remaining[d + 1] + sum(a[d][:d])
    perm = [0] * n
    used = [False] * n
    best = [-1, 0, None]  # score, count, perm

    def dfs(d, cur):
        if cur + remaining[d] < best[0]:
            return
        if d == n:
            if cur > best[0]:
                best[0], best[1], best[2] = cur, 1, perm[:]
            else:
                best[1] += 1
            return
        row = a[d]
        for v in range(n):
            if used[v]:
                continue
            bv = b[v]
            gain = 0
            for j in range(d):
                if row[j] and bv[perm[j]]:
                    gain += 1
            used[v] = True
            perm[d] = v
            dfs(d + 1, cur + gain)
            used[v] = False

    dfs(0, 0)
    return np.array(best[2], dtype=np.int64), best[0], best[1]


def enumerate_map_stats(A, B, same):
    """All permutations in lexicographic order with their posterior statistics.

    Returns ``(perms, stats)`` where ``stats[r] = (mu_plus_11, mu_minus_11,
    nu_plus, nu_minus)`` for ``perms[r]``.
    """
    a, b = _lists(A, B)
    sm = np.asarray(same, dtype=np.uint8).tolist()
    n = len(a)
    perms, stats = [], []
    perm = [0] * n
    used = [False] * n

    def dfs(d, mp, mm, np_, nm):
        if d == n:
            perms.append(perm[:])
            stats.append((mp, mm, np_, nm))
            return
        row, srow = a[d], sm[d]
        for v in range(n):
            if used[v]:
                continue
            bv = b[v]
            dmp = dmm = dnp = dnm = 0
            for j in range(d):
                bb = bv[perm[j]]
                if srow[j]:
                    dnp += bb
                    dmp += row[j] & bb
                else:
                    dnm += bb
                    dmm += row[j] & bb
            used[v] = True
            perm[d] = v
            dfs(d + 1, mp + dmp, mm + dmm, np_ + dnp, nm + dnm)
            used[v] = False

    dfs(0, 0, 0, 0, 0)
    return np.array(perms, dtype=np.int64).reshape(-1, n), np.array(stats, dtype=np.int64).reshape(-1, 4)


def swap_delta(a, b, perm, u, v):
    pu, pv = perm[u], perm[v]
    au, av, bu, bv = a[u], a[v], b[pu], b[pv]
    delta = 0
    for j in range(len(perm)):
        if j == u or j == v:
            continue
        da = au[j] - av[j]
        if da:
            pj = perm[j]
            delta += da * (bv[pj] - bu[pj])
    return delta


def local_search(A, B, perm, max_moves):
    """First-improvement hill climbing over transpositions, in place.

    Sweeps pairs ``u < v`` in order, applying any swap that raises the score,
    until a full sweep finds nothing or ``max_moves`` swap evaluations are
    spent. Returns ``(evaluations_used, improved_swaps)``.
    """
    a, b = _lists(A, B)
    p = [int(x) for x in perm]
    n = len(p)
    evals = swaps = 0
    improved = True
    while improved and evals < max_moves:
        improved = False
        for u in range(n - 1):
            for v in range(u + 1, n):
                if evals >= max_moves:
                    break
                evals += 1
                if swap_delta(a, b, p, u, v) > 0:
                    p[u], p[v] = p[v], p[u]
                    swaps += 1
                    improved = True
    perm[:] = p
    return evals, swaps
