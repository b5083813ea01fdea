"""Negative differ-group loop finders.

Both finders work on a ``GroupingGraph`` and return a ``DifferGroupLoop`` whose
weight is below ``-threshold``, or ``None``.

The exact finder is a label-setting search from a virtual super node with a
zero-weight edge to every node. A label is a path of users in pairwise
distinct groups; it is extended only while its running weight stays negative.
Every cycle with negative total weight has a rotation whose running sums are
all negative, so no negative cycle is skipped. Labels that share start node,
end node and set of used groups are merged keeping the lighter one, which
keeps the minimum-weight cycle reachable. The search therefore returns the
lightest differ-group cycle in the graph. Its cost grows exponentially with
the number of groups in the worst case.

The greedy finder restarts from the lightest edges and grows each path by the
lightest outgoing edge into a group the path has not used yet, closing the
loop after every step and keeping the best closed loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CapabilityError
from ..graph import DifferGroupLoop, ExtendedGrouping, GroupingGraph

DEFAULT_MAX_LABELS = 1_000_000
_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class PathLabel:
    node: int
    dist: float
    path: tuple[int, ...]
    groups_used: frozenset[int]


def _dedupe(start, node, used_bits, dist):
    """Keep the lightest label per (start, node, used groups)."""
    order = np.argsort(dist, kind="stable")
    key = np.concatenate(
        (start[order, None].astype(np.int64).view(np.uint8).reshape(len(order), -1),
         node[order, None].astype(np.int64).view(np.uint8).reshape(len(order), -1),
         used_bits[order]),
        axis=1,
    )
    key = np.ascontiguousarray(key).view(np.dtype((np.void, key.shape[1]))).ravel()
    _, first = np.unique(key, return_index=True)
    keep = np.sort(order[first])
    return keep


def find_loop_bellman_ford(
    graph: GroupingGraph,
    eg: ExtendedGrouping | None = None,
    threshold: float = 0.0,
    group_cap: int = 12,
    max_labels: int = DEFAULT_MAX_LABELS,
) -> DifferGroupLoop | None:
    """Lightest negative differ-group loop, or ``None`` if every loop weighs >= -threshold.

    Raises ``CapabilityError`` when the graph has more than ``group_cap``
    groups, or when the label set would exceed ``max_labels`` (the search
    would no longer be exhaustive).
    """
    n_groups = graph.group_count
    if n_groups > group_cap:
        raise CapabilityError(
            f"exact loop search capped at {group_cap} groups, instance has {n_groups}; "
            "use the greedy finder or raise exact_mode_group_cap"
        )
    if eg is not None and eg.n_nodes != graph.n_nodes:
        raise ValueError("graph and extended grouping disagree on node count")

    W = graph.weights
    pi = graph.pi
    V = graph.n_nodes
    group_bits = np.packbits(np.eye(n_groups, dtype=bool), axis=1)  # (G, n_bytes)

    # level 1 is the super node's zero-weight edge to s; level 2 adds s -> v
    s_idx, v_idx = np.nonzero(W < 0)
    start, node, dist = s_idx, v_idx, W[s_idx, v_idx]
    used = group_bits[pi[s_idx]] | group_bits[pi[v_idx]]
    # history[level] = (end node, parent label index, running weight) per label
    history = {1: (s_idx, None, np.zeros(len(s_idx))), 2: (v_idx, np.arange(len(v_idx)), dist)}

    best_w, best_level, best_at = math.inf, -1, -1
    level = 2
    while len(node):
        closing = dist + W[node, start]
        k = int(np.argmin(closing))
        if closing[k] < best_w:
            best_w, best_level, best_at = float(closing[k]), level, k
        if level == n_groups:
            break

        chunks = []
        n_cand = 0
        step = max(1, _CHUNK_CELLS // V)
        for lo in range(0, len(node), step):
            hi = min(lo + step, len(node))
            cand = dist[lo:hi, None] + W[node[lo:hi]]
            blocked = np.unpackbits(used[lo:hi], axis=1, count=n_groups).astype(bool)[:, pi]
            r, c = np.nonzero((cand < 0) & ~blocked)
            n_cand += len(r)
            if n_cand > 4 * max_labels:
                raise CapabilityError(
                    f"exact loop search exceeded {4 * max_labels} candidate labels "
                    f"at path length {level + 1}"
                )
            chunks.append((r + lo, c, cand[r, c]))
        parent = np.concatenate([c[0] for c in chunks])
        if len(parent) == 0:
            break
        nnode = np.concatenate([c[1] for c in chunks])
        ndist = np.concatenate([c[2] for c in chunks])
        nstart = start[parent]
        nused = used[parent] | group_bits[pi[nnode]]
        keep = _dedupe(nstart, nnode, nused, ndist)
        if len(keep) > max_labels:
            raise CapabilityError(
                f"exact loop search exceeded {max_labels} labels at path length {level + 1}"
            )
        parent, node, dist = parent[keep], nnode[keep], ndist[keep]
        start, used = nstart[keep], nused[keep]
        level += 1
        history[level] = (node, parent, dist)

    if not best_w < -threshold:
        return None
    label = _trace(history, best_level, best_at, pi)
    return DifferGroupLoop(users=label.path, weight=best_w)


def _trace(history, level, at, pi) -> PathLabel:
    dist = float(history[level][2][at])
    path = []
    for lv in range(level, 0, -1):
        nodes, parent, _ = history[lv]
        path.append(int(nodes[at]))
        if parent is not None:
            at = parent[at]
    path.reverse()
    return PathLabel(node=path[-1], dist=dist, path=tuple(path),
                     groups_used=frozenset(int(pi[u]) for u in path))


def find_loop_greedy(
    graph: GroupingGraph,
    eg: ExtendedGrouping | None = None,
    alpha: float = 5.0,
    forbidden_starts=frozenset(),
    threshold: float = 0.0,
    backend: str = "auto",
) -> DifferGroupLoop | None:
    """Best loop over ``ceil(alpha * V)`` greedy restarts, or ``None``.

    Restart ``x`` begins from the x-th lightest edge whose tail is not in
    ``forbidden_starts`` (ties by lowest flat index), then repeatedly takes
    the lightest edge into a group the path has not used, closing the loop
    after every step. Per invocation the cost is O(G * V^2) for restarts
    proportional to V.

    ``backend`` selects the compiled kernel ("numba") or the vectorized numpy
    path ("numpy"); both return identical loops. "auto" uses numba when it
    is installed.
    """
    W = graph.weights
    pi = graph.pi
    V, n_groups = graph.n_nodes, graph.group_count
    if n_groups < 2:
        return None
    n_restarts = math.ceil(alpha * V - 1e-12)

    eligible = graph.present.copy()
    if forbidden_starts:
        eligible[np.fromiter(forbidden_starts, dtype=np.int64)] = False
    flat = np.flatnonzero(eligible)
    if len(flat) == 0:
        return None
    vals = W.ravel()[flat]
    take = min(n_restarts, len(flat))
    if take < len(flat):
        cut = np.partition(vals, take - 1)[take - 1]
        sel = flat[vals <= cut]
        sel = sel[np.argsort(W.ravel()[sel], kind="stable")][:take]
    else:
        sel = flat[np.argsort(vals, kind="stable")]
    first, second = np.divmod(sel, V)

    if backend == "auto":
        backend = "numba" if _greedy_kernel is not None else "numpy"
    if backend == "numba":
        if _greedy_kernel is None:
            raise RuntimeError("numba is not installed")
        best_w, best_len, paths = _greedy_kernel(W, pi.astype(np.int64), first, second, n_groups)
    elif backend == "numpy":
        best_w, best_len, paths = _greedy_numpy(W, pi, first, second, n_groups)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    r = int(np.argmin(best_w))
    if not best_w[r] < -threshold:
        return None
    users = tuple(int(u) for u in paths[r, : best_len[r]])
    return DifferGroupLoop(users=users, weight=float(best_w[r]))


def _greedy_numpy(W, pi, first, cur, n_groups):
    R = len(first)
    rows = np.arange(R)
    paths = np.empty((R, n_groups), dtype=np.int64)
    paths[:, 0], paths[:, 1] = first, cur
    path_w = W[first, cur]
    best_w = path_w + W[cur, first]
    best_len = np.full(R, 2)
    blocked = (pi[None, :] == pi[first, None]) | (pi[None, :] == pi[cur, None])
    alive = np.ones(R, dtype=bool)

    for length in range(3, n_groups + 1):
        cand = np.where(blocked, np.inf, W[cur])
        nxt = np.argmin(cand, axis=1)
        step = cand[rows, nxt]
        alive &= np.isfinite(step)
        if not alive.any():
            break
        path_w = np.where(alive, path_w + step, path_w)
        closing = np.where(alive, path_w + W[nxt, first], np.inf)
        better = closing < best_w
        best_w = np.where(better, closing, best_w)
        best_len = np.where(better, length, best_len)
        paths[:, length - 1] = nxt
        cur = np.where(alive, nxt, cur)
        blocked |= pi[None, :] == pi[cur, None]
    return best_w, best_len, paths


def _greedy_python(W, pi, first, second, n_groups):
    R, V = len(first), W.shape[0]
    best_w = np.empty(R)
    best_len = np.empty(R, dtype=np.int64)
    paths = np.empty((R, n_groups), dtype=np.int64)
    used = np.zeros(n_groups, dtype=np.bool_)
    for r in range(R):
        used[:] = False
        s, c = first[r], second[r]
        paths[r, 0], paths[r, 1] = s, c
        used[pi[s]] = True
        used[pi[c]] = True
        w = W[s, c]
        bw, bl = w + W[c, s], 2
        for length in range(3, n_groups + 1):
            bv, bj = np.inf, -1
            for v in range(V):
                if not used[pi[v]] and W[c, v] < bv:
                    bv, bj = W[c, v], v
            if bj < 0:
                break
            w += bv
            paths[r, length - 1] = bj
            used[pi[bj]] = True
            closing = w + W[bj, s]
            if closing < bw:
                bw, bl = closing, length
            c = bj
        best_w[r], best_len[r] = bw, bl
    return best_w, best_len, paths


try:
    from numba import njit
except ImportError:  # pragma: no cover
    _greedy_kernel = None
else:
    _greedy_kernel = njit(cache=True, nogil=True)(_greedy_python)
