"""Exact solver for the balanced transportation problem.

Network simplex specialised to the dense bipartite case: n supply nodes,
m demand nodes, every (i, j) arc present with cost C[i, j].  This is the
workhorse behind the Wasserstein-1 metric; it returns exact optimal costs
(no entropic smoothing), which the metric tests require.
"""

from __future__ import annotations

import numpy as np

__all__ = ["solve_transport"]

# Reduced costs below this are treated as zero (optimality reached).
_OPT_TOL = 1e-11


def solve_transport(a, b, C, max_iter=None):
    """Minimise sum_ij C[i,j] * f[i,j] s.t. row sums = a, col sums = b, f >= 0.

    a and b must be non-negative and have (numerically) equal totals.
    Returns the optimal cost as a float.
    """
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float).copy()
    C = np.ascontiguousarray(C, dtype=float)
    n, m = C.shape
    if a.shape != (n,) or b.shape != (m,):
        raise ValueError("marginal shapes do not match the cost matrix")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("marginals must be non-negative")
    imbalance = a.sum() - b.sum()
    if abs(imbalance) > 1e-9 * max(a.sum(), 1.0):
        raise ValueError("unbalanced problem: marginal totals differ")
    b[np.argmax(b)] += imbalance  # absorb float rounding

    if n == 1:
        return float(np.dot(b, C[0]))
    if m == 1:
        return float(np.dot(a, C[:, 0]))
    if max_iter is None:
        max_iter = 100 * (n + m) ** 2

    state = _initial_tree(a, b, C)
    parent, flow, children, depth, u, v = state

    for _ in range(max_iter):
        red = C - u[:, None] - v[None, :]
        enter = int(np.argmin(red))
        ei, ej = divmod(enter, m)
        if red[ei, ej] >= -_OPT_TOL:
            break
        _pivot(ei, ej, red[ei, ej], n, parent, flow, children, depth, u, v)
    else:
        raise RuntimeError("network simplex did not converge")

    return _tree_cost(a, b, C, parent, children)


def _initial_tree(a, b, C):
    """Northwest-corner basis: a spanning tree with n+m-1 basic arcs."""
    n, m = C.shape
    N = n + m
    parent = np.full(N, -1, dtype=np.int64)
    flow = np.zeros(N)  # flow on the arc between node and its parent
    children: list[list[int]] = [[] for _ in range(N)]
    depth = np.zeros(N, dtype=np.int64)

    ra, rb = a.copy(), b.copy()
    arcs = []
    i = j = 0
    while True:
        t = min(ra[i], rb[j])
        arcs.append((i, j, t))
        ra[i] -= t
        rb[j] -= t
        if i == n - 1 and j == m - 1:
            break
        if j < m - 1 and (ra[i] > rb[j] or i == n - 1):
            j += 1
        else:
            i += 1

    # Hang the tree off source 0.  NW-corner arcs form a staircase, so
    # attaching each arc endpoint to the earlier-seen one yields a tree.
    seen = np.zeros(N, dtype=bool)
    seen[0] = True
    for i, j, t in arcs:
        s, d = i, n + j
        if seen[s] and seen[d]:
            raise RuntimeError("degenerate initial basis")  # staircase violated
        if seen[s]:
            parent[d] = s
            children[s].append(d)
            depth[d] = depth[s] + 1
            flow[d] = t
            seen[d] = True
        else:
            parent[s] = d
            children[d].append(s)
            depth[s] = depth[d] + 1
            flow[s] = t
            seen[s] = True

    u = np.zeros(n)
    v = np.zeros(m)
    _set_potentials(0, C, n, parent, children, u, v)
    return parent, flow, children, depth, u, v


def _set_potentials(root, C, n, parent, children, u, v):
    stack = [root]
    while stack:
        x = stack.pop()
        for y in children[x]:
            if x < n:
                v[y - n] = C[x, y - n] - u[x]
            else:
                u[y] = C[y, x - n] - v[x - n]
            stack.append(y)


def _pivot(ei, ej, rcost, n, parent, flow, children, depth, u, v):
    """Bring arc (ei, n+ej) into the basis, drop the blocking arc."""
    p, q = ei, n + ej

    # Cycle = entering arc + tree path p..apex..q.  Walk up by depth.
    path_p, path_q = [], []
    x, y = p, q
    while depth[x] > depth[y]:
        path_p.append(x)
        x = parent[x]
    while depth[y] > depth[x]:
        path_q.append(y)
        y = parent[y]
    while x != y:
        path_p.append(x)
        path_q.append(y)
        x = parent[x]
        y = parent[y]

    # Orientation: pushing theta along p -> q (source -> sink).  A tree arc
    # (c, parent(c)) gains flow when traversed in its source->sink direction.
    # Traversal runs q -> apex (child->parent) then apex -> p (parent->child).
    theta = np.inf
    leave = -1
    for c in path_q:  # traversed child -> parent
        if c >= n:  # arc direction is parent -> c, traversal opposes it
            if flow[c] < theta:
                theta, leave = flow[c], c
    for c in path_p:  # traversed parent -> child
        if c < n:  # arc direction is c -> parent, traversal opposes it
            if flow[c] < theta:
                theta, leave = flow[c], c

    if leave < 0:
        raise RuntimeError("unbounded pivot in a bounded transportation problem")

    for c in path_q:
        flow[c] += theta if c < n else -theta
    for c in path_p:
        flow[c] += theta if c >= n else -theta

    # Re-hang the subtree cut off by the leaving arc so that the entering
    # arc becomes its new tree link.
    on_q_side = leave in path_q  # subtree containing q, else it contains p
    sub_end = q if on_q_side else p
    out_end = p if on_q_side else q

    # Reverse parent pointers along sub_end .. leave; the arc between two
    # consecutive path nodes is now stored under its former parent.
    node = sub_end
    new_parent = out_end
    carry = theta  # flow on the node's new parent arc (entering arc first)
    while True:
        old_parent = parent[node]
        old_flow = flow[node]
        parent[node] = new_parent
        flow[node] = carry
        if new_parent != out_end:
            children[new_parent].append(node)
        children[old_parent].remove(node)
        if node == leave:
            break
        new_parent, carry, node = node, old_flow, old_parent
    children[out_end].append(sub_end)

    # Potentials and depths of the re-hung subtree shift rigidly.
    if sub_end >= n:  # subtree entered through a sink node
        dv, du = rcost, -rcost
    else:
        dv, du = -rcost, rcost
    stack = [sub_end]
    depth[sub_end] = depth[out_end] + 1
    while stack:
        c = stack.pop()
        if c < n:
            u[c] += du
        else:
            v[c - n] += dv
        for w in children[c]:
            depth[w] = depth[c] + 1
            stack.append(w)


def _tree_cost(a, b, C, parent, children):
    """Recompute flows exactly from the final tree, then price them."""
    n = len(a)
    N = n + len(b)
    supply = np.concatenate([a, -b])
    order = []
    stack = [0]
    while stack:
        x = stack.pop()
        order.append(x)
        stack.extend(children[x])
    net = supply.copy()
    cost = 0.0
    for c in reversed(order):
        p = parent[c]
        if p < 0:
            continue
        f = net[c] if c < n else -net[c]  # arc direction is source -> sink
        if f < 0:
            f = 0.0  # degenerate arc, flow is numerically zero
        i, j = (c, p - n) if c < n else (p, c - n)
        cost += f * C[i, j]
        net[p] += net[c]
    return float(cost)
