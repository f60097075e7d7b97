"""Compiled inner loops.

Everything here is written for numba's nopython mode: explicit ``uint64``
casts on every shift/xor (mixed signed/unsigned arithmetic promotes to float
in numba), preallocated arenas, and a hand-rolled binary heap.

Status codes shared with the fallback module live in ``jrc.kernels``.
"""
import numpy as np

from .._accel import njit

@njit
def _rotr(st, width):
    return (st >> np.uint64(1)) | ((st & np.uint64(1)) << np.uint64(width - 1))


@njit
def _extract(st, which_flat, lo, hi):
    z = np.uint64(0)
    for j in range(hi - lo):
        z |= ((st >> np.uint64(which_flat[lo + j])) & np.uint64(1)) << np.uint64(j)
    return z


@njit
def encode_states(xs, S, f_flat, f_off, width, init):
    P = xs.shape[0]
    states = np.empty(P, dtype=np.uint64)
    st = np.uint64(init)
    for p in range(P):
        s = p % S
        st = st ^ f_flat[f_off[s] + xs[p]]
        states[p] = st
        st = _rotr(st, width)
    return states, st


@njit
def straightforward(data, S, width, init, f_flat, f_off, which_flat, w_off, order_flat, start_flat, s_off):
    P = data.shape[0]
    xs = np.zeros(P, dtype=np.int64)
    st = np.uint64(init)
    for p in range(P):
        s = p % S
        z = _extract(st, which_flat, w_off[s], w_off[s + 1]) ^ data[p]
        b = s_off[s] + np.int64(z)
        cnt = start_flat[b + 1] - start_flat[b]
        if cnt == 0:
            return xs, 1, p, st
        if cnt > 1:
            return xs, 2, p, st
        x = order_flat[f_off[s] + start_flat[b]]
        xs[p] = x
        st = _rotr(st ^ f_flat[f_off[s] + x], width)
    return xs, 0, P, st


@njit
def _grow_u64(a, need):
    b = np.empty(max(need, 2 * a.shape[0]), dtype=np.uint64)
    b[: a.shape[0]] = a
    return b


@njit
def _grow_i64(a, need):
    b = np.empty(max(need, 2 * a.shape[0]), dtype=np.int64)
    b[: a.shape[0]] = a
    return b


@njit
def list_decode(data, S, width, init, f_flat, f_off, which_flat, w_off, order_flat, start_flat, s_off, cap):
    """Breadth-wise expansion of every consistent prefix (one level per position)."""
    P = data.shape[0]
    size = 1024
    st = np.empty(size, dtype=np.uint64)
    par = np.empty(size, dtype=np.int64)
    xv = np.empty(size, dtype=np.int64)
    lvl = np.zeros(P + 2, dtype=np.int64)
    st[0] = np.uint64(init)
    par[0] = -1
    xv[0] = -1
    n = 1
    lvl[0] = 0
    lvl[1] = 1
    for p in range(P):
        s = p % S
        lo = w_off[s]
        hi = w_off[s + 1]
        start_new = n
        for node in range(lvl[p], lvl[p + 1]):
            z = _extract(st[node], which_flat, lo, hi) ^ data[p]
            b = s_off[s] + np.int64(z)
            c0 = start_flat[b]
            c1 = start_flat[b + 1]
            if n - start_new + (c1 - c0) > cap:
                lvl[p + 2] = n
                return 3, p, st, par, xv, lvl, n
            if n + (c1 - c0) > st.shape[0]:
                need = n + (c1 - c0)
                st = _grow_u64(st, need)
                par = _grow_i64(par, need)
                xv = _grow_i64(xv, need)
            for c in range(c0, c1):
                x = order_flat[f_off[s] + c]
                st[n] = _rotr(st[node] ^ f_flat[f_off[s] + x], width)
                par[n] = node
                xv[n] = x
                n += 1
        lvl[p + 2] = n
        if n == start_new:
            return 4, p, st, par, xv, lvl, n
    return 0, P, st, par, xv, lvl, n


@njit
def traceback(par, xv, node, P):
    xs = np.zeros(P, dtype=np.int64)
    depth = 0
    cur = node
    while par[cur] >= 0:
        depth += 1
        cur = par[cur]
    cur = node
    for p in range(depth - 1, -1, -1):
        xs[p] = xv[cur]
        cur = par[cur]
    return xs[:depth]


@njit
def _better(a, b, W, pos):
    if W[a] != W[b]:
        return W[a] > W[b]
    if pos[a] != pos[b]:
        return pos[a] > pos[b]
    return a < b


@njit
def _heap_push(heap, hsize, node, W, pos):
    i = hsize
    heap[i] = node
    while i > 0:
        parent = (i - 1) >> 1
        if _better(heap[i], heap[parent], W, pos):
            tmp = heap[i]
            heap[i] = heap[parent]
            heap[parent] = tmp
            i = parent
        else:
            break
    return hsize + 1


@njit
def _heap_pop(heap, hsize, W, pos):
    top = heap[0]
    hsize -= 1
    heap[0] = heap[hsize]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= hsize:
            break
        best = left
        right = left + 1
        if right < hsize and _better(heap[right], heap[left], W, pos):
            best = right
        if _better(heap[best], heap[i], W, pos):
            tmp = heap[i]
            heap[i] = heap[best]
            heap[best] = tmp
            i = best
        else:
            break
    return top, hsize


@njit
def _block_weight(E, base_w, delta_flat, lo, hi):
    w = base_w
    for j in range(hi - lo):
        if (E >> np.uint64(j)) & np.uint64(1):
            w += delta_flat[lo + j]
    return w


@njit
def _next_candidate(parent, r0, S, pos, W, zs, f_off, w_off, ef_flat, table_flat, t_off, t_mask,
                    exact_order, base_w, delta_flat):
    """First rank >= r0 in the parent's sorted list whose child weight is finite."""
    s = pos[parent] % S
    z = zs[parent]
    nx = f_off[s + 1] - f_off[s]
    base = t_off[s] + np.int64(z & t_mask[s]) * nx
    for r in range(r0, nx):
        x = np.int64(table_flat[base + r])
        E = z ^ ef_flat[f_off[s] + x]
        w = W[parent] + _block_weight(E, base_w[s], delta_flat, w_off[s], w_off[s + 1])
        if w > -np.inf:
            return r, x, w
        if exact_order:
            break
    return -1, -1, 0.0


@njit
def seq_decode(data, S, width, init, final, has_final, f_flat, f_off, which_flat, w_off, ef_flat,
               table_flat, t_off, t_mask, exact_order, base_w, delta_flat, max_nodes):
    """Best-first search over message prefixes with lazy sibling expansion.

    Every popped node pushes at most two nodes: the next finite-weight sibling
    from its parent's sorted list and its own best child.
    """
    P = data.shape[0]
    cap = 2 * max_nodes + 2
    st = np.empty(cap, dtype=np.uint64)
    pos = np.empty(cap, dtype=np.int64)
    W = np.empty(cap, dtype=np.float64)
    par = np.empty(cap, dtype=np.int64)
    rank = np.empty(cap, dtype=np.int64)
    xv = np.empty(cap, dtype=np.int64)
    zs = np.zeros(cap, dtype=np.uint64)
    heap = np.empty(cap, dtype=np.int64)
    order = np.empty(max_nodes, dtype=np.int64)

    st[0] = np.uint64(init)
    pos[0] = 0
    W[0] = 0.0
    par[0] = -1
    rank[0] = -1
    xv[0] = -1
    n = 1
    hsize = _heap_push(heap, 0, 0, W, pos)
    popped = 0
    deepest = 0
    status = 3
    term = -1
    while True:
        if hsize == 0:
            status = 4
            break
        if popped >= max_nodes:
            status = 3
            break
        node, hsize = _heap_pop(heap, hsize, W, pos)
        if node != 0:
            order[popped] = node
            popped += 1
        if pos[node] > pos[deepest] or (pos[node] == pos[deepest] and W[node] > W[deepest]):
            deepest = node
        if node != 0:
            parent = par[node]
            r, x, w = _next_candidate(parent, rank[node] + 1, S, pos, W, zs, f_off, w_off, ef_flat,
                                      table_flat, t_off, t_mask, exact_order, base_w, delta_flat)
            if r >= 0:
                s = pos[parent] % S
                st[n] = _rotr(st[parent] ^ f_flat[f_off[s] + x], width)
                pos[n] = pos[parent] + 1
                W[n] = w
                par[n] = parent
                rank[n] = r
                xv[n] = x
                hsize = _heap_push(heap, hsize, n, W, pos)
                n += 1
        p = pos[node]
        if p == P:
            if has_final == 0 or st[node] == final:
                status = 0
                term = node
                break
            continue
        s = p % S
        zs[node] = _extract(st[node], which_flat, w_off[s], w_off[s + 1]) ^ data[p]
        r, x, w = _next_candidate(node, 0, S, pos, W, zs, f_off, w_off, ef_flat,
                                  table_flat, t_off, t_mask, exact_order, base_w, delta_flat)
        if r >= 0:
            st[n] = _rotr(st[node] ^ f_flat[f_off[s] + x], width)
            pos[n] = p + 1
            W[n] = w
            par[n] = node
            rank[n] = r
            xv[n] = x
            hsize = _heap_push(heap, hsize, n, W, pos)
            n += 1
    return status, term, popped, deepest, n, st, pos, W, par, xv, order
