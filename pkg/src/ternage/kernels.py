"""Hot search kernels.

Every function here takes plain numpy arrays and is compiled with numba
unless ``TERNAGE_NO_NUMBA`` is set (see :mod:`ternage._jit`).  Structures
enter as four code arrays ``c1..c4`` (one per arity); an arity the
signature does not use is passed as a zero array of shape ``(1,) * r``
with its ``has`` flag cleared.
"""

import numpy as np

from ._jit import njit


@njit(cache=True)
def _match(x, y, hom):
    if hom:
        return (x & ~y) == 0
    return x == y


@njit(cache=True)
def _fits(i, t, d, order, fmap,
          a1, a2, a3, a4, b1, b2, b3, b4, has, hom,
          use_asg, g2, g3, g4):
    # does sending a-vertex i to b-vertex t agree with the depth-d prefix?
    if has[1] and not _match(a1[i], b1[t], hom):
        return False
    if has[2]:
        for e in range(d):
            j = order[e]
            u = fmap[j]
            if use_asg and (g2[t, u] == 0 or g2[u, t] == 0):
                return False
            if not _match(a2[i, j], b2[t, u], hom):
                return False
            if not _match(a2[j, i], b2[u, t], hom):
                return False
    if has[3]:
        for e in range(d):
            j = order[e]
            u = fmap[j]
            for e2 in range(d):
                if e2 == e:
                    continue
                k = order[e2]
                w = fmap[k]
                if use_asg and (g3[t, u, w] == 0 or g3[u, t, w] == 0 or g3[u, w, t] == 0):
                    return False
                if not _match(a3[i, j, k], b3[t, u, w], hom):
                    return False
                if not _match(a3[j, i, k], b3[u, t, w], hom):
                    return False
                if not _match(a3[j, k, i], b3[u, w, t], hom):
                    return False
    if has[4]:
        for e in range(d):
            j = order[e]
            u = fmap[j]
            for e2 in range(d):
                if e2 == e:
                    continue
                k = order[e2]
                w = fmap[k]
                for e3 in range(d):
                    if e3 == e or e3 == e2:
                        continue
                    m = order[e3]
                    z = fmap[m]
                    if use_asg and (g4[t, u, w, z] == 0 or g4[u, t, w, z] == 0
                                    or g4[u, w, t, z] == 0 or g4[u, w, z, t] == 0):
                        return False
                    if not _match(a4[i, j, k, m], b4[t, u, w, z], hom):
                        return False
                    if not _match(a4[j, i, k, m], b4[u, t, w, z], hom):
                        return False
                    if not _match(a4[j, k, i, m], b4[u, w, t, z], hom):
                        return False
                    if not _match(a4[j, k, m, i], b4[u, w, z, t], hom):
                        return False
    return True


@njit(cache=True)
def embed_search(na, nb, a1, a2, a3, a4, b1, b2, b3, b4, has, hom,
                 order, domain, anchors, use_asg, g2, g3, g4, max_results,
                 nfix, fiximg, twin_prev):
    """Backtracking search for injective maps a -> b.

    ``hom`` False asks for embeddings (codes equal), True for injective
    homomorphisms (codes of ``a`` contained in codes of ``b``).  Only
    b-vertices with ``domain`` set are used; every vertex listed in
    ``anchors`` must be hit.  The first ``nfix`` vertices of ``order`` are
    forced onto ``fiximg``.  With ``use_asg`` a tuple of ``b`` whose
    ``g`` flag is zero may not lie inside the image.  When
    ``twin_prev[i] >= 0`` the image of ``i`` must exceed the image of
    ``twin_prev[i]``, which ``order`` places earlier.  Returns
    ``(results, count, nodes)``; rows of ``results`` map a-vertex -> b-vertex.
    """
    results = np.full((max_results, na), -1, dtype=np.int64)
    count = 0
    nodes = 0
    if na == 0:
        if anchors.shape[0] == 0 and max_results > 0:
            return results, 1, 0
        return results, 0, 0
    if na > nb or anchors.shape[0] > na:
        return results, 0, 0
    is_anchor = np.zeros(nb, dtype=np.bool_)
    for x in anchors:
        is_anchor[x] = True
    n_anchor = anchors.shape[0]
    fmap = np.full(na, -1, dtype=np.int64)
    used = np.zeros(nb, dtype=np.bool_)
    nxt = np.zeros(na + 1, dtype=np.int64)
    hit = 0
    d = 0
    nxt[0] = fiximg[0] if nfix > 0 else 0
    while d >= 0:
        i = order[d]
        placed = False
        t = nxt[d]
        stop = fiximg[d] + 1 if d < nfix else nb
        while t < stop:
            cand = t
            t += 1
            if used[cand] or not domain[cand]:
                continue
            remaining = na - d
            if remaining == n_anchor - hit and not is_anchor[cand]:
                continue
            nodes += 1
            if _fits(i, cand, d, order, fmap, a1, a2, a3, a4, b1, b2, b3, b4,
                     has, hom, use_asg, g2, g3, g4):
                nxt[d] = t
                fmap[i] = cand
                used[cand] = True
                if is_anchor[cand]:
                    hit += 1
                placed = True
                break
        if not placed:
            d -= 1
            if d >= 0:
                j = order[d]
                used[fmap[j]] = False
                if is_anchor[fmap[j]]:
                    hit -= 1
                fmap[j] = -1
            continue
        if d == na - 1:
            for x in range(na):
                results[count, x] = fmap[x]
            count += 1
            if count >= max_results:
                return results, count, nodes
            used[cand] = False
            if is_anchor[cand]:
                hit -= 1
            fmap[i] = -1
            continue
        d += 1
        if d < nfix:
            nxt[d] = fiximg[d]
        elif twin_prev[order[d]] >= 0:
            nxt[d] = fmap[twin_prev[order[d]]] + 1
        else:
            nxt[d] = 0
    return results, count, nodes


@njit(cache=True)
def _write_cell(b2, b3, b4, g2, g3, g4, cell, m, perms, npm, codes, flag):
    for q in range(npm):
        c = codes[q]
        if m == 2:
            x = cell[perms[q, 0]]
            y = cell[perms[q, 1]]
            b2[x, y] = c
            g2[x, y] = flag
        elif m == 3:
            x = cell[perms[q, 0]]
            y = cell[perms[q, 1]]
            z = cell[perms[q, 2]]
            b3[x, y, z] = c
            g3[x, y, z] = flag
        else:
            x = cell[perms[q, 0]]
            y = cell[perms[q, 1]]
            z = cell[perms[q, 2]]
            w = cell[perms[q, 3]]
            b4[x, y, z, w] = c
            g4[x, y, z, w] = flag


@njit(cache=True)
def _cell_clean(nb, b1, b2, b3, b4, has, hom, g2, g3, g4, cell, m,
                fa1, fa2, fa3, fa4, fsize, forder, nreps, domain):
    # no forbidden copy uses every vertex of ``cell`` and only assigned tuples
    fix = np.zeros(4, dtype=np.int64)
    anchors = np.zeros(0, dtype=np.int64)
    no_twins = np.full(forder.shape[3], -1, dtype=np.int64)
    for i in range(m):
        fix[i] = cell[i]
    for f in range(fsize.shape[0]):
        na = fsize[f]
        for r in range(nreps[f, m]):
            _, count, _ = embed_search(
                na, nb, fa1[f], fa2[f], fa3[f], fa4[f], b1, b2, b3, b4, has, hom,
                forder[f, m, r, :na], domain, anchors, True, g2, g3, g4, 1, m, fix, no_twins)
            if count > 0:
                return False
    return True


@njit(cache=True)
def complete_cells(nb, b1, b2, b3, b4, g2, g3, g4, has, hom,
                   cells, csize, opts, nopts, optorder, perms, nperm,
                   fa1, fa2, fa3, fa4, fsize, forder, nreps, max_nodes):
    """Fill ``cells`` in order so that no forbidden structure appears.

    ``b*`` and ``g*`` are modified in place: on success they hold the
    completion with every cell marked assigned.  ``opts[m, o]`` lists the
    codes of option ``o`` for an ``m``-cell (one per permutation in
    ``perms[m]``), tried in the order ``optorder[c]``.  Forbidden structure
    ``f`` is searched with its first ``m`` vertices (``forder[f, m, r]``)
    forced onto the cell, one row ``r`` per automorphism class of such
    placements.  Returns ``(status, nodes)``: 1 done, 0 impossible,
    -1 node budget exhausted.
    """
    nc = cells.shape[0]
    domain = np.ones(nb, dtype=np.bool_)
    zero = np.zeros(24, dtype=opts.dtype)
    idx = np.zeros(nc, dtype=np.int64)
    nodes = 0
    ci = 0
    while ci < nc:
        if ci < 0:
            return 0, nodes
        m = csize[ci]
        if idx[ci] >= nopts[m]:
            idx[ci] = 0
            _write_cell(b2, b3, b4, g2, g3, g4, cells[ci], m, perms[m], nperm[m], zero, 0)
            ci -= 1
            continue
        o = optorder[ci, idx[ci]]
        idx[ci] += 1
        nodes += 1
        if nodes > max_nodes:
            return -1, nodes
        _write_cell(b2, b3, b4, g2, g3, g4, cells[ci], m, perms[m], nperm[m], opts[m, o], 1)
        if _cell_clean(nb, b1, b2, b3, b4, has, hom, g2, g3, g4, cells[ci], m,
                       fa1, fa2, fa3, fa4, fsize, forder, nreps, domain):
            ci += 1
    return 1, nodes


# --- tournaments ---------------------------------------------------------

@njit(cache=True)
def triple_class(e01, e02, e12):
    """Reversal class of an ordered triple from its three edge bits.

    Bits read ``x->y``, ``x->z``, ``y->z`` for the triple ``(x, y, z)``.
    1 = cyclic; 2, 3, 4 = transitive with the middle element at position
    0, 1, 2 respectively.
    """
    p = e01 * 4 + e02 * 2 + e12
    if p == 5 or p == 2:
        return 1
    if p == 4 or p == 3:
        return 2
    if p == 7 or p == 0:
        return 3
    return 4


@njit(cache=True)
def reduct_classes(adj):
    """Class id of every ordered distinct triple of a tournament (0 off the triples)."""
    n = adj.shape[0]
    out = np.zeros((n, n, n), dtype=np.int8)
    for x in range(n):
        for y in range(n):
            if y == x:
                continue
            for z in range(n):
                if z == x or z == y:
                    continue
                out[x, y, z] = triple_class(adj[x, y], adj[x, z], adj[y, z])
    return out


@njit(cache=True)
def _local_ok(cls, a, b, c):
    # the six orderings of {a, b, c} must come from one tournament triple
    k = cls[a, b, c]
    if k < 1 or k > 4:
        return False
    if k == 1:
        return (cls[a, c, b] == 1 and cls[b, a, c] == 1 and cls[b, c, a] == 1
                and cls[c, a, b] == 1 and cls[c, b, a] == 1)
    mid = a if k == 2 else (b if k == 3 else c)
    tri = (a, b, c)
    for p0 in range(3):
        for p1 in range(3):
            if p1 == p0:
                continue
            p2 = 3 - p0 - p1
            x = tri[p0]
            y = tri[p1]
            z = tri[p2]
            if mid == x:
                want = 2
            elif mid == y:
                want = 3
            else:
                want = 4
            if cls[x, y, z] != want:
                return False
    return True


@njit(cache=True)
def reduct_shape_ok(cls):
    n = cls.shape[0]
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                if not _local_ok(cls, a, b, c):
                    return False
    return True


@njit(cache=True)
def tournament_lift(cls):
    """Lexicographically least tournament whose triple classes equal ``cls``.

    Pairs ``(i, j)`` with ``i < j`` are ordered colexicographically and a
    bit 1 means ``i -> j``.  Returns ``(found, adj, nodes)``.
    """
    n = cls.shape[0]
    adj = np.zeros((n, n), dtype=np.int8)
    if n < 3:
        return True, adj, 0
    if not reduct_shape_ok(cls):
        return False, adj, 0
    m = n * (n - 1) // 2
    pi = np.zeros(m, dtype=np.int64)
    pj = np.zeros(m, dtype=np.int64)
    q = 0
    for j in range(n):
        for i in range(j):
            pi[q] = i
            pj[q] = j
            q += 1
    val = np.full(m, -1, dtype=np.int64)
    nodes = 0
    d = 0
    while d >= 0:
        if d == m:
            return True, adj, nodes
        if val[d] >= 1 or (d == 0 and val[d] >= 0):
            # reversal symmetry: the first pair is fixed to bit 0
            val[d] = -1
            d -= 1
            continue
        val[d] += 1
        nodes += 1
        i = pi[d]
        j = pj[d]
        if val[d] == 1:
            adj[i, j] = 1
            adj[j, i] = 0
        else:
            adj[i, j] = 0
            adj[j, i] = 1
        ok = True
        for a in range(i):
            if triple_class(adj[a, i], adj[a, j], adj[i, j]) != cls[a, i, j]:
                ok = False
                break
        if ok:
            d += 1
    return False, adj, nodes


@njit(cache=True)
def approx_equal(adj, u, v):
    """Reversal equivalence of two equal-length tuples in a tournament."""
    n = u.shape[0]
    for i in range(n):
        for j in range(n):
            if (u[i] == u[j]) != (v[i] == v[j]):
                return False
    direct = True
    for i in range(n):
        for j in range(n):
            if adj[u[i], u[j]] != adj[v[i], v[j]]:
                direct = False
                break
        if not direct:
            break
    if direct:
        return True
    for i in range(n):
        for j in range(n):
            if adj[u[i], u[j]] != adj[v[j], v[i]]:
                return False
    return True


@njit(cache=True)
def approx_equal_by_triples(adj, u, v):
    n = u.shape[0]
    a = np.zeros(3, dtype=u.dtype)
    b = np.zeros(3, dtype=u.dtype)
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for k in range(n):
                if k == i or k == j:
                    continue
                a[0] = u[i]
                a[1] = u[j]
                a[2] = u[k]
                b[0] = v[i]
                b[1] = v[j]
                b[2] = v[k]
                if not approx_equal(adj, a, b):
                    return False
    return True


@njit(cache=True)
def tournament_from_bits(n, bits):
    adj = np.zeros((n, n), dtype=np.int8)
    q = 0
    for j in range(n):
        for i in range(j):
            if (bits >> q) & 1:
                adj[i, j] = 1
            else:
                adj[j, i] = 1
            q += 1
    return adj


@njit(cache=True)
def _classes_by_reps(adj, tuples, by_triples):
    # partition rows of ``tuples`` into classes, comparing with class reps
    m = tuples.shape[0]
    label = np.full(m, -1, dtype=np.int64)
    reps = np.zeros(m, dtype=np.int64)
    nrep = 0
    for x in range(m):
        for c in range(nrep):
            r = reps[c]
            if by_triples:
                same = approx_equal_by_triples(adj, tuples[x], tuples[r])
            else:
                same = approx_equal(adj, tuples[x], tuples[r])
            if same:
                label[x] = c
                break
        if label[x] < 0:
            reps[nrep] = x
            label[x] = nrep
            nrep += 1
    return label, nrep


@njit(cache=True)
def reversal_exhaustive(n, length):
    """Count tournaments on ``n`` vertices where the full relation on
    ``length``-tuples and the all-aligned-triples relation disagree.

    Both relations are decided from their definitions.  Classes of the full
    relation are formed against representatives, then every tuple is
    compared with every representative under both relations, which covers
    all pairs exactly when the full relation is an equivalence.
    """
    total = 1
    for _ in range(length):
        total *= n
    tuples = np.zeros((total, length), dtype=np.int64)
    for x in range(total):
        y = x
        for p in range(length - 1, -1, -1):
            tuples[x, p] = y % n
            y //= n
    bad = 0
    m = n * (n - 1) // 2
    for bits in range(1 << m):
        adj = tournament_from_bits(n, bits)
        label, nrep = _classes_by_reps(adj, tuples, False)
        reps = np.zeros(nrep, dtype=np.int64)
        for x in range(total - 1, -1, -1):
            reps[label[x]] = x
        ok = True
        for x in range(total):
            for c in range(nrep):
                p = approx_equal(adj, tuples[x], tuples[reps[c]])
                q = approx_equal_by_triples(adj, tuples[x], tuples[reps[c]])
                if p != q or p != (label[x] == c):
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            bad += 1
    return bad


@njit(cache=True)
def reversal_pairs(adj, tuples):
    """Pairwise discrepancies between the full relation and the triple test."""
    m = tuples.shape[0]
    bad = 0
    agree_pos = 0
    for x in range(m):
        for y in range(m):
            p = approx_equal(adj, tuples[x], tuples[y])
            q = approx_equal_by_triples(adj, tuples[x], tuples[y])
            if p != q:
                bad += 1
            elif p:
                agree_pos += 1
    return bad, agree_pos


@njit(cache=True)
def triple_class_counts(n):
    """For each tournament on ``n`` vertices: number of reversal classes on
    ordered distinct triples, and whether it has cyclic / transitive triples.
    """
    m = n * (n - 1) // 2
    trip = np.zeros((n * (n - 1) * (n - 2), 3), dtype=np.int64)
    q = 0
    for x in range(n):
        for y in range(n):
            if y == x:
                continue
            for z in range(n):
                if z == x or z == y:
                    continue
                trip[q, 0] = x
                trip[q, 1] = y
                trip[q, 2] = z
                q += 1
    counts = np.zeros(1 << m, dtype=np.int64)
    cyc = np.zeros(1 << m, dtype=np.bool_)
    tra = np.zeros(1 << m, dtype=np.bool_)
    for bits in range(1 << m):
        adj = tournament_from_bits(n, bits)
        label, nrep = _classes_by_reps(adj, trip, False)
        counts[bits] = nrep
        for a in range(n):
            for b in range(a + 1, n):
                for c in range(b + 1, n):
                    if adj[a, b] == adj[b, c] and adj[b, c] == adj[c, a]:
                        cyc[bits] = True
                    else:
                        tra[bits] = True
    return counts, cyc, tra


# --- parity hypergraphs ---------------------------------------------------

@njit(cache=True)
def parity_images(n):
    """Bitmask (over 3-subsets in lexicographic order) of the parity image
    of every graph on ``n`` vertices (graph bits over pairs, lexicographic).
    """
    m = n * (n - 1) // 2
    pid = np.zeros((n, n), dtype=np.int64)
    q = 0
    for i in range(n):
        for j in range(i + 1, n):
            pid[i, j] = q
            pid[j, i] = q
            q += 1
    out = np.zeros(1 << m, dtype=np.int64)
    for g in range(1 << m):
        h = 0
        t = 0
        for a in range(n):
            for b in range(a + 1, n):
                for c in range(b + 1, n):
                    s = ((g >> pid[a, b]) & 1) + ((g >> pid[a, c]) & 1) + ((g >> pid[b, c]) & 1)
                    if s & 1:
                        h |= 1 << t
                    t += 1
        out[g] = h
    return out


def parity_images_numpy(n):
    """Vectorised equivalent of :func:`parity_images`."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    pid = {p: q for q, p in enumerate(pairs)}
    g = np.arange(1 << len(pairs), dtype=np.int64)
    h = np.zeros_like(g)
    t = 0
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                s = (g >> pid[a, b]) ^ (g >> pid[a, c]) ^ (g >> pid[b, c])
                h |= (s & 1) << t
                t += 1
    return h


def reduct_classes_numpy(adj):
    """Vectorised equivalent of :func:`reduct_classes`."""
    adj = np.asarray(adj, dtype=np.int64)
    n = adj.shape[0]
    e01 = adj[:, :, None]
    e02 = adj[:, None, :]
    e12 = adj[None, :, :]
    p = e01 * 4 + e02 * 2 + e12
    lut = np.array([3, 4, 1, 2, 2, 1, 4, 3], dtype=np.int8)
    out = lut[p]
    idx = np.arange(n)
    out[idx, idx, :] = 0
    out[idx, :, idx] = 0
    out[:, idx, idx] = 0
    return out
