"""Pure-Python matching kernels.

This module is the fallback for the compiled ``_kernels`` extension and has
the same public surface:

``max_weight_matching(n, eu, ev, ew, maxcardinality)``
    Edmonds' primal-dual blossom algorithm, O(n^3).

``min_weight_perfect_matching(n, eu, ev, ew)``
    Perfect matching of minimum total weight, or ``None`` if none exists.

``Matcher(indptr, adj_node, adj_edge, eu, ev, weights, boundary)``
    Holds one weighted graph.  ``match(defects)`` runs shortest paths
    between defects and to the boundary, blossom on the derived graph, and
    expands matched pairs back to graph edges.
"""

from __future__ import annotations

import heapq
import math

INF = math.inf


def max_weight_matching(n, eu, ev, ew, maxcardinality=True, warm=False):
    """Return ``mate`` with ``mate[v]`` the partner of ``v`` or -1.

    Vertices are ``0..n-1``; edge ``k`` joins ``eu[k]`` and ``ev[k]`` with
    weight ``ew[k]``.  Endpoint ``p`` of edge ``k = p // 2`` is
    ``eu[k]`` for even ``p`` and ``ev[k]`` for odd ``p``.

    ``warm`` starts from per-vertex duals and a greedy matching on tight
    edges.  Free vertices then need not share one dual value, so this is
    only valid when the caller wants a perfect matching.
    """
    nedge = len(eu)
    if n == 0 or nedge == 0:
        return [-1] * n
    eu = [int(x) for x in eu]
    ev = [int(x) for x in ev]
    ew = [float(x) for x in ew]
    maxw = max(0.0, max(ew))
    endpoint = [0] * (2 * nedge)
    neighbend = [[] for _ in range(n)]
    for k in range(nedge):
        i, j = eu[k], ev[k]
        if i == j:
            raise ValueError("self-loop in matching graph")
        endpoint[2 * k] = i
        endpoint[2 * k + 1] = j
        neighbend[i].append(2 * k + 1)
        neighbend[j].append(2 * k)

    mate = [-1] * n  # remote endpoint index of the matched edge
    label = [0] * (2 * n)  # 0 free, 1 S, 2 T; bit 4 is a breadcrumb
    labelend = [-1] * (2 * n)
    inblossom = list(range(n))
    blossomparent = [-1] * (2 * n)
    blossomchilds = [None] * (2 * n)
    blossombase = list(range(n)) + [-1] * n
    blossomendps = [None] * (2 * n)
    bestedge = [-1] * (2 * n)
    blossombestedges = [None] * (2 * n)
    unusedblossoms = list(range(n, 2 * n))
    dualvar = [maxw] * n + [0.0] * n
    allowedge = [False] * nedge
    queue = []
    if warm:
        _warm_start(n, ew, endpoint, neighbend, mate, dualvar)

    def slack(k):
        return dualvar[eu[k]] + dualvar[ev[k]] - 2.0 * ew[k]

    def leaves(b):
        if b < n:
            return [b]
        out = []
        stack = [b]
        while stack:
            t = stack.pop()
            if t < n:
                out.append(t)
            else:
                stack.extend(blossomchilds[t])
        return out

    def assign_label(w, t, p):
        b = inblossom[w]
        label[w] = label[b] = t
        labelend[w] = labelend[b] = p
        bestedge[w] = bestedge[b] = -1
        if t == 1:
            queue.extend(leaves(b))
        else:
            base = blossombase[b]
            assign_label(endpoint[mate[base]], 1, mate[base] ^ 1)

    def scan_blossom(v, w):
        path = []
        base = -1
        while v != -1 or w != -1:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            path.append(b)
            label[b] = 5
            if labelend[b] == -1:
                v = -1
            else:
                v = endpoint[labelend[b]]
                b = inblossom[v]
                v = endpoint[labelend[b]]
            if w != -1:
                v, w = w, v
        for b in path:
            label[b] = 1
        return base

    def add_blossom(base, k):
        v, w = eu[k], ev[k]
        bb = inblossom[base]
        bv = inblossom[v]
        bw = inblossom[w]
        b = unusedblossoms.pop()
        blossombase[b] = base
        blossomparent[b] = -1
        blossomparent[bb] = b
        path = []
        endps = []
        while bv != bb:
            blossomparent[bv] = b
            path.append(bv)
            endps.append(labelend[bv])
            v = endpoint[labelend[bv]]
            bv = inblossom[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            blossomparent[bw] = b
            path.append(bw)
            endps.append(labelend[bw] ^ 1)
            w = endpoint[labelend[bw]]
            bw = inblossom[w]
        blossomchilds[b] = path
        blossomendps[b] = endps
        label[b] = 1
        labelend[b] = labelend[bb]
        dualvar[b] = 0.0
        for v in leaves(b):
            if label[inblossom[v]] == 2:
                queue.append(v)
            inblossom[v] = b
        bestedgeto = {}
        for bv in path:
            if blossombestedges[bv] is None:
                nblist = [p // 2 for v in leaves(bv) for p in neighbend[v]]
            else:
                nblist = blossombestedges[bv]
            for kk in nblist:
                i, j = eu[kk], ev[kk]
                if inblossom[j] == b:
                    i, j = j, i
                bj = inblossom[j]
                if bj != b and label[bj] == 1:
                    cur = bestedgeto.get(bj, -1)
                    if cur == -1 or slack(kk) < slack(cur):
                        bestedgeto[bj] = kk
            blossombestedges[bv] = None
            bestedge[bv] = -1
        best = [kk for _, kk in sorted(bestedgeto.items())]
        blossombestedges[b] = best
        bestedge[b] = -1
        for kk in best:
            if bestedge[b] == -1 or slack(kk) < slack(bestedge[b]):
                bestedge[b] = kk

    def expand_blossom(b, endstage):
        childs = blossomchilds[b]
        for s in childs:
            blossomparent[s] = -1
            if s < n:
                inblossom[s] = s
            elif endstage and dualvar[s] == 0:
                expand_blossom(s, endstage)
            else:
                for v in leaves(s):
                    inblossom[v] = s
        if not endstage and label[b] == 2:
            nchild = len(childs)
            endps = blossomendps[b]
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = childs.index(entrychild)
            if j & 1:
                j -= nchild
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[endps[j - endptrick] ^ endptrick ^ 1]] = 0
                assign_label(endpoint[p ^ 1], 2, p)
                allowedge[endps[j - endptrick] // 2] = True
                j += jstep
                p = endps[j - endptrick] ^ endptrick
                allowedge[p // 2] = True
                j += jstep
            bv = childs[j]
            label[endpoint[p ^ 1]] = label[bv] = 2
            labelend[endpoint[p ^ 1]] = labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while childs[j] != entrychild:
                bv = childs[j]
                if label[bv] == 1:
                    j += jstep
                    continue
                reached = -1
                for v in leaves(bv):
                    if label[v] != 0:
                        reached = v
                        break
                if reached != -1:
                    v = reached
                    label[v] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    assign_label(v, 2, labelend[v])
                j += jstep
        label[b] = labelend[b] = -1
        blossomchilds[b] = blossomendps[b] = None
        blossombase[b] = -1
        blossombestedges[b] = None
        bestedge[b] = -1
        unusedblossoms.append(b)

    def augment_blossom(b, v):
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= n:
            augment_blossom(t, v)
        childs = blossomchilds[b]
        endps = blossomendps[b]
        i = j = childs.index(t)
        if i & 1:
            j -= len(childs)
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = childs[j]
            p = endps[j - endptrick] ^ endptrick
            if t >= n:
                augment_blossom(t, endpoint[p])
            j += jstep
            t = childs[j]
            if t >= n:
                augment_blossom(t, endpoint[p ^ 1])
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
        blossomchilds[b] = childs[i:] + childs[:i]
        blossomendps[b] = endps[i:] + endps[:i]
        blossombase[b] = blossombase[blossomchilds[b][0]]

    def augment_matching(k):
        for s, p in ((eu[k], 2 * k + 1), (ev[k], 2 * k)):
            while True:
                bs = inblossom[s]
                if bs >= n:
                    augment_blossom(bs, s)
                mate[s] = p
                if labelend[bs] == -1:
                    break
                t = endpoint[labelend[bs]]
                bt = inblossom[t]
                s = endpoint[labelend[bt]]
                j = endpoint[labelend[bt] ^ 1]
                if bt >= n:
                    augment_blossom(bt, j)
                mate[j] = labelend[bt]
                p = labelend[bt] ^ 1

    for _stage in range(n):
        for i in range(2 * n):
            label[i] = 0
            bestedge[i] = -1
        for i in range(n, 2 * n):
            blossombestedges[i] = None
        for k in range(nedge):
            allowedge[k] = False
        queue.clear()
        for v in range(n):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                assign_label(v, 1, -1)
        augmented = False
        while True:
            while queue and not augmented:
                v = queue.pop()
                for p in neighbend[v]:
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    kslack = 0.0
                    if not allowedge[k]:
                        kslack = slack(k)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            assign_label(w, 2, p ^ 1)
                        elif label[inblossom[w]] == 1:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                add_blossom(base, k)
                            else:
                                augment_matching(k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < slack(bestedge[b]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < slack(bestedge[w]):
                            bestedge[w] = k
            if augmented:
                break
            deltatype = -1
            delta = 0.0
            deltaedge = -1
            deltablossom = -1
            if not maxcardinality:
                deltatype = 1
                delta = min(dualvar[:n])
            for v in range(n):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    dd = slack(bestedge[v])
                    if deltatype == -1 or dd < delta:
                        delta = dd
                        deltatype = 2
                        deltaedge = bestedge[v]
            for b in range(2 * n):
                if blossomparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    dd = slack(bestedge[b]) / 2.0
                    if deltatype == -1 or dd < delta:
                        delta = dd
                        deltatype = 3
                        deltaedge = bestedge[b]
            for b in range(n, 2 * n):
                if (
                    blossombase[b] >= 0
                    and blossomparent[b] == -1
                    and label[b] == 2
                    and (deltatype == -1 or dualvar[b] < delta)
                ):
                    delta = dualvar[b]
                    deltatype = 4
                    deltablossom = b
            if deltatype == -1:
                deltatype = 1
                delta = max(0.0, min(dualvar[:n]))
            for v in range(n):
                lb = label[inblossom[v]]
                if lb == 1:
                    dualvar[v] -= delta
                elif lb == 2:
                    dualvar[v] += delta
            for b in range(n, 2 * n):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta
            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = True
                i, j = eu[deltaedge], ev[deltaedge]
                if label[inblossom[i]] == 0:
                    i, j = j, i
                queue.append(i)
            elif deltatype == 3:
                allowedge[deltaedge] = True
                queue.append(eu[deltaedge])
            else:
                expand_blossom(deltablossom, False)
        if not augmented:
            break
        for b in range(n, 2 * n):
            if blossomparent[b] == -1 and blossombase[b] >= 0 and label[b] == 1 and dualvar[b] == 0:
                expand_blossom(b, True)

    return [endpoint[mate[v]] if mate[v] >= 0 else -1 for v in range(n)]


def _warm_start(n, ew, endpoint, neighbend, mate, dualvar):
    """Feasible duals with one tight edge per vertex, matching tight edges greedily."""
    for v in range(n):
        if neighbend[v]:
            dualvar[v] = max(ew[p // 2] for p in neighbend[v])
    for v in range(n):
        if mate[v] != -1 or not neighbend[v]:
            continue
        smin = min(dualvar[v] + dualvar[endpoint[p]] - 2.0 * ew[p // 2] for p in neighbend[v])
        dualvar[v] -= smin
        for p in neighbend[v]:
            w = endpoint[p]
            if mate[w] == -1 and dualvar[v] + dualvar[w] - 2.0 * ew[p // 2] <= 0.0:
                mate[v] = p
                mate[w] = p ^ 1
                break


def min_weight_perfect_matching(n, eu, ev, ew):
    """Minimum-weight perfect matching as a ``mate`` list, or ``None``."""
    if n == 0:
        return []
    if len(eu) == 0:
        return None
    top = max(float(w) for w in ew) + 1.0
    mate = max_weight_matching(n, eu, ev, [top - float(w) for w in ew], maxcardinality=True, warm=True)
    if any(m < 0 for m in mate):
        return None
    return mate



def _components(k, du, dv):
    """Connected components of the defect pair graph, each a sorted list."""
    root = list(range(k))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for a, b in zip(du, dv):
        ra, rb = find(a), find(b)
        if ra != rb:
            root[max(ra, rb)] = min(ra, rb)
    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _solve_derived(k, du, dv, dw, db):
    """Mate of each defect in the derived graph: a defect index, or ``-1`` for the boundary.

    Each component of the pair graph is matched on its own; a defect matched
    to its own boundary copy goes to the boundary.
    """
    partner = [-2] * k
    comps = _components(k, du, dv)
    by_comp = {}
    for i, comp in enumerate(comps):
        for a in comp:
            by_comp[a] = i
    local_edges = [[] for _ in comps]
    for a, b, w in zip(du, dv, dw):
        local_edges[by_comp[a]].append((a, b, w))
    for c, comp in enumerate(comps):
        if len(comp) == 1:
            a = comp[0]
            if db[a] == INF:
                raise UnmatchableDefects("defects cannot be paired or matched to the boundary")
            partner[a] = -1
            continue
        pos = {a: i for i, a in enumerate(comp)}
        m = len(comp)
        eu, ev, ew = [], [], []
        for a, b, w in local_edges[c]:
            eu.append(pos[a])
            ev.append(pos[b])
            ew.append(w)
        for a, b, w in local_edges[c]:
            eu.append(m + pos[a])
            ev.append(m + pos[b])
            ew.append(0.0)
        for i, a in enumerate(comp):
            if db[a] < INF:
                eu.append(i)
                ev.append(m + i)
                ew.append(db[a])
        mate = min_weight_perfect_matching(2 * m, eu, ev, ew)
        if mate is None:
            raise UnmatchableDefects("defects cannot be paired or matched to the boundary")
        for i, a in enumerate(comp):
            j = mate[i]
            partner[a] = -1 if j == m + i else comp[j]
    return partner


def _dijkstra(indptr, adj_node, adj_edge, weights, source, stop_at, skip, lens=None, base=INF):
    """Distances and parent edges from ``source``; stops once popped distance exceeds ``stop_at``.

    With ``lens`` (boundary distances) a node ``v`` reached at distance at
    least ``base + lens[v]`` is settled but not expanded: any pairing routed
    through it costs no less than sending both ends to the boundary.
    """
    dist = {source: 0.0}
    parent = {source: -1}
    done = set()
    heap = [(0.0, source)]
    while heap:
        dv, v = heapq.heappop(heap)
        if v in done:
            continue
        if dv > stop_at:
            break
        done.add(v)
        if v == skip:
            continue
        if lens is not None and dv >= base + lens.get(v, INF):
            done.discard(v)
            continue
        for slot in range(indptr[v], indptr[v + 1]):
            w = adj_node[slot]
            nd = dv + weights[adj_edge[slot]]
            if nd > stop_at or (lens is not None and nd >= base + lens.get(w, INF)):
                continue
            if nd < dist.get(w, INF):
                dist[w] = nd
                parent[w] = adj_edge[slot]
                heapq.heappush(heap, (nd, w))
    return {v: dist[v] for v in done}, parent


def _walk(parent, eu, ev, start):
    """Edges from ``start`` back to the Dijkstra source along ``parent``."""
    out = []
    v = start
    while parent[v] != -1:
        e = parent[v]
        out.append(e)
        v = eu[e] if ev[e] == v else ev[e]
    return out


class UnmatchableDefects(ValueError):
    pass


class Matcher:
    """Exact MWPM of defect sets (boundary allowed) on one graph with nonnegative weights."""

    def __init__(self, indptr, adj_node, adj_edge, eu, ev, weights, boundary):
        self.indptr = [int(x) for x in indptr]
        self.adj_node = [int(x) for x in adj_node]
        self.adj_edge = [int(x) for x in adj_edge]
        self.eu = [int(x) for x in eu]
        self.ev = [int(x) for x in ev]
        self.weights = [float(w) for w in weights]
        if any(w < 0 for w in self.weights):
            raise ValueError("negative edge weight")
        self.boundary = int(boundary)
        dist, self._parent_b = _dijkstra(
            self.indptr, self.adj_node, self.adj_edge, self.weights, self.boundary, INF, -1
        )
        self._dist_b = dist

    def boundary_distance(self, v):
        return self._dist_b.get(int(v), INF)

    def match(self, defects):
        """Return ``(total_weight, edges, pairs)``.

        ``edges`` lists the edges of the matched paths (an edge may repeat if
        two paths share it) and ``pairs`` lists ``(a, b)`` defect pairs with
        ``b == -1`` for a boundary match.
        """
        defects = [int(x) for x in defects]
        k = len(defects)
        if k == 0:
            return 0.0, [], []
        weights = self.weights
        db = [self._dist_b.get(s, INF) for s in defects]
        finite_b = [x for x in db if x < INF]
        max_db = max(finite_b) if finite_b else INF
        index_of = {s: i for i, s in enumerate(defects)}

        du, dv, dw = [], [], []
        parents = []
        for i, s in enumerate(defects):
            dist, parent = _dijkstra(
                self.indptr, self.adj_node, self.adj_edge, weights, s, db[i] + max_db, self.boundary,
                self._dist_b, db[i],
            )
            parents.append(parent)
            for t, dt in dist.items():
                j = index_of.get(t)
                if j is None or j <= i:
                    continue
                if dt < db[i] + db[j]:
                    du.append(i)
                    dv.append(j)
                    dw.append(dt)
        order = sorted(range(len(du)), key=lambda e: (du[e], dv[e]))
        du = [du[e] for e in order]
        dv = [dv[e] for e in order]
        dw = [dw[e] for e in order]
        partner = _solve_derived(k, du, dv, dw, db)

        total = 0.0
        edges = []
        pairs = []
        for i in range(k):
            j = partner[i]
            if j == -1:
                path = _walk(self._parent_b, self.eu, self.ev, defects[i])
                pairs.append((defects[i], -1))
            elif i < j:
                path = _walk(parents[i], self.eu, self.ev, defects[j])
                pairs.append((defects[i], defects[j]))
            else:
                continue
            total += sum(weights[e] for e in path)
            edges.extend(path)
        return total, edges, pairs
