# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled matching kernels; same surface as ``_kernels_py``."""

from libc.math cimport INFINITY
from libc.stdlib cimport malloc, realloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()


class UnmatchableDefects(ValueError):
    pass


cdef inline int pmod(int j, int m):
    j = j % m
    return j + m if j < 0 else j


cdef class _Blossom:
    """Primal-dual blossom state for one maximum-weight matching problem."""

    cdef int n, nedge
    cdef bint maxcardinality
    cdef int[::1] eu, ev, endpoint, mate, label, labelend, inblossom
    cdef int[::1] blossomparent, blossombase, bestedge
    cdef int[::1] nb_ptr, nb_end  # CSR of remote endpoints per vertex, in edge order
    cdef int[::1] qbuf
    cdef int qlen
    cdef double[::1] ew, dualvar
    cdef char[::1] allowedge
    cdef list blossomchilds, blossomendps, blossombestedges, unused

    def __init__(self, int n, eu, ev, ew, bint maxcardinality):
        cdef int k, i, j
        cdef double maxw = 0.0
        self.n = n
        self.nedge = len(eu)
        self.maxcardinality = maxcardinality
        self.eu = np.ascontiguousarray(eu, dtype=np.int32)
        self.ev = np.ascontiguousarray(ev, dtype=np.int32)
        self.ew = np.ascontiguousarray(ew, dtype=np.float64)
        for k in range(self.nedge):
            if self.ew[k] > maxw:
                maxw = self.ew[k]
        self.endpoint = np.empty(2 * self.nedge, dtype=np.int32)
        self.nb_ptr = np.zeros(n + 1, dtype=np.int32)
        self.nb_end = np.empty(2 * self.nedge, dtype=np.int32)
        for k in range(self.nedge):
            i = self.eu[k]
            j = self.ev[k]
            if i == j:
                raise ValueError("self-loop in matching graph")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError("edge endpoint out of range")
            self.endpoint[2 * k] = i
            self.endpoint[2 * k + 1] = j
            self.nb_ptr[i + 1] += 1
            self.nb_ptr[j + 1] += 1
        for i in range(n):
            self.nb_ptr[i + 1] += self.nb_ptr[i]
        fill = np.array(self.nb_ptr[:n], dtype=np.int32)
        cdef int[::1] pos = fill
        for k in range(self.nedge):
            i = self.eu[k]
            j = self.ev[k]
            self.nb_end[pos[i]] = 2 * k + 1
            pos[i] += 1
            self.nb_end[pos[j]] = 2 * k
            pos[j] += 1
        self.mate = np.full(n, -1, dtype=np.int32)
        self.label = np.zeros(2 * n, dtype=np.int32)
        self.labelend = np.full(2 * n, -1, dtype=np.int32)
        self.inblossom = np.arange(n, dtype=np.int32)
        self.blossomparent = np.full(2 * n, -1, dtype=np.int32)
        self.blossombase = np.concatenate([np.arange(n, dtype=np.int32), np.full(n, -1, dtype=np.int32)])
        self.bestedge = np.full(2 * n, -1, dtype=np.int32)
        self.dualvar = np.concatenate([np.full(n, maxw), np.zeros(n)])
        self.allowedge = np.zeros(max(self.nedge, 1), dtype=np.int8)
        self.blossomchilds = [None] * (2 * n)
        self.blossomendps = [None] * (2 * n)
        self.blossombestedges = [None] * (2 * n)
        self.unused = list(range(n, 2 * n))
        self.qbuf = np.empty(4 * n + 16, dtype=np.int32)
        self.qlen = 0

    cdef inline void qpush(self, int v):
        if self.qlen == self.qbuf.shape[0]:
            grown = np.empty(2 * self.qlen, dtype=np.int32)
            grown[:self.qlen] = self.qbuf
            self.qbuf = grown
        self.qbuf[self.qlen] = v
        self.qlen += 1

    cdef void warm_start(self):
        """Feasible duals with one tight edge per vertex, matching tight edges greedily."""
        cdef int v, w, p, a
        cdef double smin, sl
        for v in range(self.n):
            if self.nb_ptr[v + 1] > self.nb_ptr[v]:
                smin = -INFINITY
                for a in range(self.nb_ptr[v], self.nb_ptr[v + 1]):
                    p = self.nb_end[a]
                    if self.ew[p // 2] > smin:
                        smin = self.ew[p // 2]
                self.dualvar[v] = smin
        for v in range(self.n):
            if self.mate[v] != -1 or self.nb_ptr[v + 1] == self.nb_ptr[v]:
                continue
            smin = INFINITY
            for a in range(self.nb_ptr[v], self.nb_ptr[v + 1]):
                p = self.nb_end[a]
                sl = self.dualvar[v] + self.dualvar[self.endpoint[p]] - 2.0 * self.ew[p // 2]
                if sl < smin:
                    smin = sl
            self.dualvar[v] -= smin
            for a in range(self.nb_ptr[v], self.nb_ptr[v + 1]):
                p = self.nb_end[a]
                w = self.endpoint[p]
                if self.mate[w] == -1 and self.dualvar[v] + self.dualvar[w] - 2.0 * self.ew[p // 2] <= 0.0:
                    self.mate[v] = p
                    self.mate[w] = p ^ 1
                    break

    cdef inline double slack(self, int k):
        return self.dualvar[self.eu[k]] + self.dualvar[self.ev[k]] - 2.0 * self.ew[k]

    cdef list leaves(self, int b):
        cdef list out, stack
        cdef int t
        if b < self.n:
            return [b]
        out = []
        stack = [b]
        while stack:
            t = stack.pop()
            if t < self.n:
                out.append(t)
            else:
                stack.extend(self.blossomchilds[t])
        return out

    cdef void assign_label(self, int w, int t, int p):
        cdef int b, base, v
        while True:
            b = self.inblossom[w]
            self.label[w] = t
            self.label[b] = t
            self.labelend[w] = p
            self.labelend[b] = p
            self.bestedge[w] = -1
            self.bestedge[b] = -1
            if t == 1:
                for v in self.leaves(b):
                    self.qpush(v)
                return
            base = self.blossombase[b]
            w = self.endpoint[self.mate[base]]
            p = self.mate[base] ^ 1
            t = 1

    cdef int scan_blossom(self, int v, int w):
        cdef list path = []
        cdef int base = -1
        cdef int b, tmp
        while v != -1 or w != -1:
            b = self.inblossom[v]
            if self.label[b] & 4:
                base = self.blossombase[b]
                break
            path.append(b)
            self.label[b] = 5
            if self.labelend[b] == -1:
                v = -1
            else:
                v = self.endpoint[self.labelend[b]]
                b = self.inblossom[v]
                v = self.endpoint[self.labelend[b]]
            if w != -1:
                tmp = v
                v = w
                w = tmp
        for b in path:
            self.label[b] = 1
        return base

    cdef void add_blossom(self, int base, int k):
        cdef int v = self.eu[k]
        cdef int w = self.ev[k]
        cdef int bb = self.inblossom[base]
        cdef int bv = self.inblossom[v]
        cdef int bw = self.inblossom[w]
        cdef int b = self.unused.pop()
        cdef list path = []
        cdef list endps = []
        cdef dict bestedgeto
        cdef int kk, i, j, bj, cur
        cdef list nblist, best
        self.blossombase[b] = base
        self.blossomparent[b] = -1
        self.blossomparent[bb] = b
        while bv != bb:
            self.blossomparent[bv] = b
            path.append(bv)
            endps.append(self.labelend[bv])
            v = self.endpoint[self.labelend[bv]]
            bv = self.inblossom[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            self.blossomparent[bw] = b
            path.append(bw)
            endps.append(self.labelend[bw] ^ 1)
            w = self.endpoint[self.labelend[bw]]
            bw = self.inblossom[w]
        self.blossomchilds[b] = path
        self.blossomendps[b] = endps
        self.label[b] = 1
        self.labelend[b] = self.labelend[bb]
        self.dualvar[b] = 0.0
        for v in self.leaves(b):
            if self.label[self.inblossom[v]] == 2:
                self.qpush(v)
            self.inblossom[v] = b
        bestedgeto = {}
        for bv in path:
            if self.blossombestedges[bv] is None:
                nblist = [self.nb_end[a] // 2 for v in self.leaves(bv) for a in range(self.nb_ptr[v], self.nb_ptr[v + 1])]
            else:
                nblist = self.blossombestedges[bv]
            for kk in nblist:
                i = self.eu[kk]
                j = self.ev[kk]
                if self.inblossom[j] == b:
                    j = i
                bj = self.inblossom[j]
                if bj != b and self.label[bj] == 1:
                    cur = bestedgeto.get(bj, -1)
                    if cur == -1 or self.slack(kk) < self.slack(cur):
                        bestedgeto[bj] = kk
            self.blossombestedges[bv] = None
            self.bestedge[bv] = -1
        best = [bestedgeto[key] for key in sorted(bestedgeto)]
        self.blossombestedges[b] = best
        self.bestedge[b] = -1
        for kk in best:
            if self.bestedge[b] == -1 or self.slack(kk) < self.slack(self.bestedge[b]):
                self.bestedge[b] = kk

    cdef void expand_blossom(self, int b, bint endstage):
        cdef list childs = self.blossomchilds[b]
        cdef list endps
        cdef int s, v, nchild, entrychild, j, jstep, endptrick, p, bv, reached
        for s in childs:
            self.blossomparent[s] = -1
            if s < self.n:
                self.inblossom[s] = s
            elif endstage and self.dualvar[s] == 0:
                self.expand_blossom(s, endstage)
            else:
                for v in self.leaves(s):
                    self.inblossom[v] = s
        if not endstage and self.label[b] == 2:
            nchild = len(childs)
            endps = self.blossomendps[b]
            entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]]
            j = childs.index(entrychild)
            if j & 1:
                j -= nchild
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = self.labelend[b]
            while j != 0:
                self.label[self.endpoint[p ^ 1]] = 0
                self.label[self.endpoint[<int>endps[pmod(j - endptrick, nchild)] ^ endptrick ^ 1]] = 0
                self.assign_label(self.endpoint[p ^ 1], 2, p)
                self.allowedge[<int>endps[pmod(j - endptrick, nchild)] // 2] = 1
                j += jstep
                p = <int>endps[pmod(j - endptrick, nchild)] ^ endptrick
                self.allowedge[p // 2] = 1
                j += jstep
            bv = childs[pmod(j, nchild)]
            self.label[self.endpoint[p ^ 1]] = 2
            self.label[bv] = 2
            self.labelend[self.endpoint[p ^ 1]] = p
            self.labelend[bv] = p
            self.bestedge[bv] = -1
            j += jstep
            while childs[pmod(j, nchild)] != entrychild:
                bv = childs[pmod(j, nchild)]
                if self.label[bv] == 1:
                    j += jstep
                    continue
                reached = -1
                for v in self.leaves(bv):
                    if self.label[v] != 0:
                        reached = v
                        break
                if reached != -1:
                    v = reached
                    self.label[v] = 0
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0
                    self.assign_label(v, 2, self.labelend[v])
                j += jstep
        self.label[b] = -1
        self.labelend[b] = -1
        self.blossomchilds[b] = None
        self.blossomendps[b] = None
        self.blossombase[b] = -1
        self.blossombestedges[b] = None
        self.bestedge[b] = -1
        self.unused.append(b)

    cdef void augment_blossom(self, int b, int v):
        cdef int t = v
        cdef list childs, endps
        cdef int i, j, jstep, endptrick, p, nchild
        while self.blossomparent[t] != b:
            t = self.blossomparent[t]
        if t >= self.n:
            self.augment_blossom(t, v)
        childs = self.blossomchilds[b]
        endps = self.blossomendps[b]
        nchild = len(childs)
        i = childs.index(t)
        j = i
        if i & 1:
            j -= nchild
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = childs[pmod(j, nchild)]
            p = <int>endps[pmod(j - endptrick, nchild)] ^ endptrick
            if t >= self.n:
                self.augment_blossom(t, self.endpoint[p])
            j += jstep
            t = childs[pmod(j, nchild)]
            if t >= self.n:
                self.augment_blossom(t, self.endpoint[p ^ 1])
            self.mate[self.endpoint[p]] = p ^ 1
            self.mate[self.endpoint[p ^ 1]] = p
        self.blossomchilds[b] = childs[i:] + childs[:i]
        self.blossomendps[b] = endps[i:] + endps[:i]
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]]

    cdef void augment_matching(self, int k):
        cdef int s, p, bs, t, bt, j, side
        for side in range(2):
            if side == 0:
                s = self.eu[k]
                p = 2 * k + 1
            else:
                s = self.ev[k]
                p = 2 * k
            while True:
                bs = self.inblossom[s]
                if bs >= self.n:
                    self.augment_blossom(bs, s)
                self.mate[s] = p
                if self.labelend[bs] == -1:
                    break
                t = self.endpoint[self.labelend[bs]]
                bt = self.inblossom[t]
                s = self.endpoint[self.labelend[bt]]
                j = self.endpoint[self.labelend[bt] ^ 1]
                if bt >= self.n:
                    self.augment_blossom(bt, j)
                self.mate[j] = self.labelend[bt]
                p = self.labelend[bt] ^ 1

    cdef list solve(self):
        cdef int n = self.n
        cdef int stage, i, v, w, k, p, a, b, base, deltatype, deltaedge, deltablossom, lb
        cdef double kslack, delta, dd
        cdef bint augmented
        if n == 0 or self.nedge == 0:
            return [-1] * n
        for stage in range(n):
            for i in range(2 * n):
                self.label[i] = 0
                self.bestedge[i] = -1
            for i in range(n, 2 * n):
                self.blossombestedges[i] = None
            for k in range(self.nedge):
                self.allowedge[k] = 0
            self.qlen = 0
            for v in range(n):
                if self.mate[v] == -1 and self.label[self.inblossom[v]] == 0:
                    self.assign_label(v, 1, -1)
            augmented = False
            while True:
                while self.qlen > 0 and not augmented:
                    self.qlen -= 1
                    v = self.qbuf[self.qlen]
                    for a in range(self.nb_ptr[v], self.nb_ptr[v + 1]):
                        p = self.nb_end[a]
                        k = p // 2
                        w = self.endpoint[p]
                        if self.inblossom[v] == self.inblossom[w]:
                            continue
                        kslack = 0.0
                        if not self.allowedge[k]:
                            kslack = self.slack(k)
                            if kslack <= 0:
                                self.allowedge[k] = 1
                        if self.allowedge[k]:
                            if self.label[self.inblossom[w]] == 0:
                                self.assign_label(w, 2, p ^ 1)
                            elif self.label[self.inblossom[w]] == 1:
                                base = self.scan_blossom(v, w)
                                if base >= 0:
                                    self.add_blossom(base, k)
                                else:
                                    self.augment_matching(k)
                                    augmented = True
                                    break
                            elif self.label[w] == 0:
                                self.label[w] = 2
                                self.labelend[w] = p ^ 1
                        elif self.label[self.inblossom[w]] == 1:
                            b = self.inblossom[v]
                            if self.bestedge[b] == -1 or kslack < self.slack(self.bestedge[b]):
                                self.bestedge[b] = k
                        elif self.label[w] == 0:
                            if self.bestedge[w] == -1 or kslack < self.slack(self.bestedge[w]):
                                self.bestedge[w] = k
                if augmented:
                    break
                deltatype = -1
                delta = 0.0
                deltaedge = -1
                deltablossom = -1
                if not self.maxcardinality:
                    deltatype = 1
                    delta = self.dualvar[0]
                    for v in range(n):
                        if self.dualvar[v] < delta:
                            delta = self.dualvar[v]
                for v in range(n):
                    if self.label[self.inblossom[v]] == 0 and self.bestedge[v] != -1:
                        dd = self.slack(self.bestedge[v])
                        if deltatype == -1 or dd < delta:
                            delta = dd
                            deltatype = 2
                            deltaedge = self.bestedge[v]
                for b in range(2 * n):
                    if self.blossomparent[b] == -1 and self.label[b] == 1 and self.bestedge[b] != -1:
                        dd = self.slack(self.bestedge[b]) / 2.0
                        if deltatype == -1 or dd < delta:
                            delta = dd
                            deltatype = 3
                            deltaedge = self.bestedge[b]
                for b in range(n, 2 * n):
                    if (self.blossombase[b] >= 0 and self.blossomparent[b] == -1
                            and self.label[b] == 2 and (deltatype == -1 or self.dualvar[b] < delta)):
                        delta = self.dualvar[b]
                        deltatype = 4
                        deltablossom = b
                if deltatype == -1:
                    deltatype = 1
                    delta = self.dualvar[0]
                    for v in range(n):
                        if self.dualvar[v] < delta:
                            delta = self.dualvar[v]
                    if delta < 0:
                        delta = 0.0
                for v in range(n):
                    lb = self.label[self.inblossom[v]]
                    if lb == 1:
                        self.dualvar[v] -= delta
                    elif lb == 2:
                        self.dualvar[v] += delta
                for b in range(n, 2 * n):
                    if self.blossombase[b] >= 0 and self.blossomparent[b] == -1:
                        if self.label[b] == 1:
                            self.dualvar[b] += delta
                        elif self.label[b] == 2:
                            self.dualvar[b] -= delta
                if deltatype == 1:
                    break
                elif deltatype == 2:
                    self.allowedge[deltaedge] = 1
                    i = self.eu[deltaedge]
                    if self.label[self.inblossom[i]] == 0:
                        i = self.ev[deltaedge]
                    self.qpush(i)
                elif deltatype == 3:
                    self.allowedge[deltaedge] = 1
                    self.qpush(self.eu[deltaedge])
                else:
                    self.expand_blossom(deltablossom, False)
            if not augmented:
                break
            for b in range(n, 2 * n):
                if (self.blossomparent[b] == -1 and self.blossombase[b] >= 0
                        and self.label[b] == 1 and self.dualvar[b] == 0):
                    self.expand_blossom(b, True)
        return [self.endpoint[self.mate[v]] if self.mate[v] >= 0 else -1 for v in range(n)]


def max_weight_matching(int n, eu, ev, ew, bint maxcardinality=True, bint warm=False):
    """Return ``mate`` with ``mate[v]`` the partner of ``v`` or -1; ``warm`` as in the Python kernel."""
    if n == 0 or len(eu) == 0:
        return [-1] * n
    cdef _Blossom b = _Blossom(n, eu, ev, ew, maxcardinality)
    if warm:
        b.warm_start()
    return b.solve()


def min_weight_perfect_matching(int n, eu, ev, ew):
    """Minimum-weight perfect matching as a ``mate`` list, or ``None``."""
    if n == 0:
        return []
    if len(eu) == 0:
        return None
    w = np.asarray(ew, dtype=np.float64)
    mate = max_weight_matching(n, eu, ev, (w.max() + 1.0) - w, True, True)
    for m in mate:
        if m < 0:
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
            if db[a] == INFINITY:
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
            if db[a] < INFINITY:
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


cdef struct HeapItem:
    double key
    int node


cdef class _Heap:
    cdef HeapItem* items
    cdef int size, cap

    def __cinit__(self, int cap):
        self.cap = max(cap, 16)
        self.size = 0
        self.items = <HeapItem*>malloc(self.cap * sizeof(HeapItem))
        if self.items == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.items)

    cdef inline void clear(self):
        self.size = 0

    cdef void push(self, double key, int node):
        cdef int i, parent
        cdef HeapItem tmp
        if self.size == self.cap:
            self.cap *= 2
            self.items = <HeapItem*>realloc(self.items, self.cap * sizeof(HeapItem))
        i = self.size
        self.size += 1
        self.items[i].key = key
        self.items[i].node = node
        while i > 0:
            parent = (i - 1) >> 1
            if self.items[parent].key < self.items[i].key or (
                self.items[parent].key == self.items[i].key and self.items[parent].node <= self.items[i].node
            ):
                break
            tmp = self.items[parent]
            self.items[parent] = self.items[i]
            self.items[i] = tmp
            i = parent

    cdef HeapItem pop(self):
        cdef HeapItem top = self.items[0]
        cdef HeapItem tmp
        cdef int i = 0
        cdef int l, r, m
        self.size -= 1
        self.items[0] = self.items[self.size]
        while True:
            l = 2 * i + 1
            r = l + 1
            m = i
            if l < self.size and (self.items[l].key < self.items[m].key or (
                    self.items[l].key == self.items[m].key and self.items[l].node < self.items[m].node)):
                m = l
            if r < self.size and (self.items[r].key < self.items[m].key or (
                    self.items[r].key == self.items[m].key and self.items[r].node < self.items[m].node)):
                m = r
            if m == i:
                break
            tmp = self.items[m]
            self.items[m] = self.items[i]
            self.items[i] = tmp
            i = m
        return top


cdef class Matcher:
    """Exact MWPM of defect sets (boundary allowed) on one graph with nonnegative weights."""

    cdef int num_nodes, boundary
    cdef int[::1] indptr, adj_node, adj_edge, eu, ev
    cdef double[::1] weights
    cdef double[::1] dist_b
    cdef int[::1] parent_b
    cdef double[::1] dist
    cdef int[::1] parent
    cdef int[::1] seen
    cdef int stamp
    cdef _Heap heap

    def __init__(self, indptr, adj_node, adj_edge, eu, ev, weights, int boundary):
        cdef Py_ssize_t e
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int32)
        self.adj_node = np.ascontiguousarray(adj_node, dtype=np.int32)
        self.adj_edge = np.ascontiguousarray(adj_edge, dtype=np.int32)
        self.eu = np.ascontiguousarray(eu, dtype=np.int32)
        self.ev = np.ascontiguousarray(ev, dtype=np.int32)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        for e in range(self.weights.shape[0]):
            if self.weights[e] < 0:
                raise ValueError("negative edge weight")
        self.num_nodes = self.indptr.shape[0] - 1
        self.boundary = boundary
        self.dist_b = np.full(self.num_nodes, INFINITY)
        self.parent_b = np.full(self.num_nodes, -1, dtype=np.int32)
        self.dist = np.full(self.num_nodes, INFINITY)
        self.parent = np.full(self.num_nodes, -1, dtype=np.int32)
        self.seen = np.zeros(self.num_nodes, dtype=np.int32)
        self.stamp = 0
        self.heap = _Heap(64)
        self._boundary_tree()

    cdef void _boundary_tree(self):
        cdef HeapItem it
        cdef int v, w, slot, e
        cdef double nd
        self.heap.clear()
        self.dist_b[self.boundary] = 0.0
        self.heap.push(0.0, self.boundary)
        while self.heap.size > 0:
            it = self.heap.pop()
            v = it.node
            if it.key > self.dist_b[v]:
                continue
            for slot in range(self.indptr[v], self.indptr[v + 1]):
                w = self.adj_node[slot]
                e = self.adj_edge[slot]
                nd = it.key + self.weights[e]
                if nd < self.dist_b[w]:
                    self.dist_b[w] = nd
                    self.parent_b[w] = e
                    self.heap.push(nd, w)

    def boundary_distance(self, int v):
        return self.dist_b[v]

    cdef list _walk(self, int[::1] parent, int start):
        cdef list out = []
        cdef int v = start
        cdef int e
        while parent[v] != -1:
            e = parent[v]
            out.append(e)
            if self.ev[e] == v:
                v = self.eu[e]
            else:
                v = self.ev[e]
        return out

    def match(self, defects):
        """Return ``(total_weight, edges, pairs)`` as in the pure-Python backend."""
        cdef int k = len(defects)
        cdef int i, j, s, t, v, w, slot, e, m, nd_pairs
        cdef double stop, max_db, nd, total
        cdef HeapItem it
        if k == 0:
            return 0.0, [], []
        cdef int[::1] dfx = np.ascontiguousarray(defects, dtype=np.int32)
        cdef double[::1] db = np.empty(k)
        index_of = np.full(self.num_nodes, -1, dtype=np.int32)
        cdef int[::1] idx = index_of
        max_db = -1.0
        for i in range(k):
            db[i] = self.dist_b[dfx[i]]
            idx[dfx[i]] = i
            if db[i] < INFINITY and db[i] > max_db:
                max_db = db[i]
        if max_db < 0:
            max_db = INFINITY

        du = []
        dv = []
        dw = []
        for i in range(k):
            s = dfx[i]
            stop = db[i] + max_db
            self.stamp += 1
            self.heap.clear()
            self.dist[s] = 0.0
            self.parent[s] = -1
            self.seen[s] = self.stamp
            self.heap.push(0.0, s)
            while self.heap.size > 0:
                it = self.heap.pop()
                v = it.node
                if it.key > self.dist[v]:
                    continue
                if it.key > stop:
                    break
                if it.key >= db[i] + self.dist_b[v]:
                    continue
                j = idx[v]
                if j > i and it.key < db[i] + db[j]:
                    du.append(i)
                    dv.append(j)
                    dw.append(it.key)
                if v == self.boundary:
                    continue
                for slot in range(self.indptr[v], self.indptr[v + 1]):
                    w = self.adj_node[slot]
                    e = self.adj_edge[slot]
                    nd = it.key + self.weights[e]
                    # nodes past the stop radius or the lens would be dropped when popped
                    if nd > stop or nd >= db[i] + self.dist_b[w]:
                        continue
                    if self.seen[w] != self.stamp or nd < self.dist[w]:
                        self.seen[w] = self.stamp
                        self.dist[w] = nd
                        self.parent[w] = e
                        self.heap.push(nd, w)
        order = sorted(range(len(du)), key=lambda m: (du[m], dv[m]))
        du = [du[m] for m in order]
        dv = [dv[m] for m in order]
        dw = [dw[m] for m in order]
        partner = _solve_derived(k, du, dv, dw, list(db))

        total = 0.0
        edges = []
        pairs = []
        for i in range(k):
            j = partner[i]
            if j == -1:
                path = self._walk(self.parent_b, dfx[i])
                pairs.append((dfx[i], -1))
            elif i < j:
                path = self._path_between(dfx[i], dfx[j], db[i])
                pairs.append((dfx[i], dfx[j]))
            else:
                continue
            for e in path:
                total += self.weights[e]
            edges.extend(path)
        return total, edges, pairs

    cdef list _path_between(self, int s, int t, double base):
        """Rerun the search from ``s`` until ``t`` is settled; same tie-breaks as ``match``."""
        cdef HeapItem it
        cdef int v, w, slot, e
        cdef double nd
        self.stamp += 1
        self.heap.clear()
        self.dist[s] = 0.0
        self.parent[s] = -1
        self.seen[s] = self.stamp
        self.heap.push(0.0, s)
        while self.heap.size > 0:
            it = self.heap.pop()
            v = it.node
            if it.key > self.dist[v]:
                continue
            if v == t:
                break
            if v == self.boundary or it.key >= base + self.dist_b[v]:
                continue
            for slot in range(self.indptr[v], self.indptr[v + 1]):
                w = self.adj_node[slot]
                e = self.adj_edge[slot]
                nd = it.key + self.weights[e]
                if w != t and nd >= base + self.dist_b[w]:
                    continue
                if self.seen[w] != self.stamp or nd < self.dist[w]:
                    self.seen[w] = self.stamp
                    self.dist[w] = nd
                    self.parent[w] = e
                    self.heap.push(nd, w)
        return self._walk(self.parent, t)
