# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled Earley kernel; mirrors ``_earley_py.earley``."""
from libc.stdlib cimport calloc, free, malloc, realloc

cdef int END = -(1 << 30)


cdef struct ItemBuf:
    int *d
    int *o
    int n
    int cap


cdef int _push(ItemBuf *b, int d, int o) except -1:
    cdef int cap
    if b.n == b.cap:
        cap = b.cap * 2 if b.cap else 16
        b.d = <int *> realloc(b.d, cap * sizeof(int))
        b.o = <int *> realloc(b.o, cap * sizeof(int))
        if b.d == NULL or b.o == NULL:
            raise MemoryError()
        b.cap = cap
    b.d[b.n] = d
    b.o[b.n] = o
    b.n += 1
    return 0


def earley(lhs_, ritem_, dsym_, drule_, nt_rules, term_, nullable_, int start,
           data, bint want_chart):
    cdef const int[:] lhs = lhs_
    cdef const int[:] ritem = ritem_
    cdef const int[:] dsym = dsym_
    cdef const int[:] drule = drule_
    cdef const unsigned char[:] term = term_
    cdef const unsigned char[:] nullable = nullable_
    cdef const unsigned char[:] inp = data
    cdef int n = len(data)
    cdef int D = len(dsym_)
    cdef int n_nt = len(nt_rules)
    cdef int j, k, d, o, d2, o2, sym, r, b, c, q, i
    cdef int furthest = 0
    cdef bint ok = False
    cdef long key

    # flattened rule lists per nonterminal
    cdef int *nr_off = <int *> malloc((n_nt + 1) * sizeof(int))
    total = sum(len(x) for x in nt_rules)
    cdef int *nr = <int *> malloc((total + 1) * sizeof(int))
    cdef ItemBuf *sets = <ItemBuf *> calloc(n + 1, sizeof(ItemBuf))
    # seen[o * D + d] == j + 1  <=> item (d, o) is in set j; two planes
    # alternate between the current and the next set
    cdef int *mark0 = <int *> calloc(<size_t> D * (n + 1), sizeof(int))
    cdef int *mark1 = <int *> calloc(<size_t> D * (n + 1), sizeof(int))
    cdef int *mcur
    cdef int *mnext
    cdef int *mtmp
    if nr_off == NULL or nr == NULL or sets == NULL or mark0 == NULL or mark1 == NULL:
        free(nr_off); free(nr); free(sets); free(mark0); free(mark1)
        raise MemoryError()
    chart = [[] for _ in range(n + 1)] if want_chart else None
    try:
        q = 0
        for i in range(n_nt):
            nr_off[i] = q
            for r in nt_rules[i]:
                nr[q] = r
                q += 1
        nr_off[n_nt] = q

        mcur = mark0
        mnext = mark1
        for k in range(nr_off[start], nr_off[start + 1]):
            d = ritem[nr[k]]
            if mcur[d] != 1:
                mcur[d] = 1
                _push(&sets[0], d, 0)

        for j in range(n + 1):
            if sets[j].n == 0:
                break
            furthest = j
            c = inp[j] if j < n else -1
            k = 0
            while k < sets[j].n:
                d = sets[j].d[k]
                o = sets[j].o[k]
                k += 1
                sym = dsym[d]
                if sym == END:
                    r = drule[d]
                    b = lhs[r]
                    if want_chart:
                        chart[j].append((r, o))
                    for i in range(sets[o].n):
                        d2 = sets[o].d[i]
                        if dsym[d2] == b:
                            o2 = sets[o].o[i]
                            key = <long> o2 * D + d2 + 1
                            if mcur[key] != j + 1:
                                mcur[key] = j + 1
                                _push(&sets[j], d2 + 1, o2)
                elif sym >= 0:
                    for i in range(nr_off[sym], nr_off[sym + 1]):
                        d2 = ritem[nr[i]]
                        key = <long> j * D + d2
                        if mcur[key] != j + 1:
                            mcur[key] = j + 1
                            _push(&sets[j], d2, j)
                    if nullable[sym]:
                        key = <long> o * D + d + 1
                        if mcur[key] != j + 1:
                            mcur[key] = j + 1
                            _push(&sets[j], d + 1, o)
                elif c >= 0 and term[(-sym - 1) * 256 + c]:
                    key = <long> o * D + d + 1
                    if mnext[key] != j + 2:
                        mnext[key] = j + 2
                        _push(&sets[j + 1], d + 1, o)
            mtmp = mcur
            mcur = mnext
            mnext = mtmp

        for i in range(sets[n].n):
            d = sets[n].d[i]
            if sets[n].o[i] == 0 and dsym[d] == END and lhs[drule[d]] == start:
                ok = True
                break
    finally:
        for j in range(n + 1):
            free(sets[j].d)
            free(sets[j].o)
        free(sets)
        free(nr_off)
        free(nr)
        free(mark0)
        free(mark1)
    return ok, furthest, chart
