"""Pure-Python Earley kernel; same contract as the compiled one.

The grammar arrives integer-encoded (see ``earley.CompiledGrammar``):
dotted items are numbered ``d``; ``dsym[d]`` is the symbol after the dot
(nonterminal ids >= 0, terminal ``t`` as ``-(t+1)``, ``END`` when the dot
is at the end) and ``drule[d]`` its rule.  Nullable nonterminals are
handled Aycock-Horspool style by advancing over them at prediction time.
"""

END = -(1 << 30)


def earley(lhs, ritem, dsym, drule, nt_rules, term, nullable, start, data,
           want_chart):
    n = len(data)
    sets = [[] for _ in range(n + 1)]
    seen = [set() for _ in range(n + 1)]
    chart = [[] for _ in range(n + 1)] if want_chart else None

    def add(j, d, o):
        key = (d, o)
        s = seen[j]
        if key not in s:
            s.add(key)
            sets[j].append(key)

    for r in nt_rules[start]:
        add(0, ritem[r], 0)
    furthest = 0
    for j in range(n + 1):
        items = sets[j]
        if not items:
            break
        furthest = j
        c = data[j] if j < n else -1
        k = 0
        while k < len(items):
            d, o = items[k]
            k += 1
            sym = dsym[d]
            if sym == END:
                r = drule[d]
                b = lhs[r]
                if chart is not None:
                    chart[j].append((r, o))
                for d2, o2 in sets[o]:
                    if dsym[d2] == b:
                        add(j, d2 + 1, o2)
            elif sym >= 0:
                for r in nt_rules[sym]:
                    add(j, ritem[r], j)
                if nullable[sym]:
                    add(j, d + 1, o)
            elif c >= 0 and term[(-sym - 1) * 256 + c]:
                add(j + 1, d + 1, o)
    ok = False
    for d, o in sets[n]:
        if o == 0 and dsym[d] == END and lhs[drule[d]] == start:
            ok = True
            break
    return ok, furthest, chart
