"""Pick one consuming access per input position.

The last access to a character is usually where the parser consumes it,
but parsers that evaluate while parsing re-read characters later on.
Backtracking on the longest non-decreasing subsequence of the last
accesses fixes those re-reads up.
"""
from __future__ import annotations

from dataclasses import dataclass


class ConsumptionDiverged(RuntimeError):
    pass


def _lis_indices(seq):
    """Indices of a longest non-decreasing subsequence of ``seq``.

    Ties go to the subsequence that starts earliest; after that each step
    takes the smallest value that still allows a longest completion.
    """
    n = len(seq)
    if n == 0:
        return []
    # best[i]: length of the longest non-decreasing run starting at i
    best = [1] * n
    for i in range(n - 2, -1, -1):
        vi = seq[i]
        b = 1
        for j in range(i + 1, n):
            if seq[j] >= vi and best[j] + 1 > b:
                b = best[j] + 1
        best[i] = b
    length = max(best)
    i = best.index(length)
    out = [i]
    need = length - 1
    while need:
        pick = None
        for j in range(i + 1, n):
            if best[j] == need and seq[j] >= seq[i]:
                if pick is None or seq[j] < seq[pick]:
                    pick = j
        out.append(pick)
        i = pick
        need -= 1
    return out


def longest_increasing_subsequence(seq):
    """Longest non-decreasing subsequence (duplicates allowed)."""
    return [seq[i] for i in _lis_indices(seq)]


@dataclass
class ConsumptionAssignment:
    orders: list
    contexts: list
    # positions whose list ran dry and had to inherit
    fallbacks: list

    def __len__(self):
        return len(self.orders)


def consume_orders(access_lists, max_rounds=None):
    """Run the backtracking loop on per-position access-order lists.

    ``access_lists`` is not modified. Returns ``(orders, fallback positions)``.
    """
    lists = [list(a) for a in access_lists]
    n = len(lists)
    if max_rounds is None:
        # each round pops one access; refills copy at most n lists of
        # bounded length, so this is far above any converging run
        max_rounds = 4 * (sum(len(a) for a in lists) + n) * (n + 1) + 16
    fallbacks = []
    for _ in range(max_rounds):
        result = []
        for pos in range(n):
            if not lists[pos]:
                lists[pos] = [0] if pos == 0 else list(lists[pos - 1])
                fallbacks.append(pos)
            result.append(lists[pos][-1])
        keep = _lis_indices(result)
        if len(keep) == n:
            return result, fallbacks
        kept = set(keep)
        outlier = next(i for i in range(n) if i not in kept)
        lists[outlier].pop()
    raise ConsumptionDiverged(f"no consistent assignment after {max_rounds} rounds")


def identify_input_consumptions(trace):
    """Consuming access order and its context for every trace position."""
    by_order = {}
    for p in trace.positions:
        for o, c in zip(p.access_orders, p.contexts):
            if o in by_order:
                raise ValueError(f"access order {o} recorded twice")
            by_order[o] = c
    orders, fallbacks = consume_orders([p.access_orders for p in trace.positions])
    contexts = []
    for pos, o in enumerate(orders):
        ctx = by_order.get(o)
        if ctx is None:
            # the synthetic [0] fallback at position 0
            ctx = trace.positions[0].contexts[0]
        contexts.append(ctx)
    return ConsumptionAssignment(orders, contexts, fallbacks)


def last_access_assignment(trace):
    """Baseline that trusts the final access; for comparison only."""
    return ConsumptionAssignment([p.access_orders[-1] for p in trace.positions],
                                 [p.contexts[-1] for p in trace.positions], [])
