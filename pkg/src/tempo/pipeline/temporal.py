"""Deterministic, model-free temporal edges between sibling-tier nodes.

Per new action: one ``follows`` edge to the action with the latest strictly
earlier start time; ``co_occurs`` edges pairwise across the same extraction
batch; ``overlaps`` edges to any recent action whose closed time range
intersects the new one. Overlap detection runs as a start-sorted sweep with
an active set rather than the quadratic scan the tests compare it against.
"""

from __future__ import annotations

import heapq
from typing import Iterable, NamedTuple

from ..graph.types import node_sort_key


class Interval(NamedTuple):
    id: str
    start: int
    end: int


class TemporalEdges(NamedTuple):
    follows: set[tuple[str, str]]    # directed: new -> immediately preceding
    co_occurs: set[tuple[str, str]]  # undirected, canonical (min, max) order
    overlaps: set[tuple[str, str]]   # undirected, canonical (min, max) order


def _canonical(a: str, b: str) -> tuple[str, str]:
    return (a, b) if node_sort_key(a) <= node_sort_key(b) else (b, a)


def compute_temporal_edges(new_actions: Iterable[Interval],
                           prior_actions: Iterable[Interval],
                           lookback_ms: int) -> TemporalEdges:
    """Pure function of the new batch and the prior action set."""
    new_list = sorted(new_actions, key=lambda iv: (iv.start, node_sort_key(iv.id)))
    prior_list = list(prior_actions)
    new_ids = {iv.id for iv in new_list}

    follows: set[tuple[str, str]] = set()
    co_occurs: set[tuple[str, str]] = set()
    overlaps: set[tuple[str, str]] = set()

    # follows: latest strictly-earlier start among all known actions
    everything = prior_list + new_list
    for action in new_list:
        best = None
        for other in everything:
            if other.id == action.id or other.start >= action.start:
                continue
            if best is None or (other.start, node_sort_key(other.id)) > (best.start, node_sort_key(best.id)):
                best = other
        if best is not None:
            follows.add((action.id, best.id))

    # co_occurs: all pairs extracted from the same buffer
    for i in range(len(new_list)):
        for j in range(i + 1, len(new_list)):
            co_occurs.add(_canonical(new_list[i].id, new_list[j].id))

    # overlaps: sweep over new + recent intervals, emit pairs touching a new action
    if new_list:
        horizon = min(iv.start for iv in new_list) - lookback_ms
        recent = [iv for iv in prior_list if iv.end >= horizon]
        sweep = sorted(recent + new_list, key=lambda iv: (iv.start, node_sort_key(iv.id)))
        active: list[tuple[int, str, bool]] = []  # (end, id, is_new) min-heap by end
        for iv in sweep:
            is_new = iv.id in new_ids
            while active and active[0][0] < iv.start:
                heapq.heappop(active)
            for end, other_id, other_new in active:
                if is_new or other_new:
                    overlaps.add(_canonical(iv.id, other_id))
            heapq.heappush(active, (iv.end, iv.id, is_new))

    return TemporalEdges(follows=follows, co_occurs=co_occurs, overlaps=overlaps)
