"""Exact maximum clique on small graphs with Python-int bitsets.

Vertices are 0..n-1 and ``adj[v]`` is the bitmask of v's neighbours.  Bounds
come from greedy sequential colouring: a set coloured with k colours holds
no clique larger than k.
"""

from __future__ import annotations

from dataclasses import dataclass


class _NodeBudget(Exception):
    pass


@dataclass
class CliqueResult:
    vertices: tuple[int, ...]
    optimal: bool
    nodes: int


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _color_order(adj: list[int], P: int) -> list[tuple[int, int]]:
    """Greedy colouring of P; returns (vertex, colour) with colours non-decreasing."""
    order = []
    color = 0
    uncolored = P
    while uncolored:
        color += 1
        q = uncolored
        while q:
            low = q & -q
            v = low.bit_length() - 1
            q &= ~adj[v] & ~low
            uncolored &= ~low
            order.append((v, color))
    return order


def max_clique_size(adj: list[int], P: int, node_limit: int | None = None) -> tuple[int, int, bool]:
    """Size and bitmask of a maximum clique within P (colour-ordered branch and bound)."""
    best_size = 0
    best_mask = 0
    nodes = 0

    def expand(R: int, size: int, P: int):
        nonlocal best_size, best_mask, nodes
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            raise _NodeBudget
        order = _color_order(adj, P)
        for v, color in reversed(order):
            if size + color <= best_size:
                return
            bit = 1 << v
            NP = P & adj[v]
            if NP:
                expand(R | bit, size + 1, NP)
            elif size + 1 > best_size:
                best_size, best_mask = size + 1, R | bit
            P &= ~bit

    optimal = True
    try:
        if P:
            expand(0, 0, P)
    except _NodeBudget:
        optimal = False
    return best_size, best_mask, optimal


def _suffix_bounds(adj: list[int], verts: list[int]) -> dict[int, int]:
    """For each v, a colouring bound on {u in verts : u >= v} (verts ascending)."""
    classes: list[int] = []
    bound = {}
    for v in reversed(verts):
        nbrs = adj[v]
        for i, cls in enumerate(classes):
            if not cls & nbrs:
                classes[i] = cls | (1 << v)
                break
        else:
            classes.append(1 << v)
        bound[v] = len(classes)
    return bound


def lexicographic_clique(adj: list[int], P: int, size: int, node_limit: int | None = None) -> tuple[int, ...] | None:
    """Lexicographically smallest clique of exactly ``size`` vertices within P, or None.

    Depth-first search including vertices in ascending order visits cliques in
    lexicographic order of their sorted vertex tuples, so the first one found
    is the smallest.
    """
    nodes = 0

    def rec(P: int, need: int) -> list[int] | None:
        nonlocal nodes
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            raise _NodeBudget
        if need == 0:
            return []
        verts = list(_bits(P))
        if len(verts) < need:
            return None
        bound = _suffix_bounds(adj, verts)
        for v in verts:
            if bound[v] < need:
                return None
            above = ~((1 << (v + 1)) - 1)
            sub = rec(P & adj[v] & above, need - 1)
            if sub is not None:
                return [v] + sub
        return None

    found = rec(P, size)
    return None if found is None else tuple(found)


def maximum_clique(adj: list[int], node_limit: int | None = 2_000_000) -> CliqueResult:
    """Lexicographically smallest maximum clique.

    Vertices adjacent to every other vertex belong to every maximum clique and
    are set aside before the search.
    """
    n = len(adj)
    full = (1 << n) - 1
    universal = 0
    for v in range(n):
        if adj[v] | (1 << v) == full:
            universal |= 1 << v
    rest = full & ~universal
    sub_adj = [a & rest for a in adj]
    size, mask, optimal = max_clique_size(sub_adj, rest, node_limit)
    chosen = tuple(_bits(mask))
    if optimal and size:
        try:
            lex = lexicographic_clique(sub_adj, rest, size, node_limit)
        except _NodeBudget:
            lex = None
        if lex is not None:
            chosen = lex
    vertices = tuple(sorted(chosen + tuple(_bits(universal))))
    return CliqueResult(vertices, optimal, 0)
