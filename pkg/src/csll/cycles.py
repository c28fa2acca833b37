"""Cycle analysis over small directed multigraphs.

Works at the edge level (parallel edges stay distinct) because both the
typing-derivation checker and the proof checker thread per-edge channel or
occurrence correspondences around cycles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class GEdge:
    src: int
    tgt: int
    key: int  # index into the caller's edge payload table


def strongly_connected_components(nodes: Iterable[int], edges: list[GEdge]) -> list[set[int]]:
    """Tarjan's algorithm, iterative."""
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for e in edges:
        adj[e.src].append(e.tgt)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    sccs: list[set[int]] = []
    counter = [0]

    for root in adj:
        if root in index:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter[0]
                counter[0] += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            succs = adj[v]
            while pi < len(succs):
                w = succs[pi]
                pi += 1
                if w not in index:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                sccs.append(comp)
            work.pop()
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return sccs


def simple_cycles(scc: set[int], edges: list[GEdge], cap: int = 5000) -> tuple[list[list[GEdge]], bool]:
    """All node-simple edge cycles within one SCC.

    Returns (cycles, truncated); truncated is set when the cap stops the
    enumeration early.
    """
    out: dict[int, list[GEdge]] = {n: [] for n in scc}
    for e in edges:
        if e.src in scc and e.tgt in scc:
            out[e.src].append(e)
    cycles: list[list[GEdge]] = []
    truncated = False
    order = sorted(scc)
    for idx, start in enumerate(order):
        allowed = set(order[idx:])

        def dfs(u: int, path: list[GEdge], visited: set[int]) -> bool:
            nonlocal truncated
            for e in out.get(u, ()):  # noqa: B023 - bound per iteration on purpose
                if len(cycles) >= cap:
                    truncated = True
                    return False
                if e.tgt == start:
                    cycles.append(path + [e])
                elif e.tgt in allowed and e.tgt not in visited:
                    if not dfs(e.tgt, path + [e], visited | {e.tgt}):
                        return False
            return True

        if not dfs(start, [], {start}):
            break
    return cycles, truncated


def walk_nodes(walk: list[GEdge]) -> list[int]:
    return [e.src for e in walk]


def rotate_walk(walk: list[GEdge], node: int) -> list[GEdge]:
    for i, e in enumerate(walk):
        if e.src == node:
            return walk[i:] + walk[:i]
    raise ValueError("node not on walk")


def compose_walks(w1: list[GEdge], w2: list[GEdge]) -> list[GEdge] | None:
    """Concatenate two cyclic walks at a shared node, or None if disjoint."""
    nodes2 = set(walk_nodes(w2))
    for n in walk_nodes(w1):
        if n in nodes2:
            return rotate_walk(w1, n) + rotate_walk(w2, n)
    return None


def composite_walks(cycles: list[list[GEdge]], max_len: int, cap: int = 2000) -> tuple[list[list[GEdge]], bool]:
    """Cyclic walks made of up to max_len simple cycles glued at shared nodes."""
    walks: list[list[GEdge]] = []
    truncated = False
    frontier: list[list[GEdge]] = list(cycles)
    for _ in range(max_len - 1):
        nxt: list[list[GEdge]] = []
        for w in frontier:
            for c in cycles:
                combined = compose_walks(w, c)
                if combined is None:
                    continue
                if len(walks) + len(nxt) >= cap:
                    truncated = True
                    return walks + nxt, truncated
                nxt.append(combined)
        walks.extend(nxt)
        frontier = nxt
    return walks, truncated
