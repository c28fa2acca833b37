"""Canonical forms for processes.

Two rewrites are applied: commutative siblings are ordered by a structural
key that is invariant under renaming of bound channels (cut sides, clients
within a pool on the same channel), and bound channels are then renumbered
in traversal order.  The result is a deterministic, idempotent normal form
used as state identity during exploration.  Invocations are never unfolded
here and cut nests are not reassociated, so the quotient is coarser than
full structural pre-congruence; exploration over-approximates accordingly.
"""

from __future__ import annotations

import itertools

from .process import (
    Call, Case, ChannelName, Close, Cons, Cut, Fail, Fork, Join, Nil,
    Process, Select, Server, Wait,
)
from .types import SessionType, children as type_children, dual


def _type_key(t: SessionType) -> tuple:
    return (type(t).__name__,) + tuple(_type_key(c) for c in type_children(t))


def _akey(p: Process, env: dict[ChannelName, int], depth: int) -> tuple:
    """Structural key; bound channels appear as binder levels, free ones by identity."""

    def ck(c: ChannelName) -> tuple:
        if c in env:
            return ("b", env[c])
        return ("f", c.name, c.uid)

    match p:
        case Call(name, args):
            return ("call", name, tuple(ck(a) for a in args))
        case Fail(x):
            return ("fail", ck(x))
        case Close(x):
            return ("close", ck(x))
        case Nil(x):
            return ("nil", ck(x))
        case Wait(x, body):
            return ("wait", ck(x), _akey(body, env, depth))
        case Select(x, tag, body):
            return ("select", ck(x), tag, _akey(body, env, depth))
        case Case(x, l, r):
            return ("case", ck(x), _akey(l, env, depth), _akey(r, env, depth))
        case Join(x, y, body):
            return ("join", ck(x), _akey(body, {**env, y: depth}, depth + 1))
        case Fork(x, y, pb, cont):
            return ("fork", ck(x), _akey(pb, {**env, y: depth}, depth + 1), _akey(cont, env, depth))
        case Server(x, y, acc, idle):
            return ("server", ck(x), _akey(acc, {**env, y: depth}, depth + 1), _akey(idle, env, depth))
        case Cons(x, y, client, pool):
            return ("cons", ck(x), _akey(client, {**env, y: depth}, depth + 1), _akey(pool, env, depth))
        case Cut(x, anno, l, r):
            env2 = {**env, x: depth}
            return ("cut", _type_key(anno), _akey(l, env2, depth + 1), _akey(r, env2, depth + 1))
    raise TypeError(f"not a process: {p!r}")


def _sort(p: Process, env: dict[ChannelName, int], depth: int) -> Process:
    match p:
        case Cut(x, anno, l, r):
            env2 = {**env, x: depth}
            ls = _sort(l, env2, depth + 1)
            rs = _sort(r, env2, depth + 1)
            if _akey(rs, env2, depth + 1) < _akey(ls, env2, depth + 1):
                # the annotation types the left side, so commuting dualizes it
                ls, rs, anno = rs, ls, dual(anno)
            return Cut(x, anno, ls, rs, span=p.span)
        case Cons(x, _, _, _):
            cells: list[tuple[ChannelName, Process]] = []
            node: Process = p
            while isinstance(node, Cons) and node.chan == x:
                cells.append((node.session, _sort(node.client, {**env, node.session: depth}, depth + 1)))
                node = node.pool
            end = _sort(node, env, depth)
            if len(cells) > 1:
                cells.sort(key=lambda cell: _akey(cell[1], {**env, cell[0]: depth}, depth + 1))
            out = end
            for y, body in reversed(cells):
                out = Cons(x, y, body, out, span=p.span)
            return out
        case Wait(x, body):
            return Wait(x, _sort(body, env, depth), span=p.span)
        case Select(x, tag, body):
            return Select(x, tag, _sort(body, env, depth), span=p.span)
        case Case(x, l, r):
            return Case(x, _sort(l, env, depth), _sort(r, env, depth), span=p.span)
        case Join(x, y, body):
            return Join(x, y, _sort(body, {**env, y: depth}, depth + 1), span=p.span)
        case Fork(x, y, pb, cont):
            return Fork(x, y, _sort(pb, {**env, y: depth}, depth + 1), _sort(cont, env, depth), span=p.span)
        case Server(x, y, acc, idle):
            return Server(x, y, _sort(acc, {**env, y: depth}, depth + 1), _sort(idle, env, depth), span=p.span)
    return p


def _renumber(p: Process) -> Process:
    counter = itertools.count(0)

    def bind(c: ChannelName, m: dict[ChannelName, ChannelName]) -> tuple[ChannelName, dict[ChannelName, ChannelName]]:
        nc = ChannelName("c", next(counter))
        return nc, {**m, c: nc}

    def ref(c: ChannelName, m: dict[ChannelName, ChannelName]) -> ChannelName:
        return m.get(c, c)

    def go(p: Process, m: dict[ChannelName, ChannelName]) -> Process:
        match p:
            case Call(name, args):
                return Call(name, tuple(ref(a, m) for a in args))
            case Fail(x):
                return Fail(ref(x, m))
            case Close(x):
                return Close(ref(x, m))
            case Nil(x):
                return Nil(ref(x, m))
            case Wait(x, body):
                return Wait(ref(x, m), go(body, m))
            case Select(x, tag, body):
                return Select(ref(x, m), tag, go(body, m))
            case Case(x, l, r):
                return Case(ref(x, m), go(l, m), go(r, m))
            case Join(x, y, body):
                ny, m2 = bind(y, m)
                return Join(ref(x, m), ny, go(body, m2))
            case Fork(x, y, pb, cont):
                ny, m2 = bind(y, m)
                return Fork(ref(x, m), ny, go(pb, m2), go(cont, m))
            case Server(x, y, acc, idle):
                ny, m2 = bind(y, m)
                return Server(ref(x, m), ny, go(acc, m2), go(idle, m))
            case Cons(x, y, client, pool):
                ny, m2 = bind(y, m)
                return Cons(ref(x, m), ny, go(client, m2), go(pool, m))
            case Cut(x, anno, l, r):
                nx, m2 = bind(x, m)
                return Cut(nx, anno, go(l, m2), go(r, m2))
        raise TypeError(f"not a process: {p!r}")

    return go(p, {})


def canonical_form(p: Process) -> Process:
    return _renumber(_sort(p, {}, 0))
