"""Process terms, global definitions, and the syntactic operations on them.

Channels carry a unique id so that binder instances stay distinct under
rewriting; alpha-equivalence is checked structurally through a binder
correspondence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .types import SessionType


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ChannelName:
    name: str
    uid: int

    def __repr__(self) -> str:
        return f"{self.name}#{self.uid}"


_uid_counter = itertools.count(1)


def fresh(name: str) -> ChannelName:
    """A channel with a globally fresh unique id."""
    return ChannelName(name, next(_uid_counter))


@dataclass(frozen=True)
class Process:
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Call(Process):
    name: str
    args: tuple[ChannelName, ...]


@dataclass(frozen=True)
class Fail(Process):
    chan: ChannelName


@dataclass(frozen=True)
class Close(Process):
    chan: ChannelName


@dataclass(frozen=True)
class Wait(Process):
    chan: ChannelName
    body: Process


@dataclass(frozen=True)
class Fork(Process):
    """send x(y){P}; Q -- emits a fresh session y over x; y is bound in P only."""

    chan: ChannelName
    payload: ChannelName
    payload_body: Process
    cont: Process


@dataclass(frozen=True)
class Join(Process):
    """recv x(y); P -- receives a session y over x; y is bound in P."""

    chan: ChannelName
    payload: ChannelName
    body: Process


@dataclass(frozen=True)
class Select(Process):
    chan: ChannelName
    tag: int  # 1 or 2
    body: Process


@dataclass(frozen=True)
class Case(Process):
    chan: ChannelName
    left: Process
    right: Process


@dataclass(frozen=True)
class Server(Process):
    """server x(y){P} idle {Q} -- accepts connections on x; y bound in P."""

    chan: ChannelName
    session: ChannelName
    accept: Process
    idle: Process


@dataclass(frozen=True)
class Cons(Process):
    """client x(y){P}; Q -- a client at the head of the pool Q; y bound in P only."""

    chan: ChannelName
    session: ChannelName
    client: Process
    pool: Process


@dataclass(frozen=True)
class Nil(Process):
    chan: ChannelName


@dataclass(frozen=True)
class Cut(Process):
    """new x : T { P | Q } -- x bound in both sides; P uses x at T, Q at dual(T)."""

    chan: ChannelName
    anno: SessionType
    left: Process
    right: Process


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple[tuple[ChannelName, SessionType], ...]
    body: Process

    @property
    def param_names(self) -> tuple[ChannelName, ...]:
        return tuple(c for c, _ in self.params)

    @property
    def param_types(self) -> tuple[SessionType, ...]:
        return tuple(t for _, t in self.params)


@dataclass
class Program:
    defs: dict[str, Definition]
    main: Definition | None = None

    def all_definitions(self) -> Iterator[Definition]:
        yield from self.defs.values()
        if self.main is not None:
            yield self.main


def free_names(p: Process) -> frozenset[ChannelName]:
    match p:
        case Call(_, args):
            return frozenset(args)
        case Fail(x) | Close(x) | Nil(x):
            return frozenset((x,))
        case Wait(x, body):
            return free_names(body) | {x}
        case Fork(x, y, pb, cont):
            return (free_names(pb) - {y}) | free_names(cont) | {x}
        case Join(x, y, body):
            return (free_names(body) - {y}) | {x}
        case Select(x, _, body):
            return free_names(body) | {x}
        case Case(x, l, r):
            return free_names(l) | free_names(r) | {x}
        case Server(x, y, acc, idle):
            return (free_names(acc) - {y}) | free_names(idle) | {x}
        case Cons(x, y, client, pool):
            return (free_names(client) - {y}) | free_names(pool) | {x}
        case Cut(x, _, l, r):
            return (free_names(l) | free_names(r)) - {x}
    raise TypeError(f"not a process: {p!r}")


def rename(p: Process, mapping: dict[ChannelName, ChannelName], *, refresh: bool = False) -> Process:
    """Capture-avoiding renaming of free channels.

    With refresh=True every binder gets a fresh unique id, which keeps binder
    ids distinct when a definition body is inlined more than once.
    """

    def ren(c: ChannelName, m: dict[ChannelName, ChannelName]) -> ChannelName:
        return m.get(c, c)

    def under(binder: ChannelName, m: dict[ChannelName, ChannelName]) -> tuple[ChannelName, dict[ChannelName, ChannelName]]:
        m = {k: v for k, v in m.items() if k != binder}
        if refresh or any(v == binder for v in m.values()):
            nb = fresh(binder.name)
            m[binder] = nb
            return nb, m
        return binder, m

    def go(p: Process, m: dict[ChannelName, ChannelName]) -> Process:
        match p:
            case Call(name, args):
                return Call(name, tuple(ren(a, m) for a in args), span=p.span)
            case Fail(x):
                return Fail(ren(x, m), span=p.span)
            case Close(x):
                return Close(ren(x, m), span=p.span)
            case Nil(x):
                return Nil(ren(x, m), span=p.span)
            case Wait(x, body):
                return Wait(ren(x, m), go(body, m), span=p.span)
            case Fork(x, y, pb, cont):
                ny, my = under(y, m)
                return Fork(ren(x, m), ny, go(pb, my), go(cont, m), span=p.span)
            case Join(x, y, body):
                ny, my = under(y, m)
                return Join(ren(x, m), ny, go(body, my), span=p.span)
            case Select(x, tag, body):
                return Select(ren(x, m), tag, go(body, m), span=p.span)
            case Case(x, l, r):
                return Case(ren(x, m), go(l, m), go(r, m), span=p.span)
            case Server(x, y, acc, idle):
                ny, my = under(y, m)
                return Server(ren(x, m), ny, go(acc, my), go(idle, m), span=p.span)
            case Cons(x, y, client, pool):
                ny, my = under(y, m)
                return Cons(ren(x, m), ny, go(client, my), go(pool, m), span=p.span)
            case Cut(x, anno, l, r):
                nx, mx = under(x, m)
                return Cut(nx, anno, go(l, mx), go(r, mx), span=p.span)
        raise TypeError(f"not a process: {p!r}")

    return go(p, dict(mapping))


def instantiate(defn: Definition, args: tuple[ChannelName, ...]) -> Process:
    """The body of defn with parameters replaced by args and all binders refreshed."""
    if len(args) != len(defn.params):
        raise ValueError(f"{defn.name} expects {len(defn.params)} arguments, got {len(args)}")
    mapping = dict(zip(defn.param_names, args))
    return rename(defn.body, mapping, refresh=True)


def alpha_equal(p: Process, q: Process, free_map: dict[ChannelName, ChannelName] | None = None) -> bool:
    """Structural equality up to renaming of bound channels.

    Free channels must correspond via free_map; by default they are matched
    by display name, which is what the pretty-printer/parser round trip
    preserves.
    """

    def chan_eq(a: ChannelName, b: ChannelName, env: dict[ChannelName, ChannelName]) -> bool:
        if a in env:
            return env[a] == b
        if free_map is not None:
            return free_map.get(a, a) == b
        return a.name == b.name

    def go(p: Process, q: Process, env: dict[ChannelName, ChannelName]) -> bool:
        if type(p) is not type(q):
            return False
        match p, q:
            case Call(n1, a1), Call(n2, a2):
                return n1 == n2 and len(a1) == len(a2) and all(chan_eq(a, b, env) for a, b in zip(a1, a2))
            case (Fail(x1), Fail(x2)) | (Close(x1), Close(x2)) | (Nil(x1), Nil(x2)):
                return chan_eq(x1, x2, env)
            case Wait(x1, b1), Wait(x2, b2):
                return chan_eq(x1, x2, env) and go(b1, b2, env)
            case Fork(x1, y1, pb1, c1), Fork(x2, y2, pb2, c2):
                return (chan_eq(x1, x2, env)
                        and go(pb1, pb2, {**env, y1: y2})
                        and go(c1, c2, env))
            case Join(x1, y1, b1), Join(x2, y2, b2):
                return chan_eq(x1, x2, env) and go(b1, b2, {**env, y1: y2})
            case Select(x1, t1, b1), Select(x2, t2, b2):
                return t1 == t2 and chan_eq(x1, x2, env) and go(b1, b2, env)
            case Case(x1, l1, r1), Case(x2, l2, r2):
                return chan_eq(x1, x2, env) and go(l1, l2, env) and go(r1, r2, env)
            case Server(x1, y1, a1, i1), Server(x2, y2, a2, i2):
                return (chan_eq(x1, x2, env)
                        and go(a1, a2, {**env, y1: y2})
                        and go(i1, i2, env))
            case Cons(x1, y1, c1, t1), Cons(x2, y2, c2, t2):
                return (chan_eq(x1, x2, env)
                        and go(c1, c2, {**env, y1: y2})
                        and go(t1, t2, env))
            case Cut(x1, an1, l1, r1), Cut(x2, an2, l2, r2):
                env2 = {**env, x1: x2}
                return an1 == an2 and go(l1, l2, env2) and go(r1, r2, env2)
        return False

    return go(p, q, {})


class DivergentUnfolding(Exception):
    """Raised when a program contains an unguarded cycle of invocations."""


def _def_call_depth(prog: Program) -> dict[str, int | None]:
    """Call depth of each definition body; None marks an unguarded call cycle."""
    depths: dict[str, int | None] = {}
    in_progress: set[str] = set()

    def of_process(p: Process) -> int | None:
        match p:
            case Call(name, _):
                d = of_def(name)
                return None if d is None else 1 + d
            case Cut(_, _, l, r):
                dl, dr = of_process(l), of_process(r)
                if dl is None or dr is None:
                    return None
                return 1 + max(dl, dr)
        return 0

    def of_def(name: str) -> int | None:
        if name in depths:
            return depths[name]
        if name in in_progress:
            return None
        if name not in prog.defs:
            raise KeyError(f"undefined process name: {name}")
        in_progress.add(name)
        d = of_process(prog.defs[name].body)
        in_progress.discard(name)
        depths[name] = d
        return d

    for name in prog.defs:
        of_def(name)
    return depths


def call_depth(p: Process, prog: Program) -> int | None:
    """Depth of unguarded unfolding needed below p, or None if it diverges.

    Invocations add one plus the depth of their body, cuts add one plus the
    max of their sides, and every guard resets to zero.
    """
    depths = _def_call_depth(prog)

    def go(p: Process) -> int | None:
        match p:
            case Call(name, _):
                if name not in prog.defs:
                    raise KeyError(f"undefined process name: {name}")
                d = depths[name]
                return None if d is None else 1 + d
            case Cut(_, _, l, r):
                dl, dr = go(l), go(r)
                if dl is None or dr is None:
                    return None
                return 1 + max(dl, dr)
        return 0

    return go(p)


def unfold(p: Process, prog: Program) -> Process:
    """Expand invocations until none is unguarded (reachable through cuts only)."""
    if call_depth(p, prog) is None:
        raise DivergentUnfolding("unguarded call cycle; unfolding would not terminate")

    def go(p: Process) -> Process:
        match p:
            case Call(name, args):
                return go(instantiate(prog.defs[name], args))
            case Cut(x, anno, l, r):
                return Cut(x, anno, go(l), go(r), span=p.span)
        return p

    return go(p)


def threads(p: Process) -> int:
    """Number of unguarded guards: cuts add their sides, everything else is one."""
    if isinstance(p, Cut):
        return threads(p.left) + threads(p.right)
    return 1


def channels(p: Process) -> int:
    """Number of unguarded restrictions."""
    if isinstance(p, Cut):
        return 1 + channels(p.left) + channels(p.right)
    return 0


def subject(p: Process) -> ChannelName | None:
    """The channel a guard acts on; None for cuts and invocations."""
    match p:
        case Fail(x) | Close(x) | Nil(x):
            return x
        case Wait(x, _) | Join(x, _, _) | Select(x, _, _) | Case(x, _, _):
            return x
        case Fork(x, _, _, _) | Server(x, _, _, _) | Cons(x, _, _, _):
            return x
    return None


def rebuild(p: Process, children: tuple[Process, ...]) -> Process:
    """p with its immediate process children replaced, preserving other fields."""
    match p:
        case Wait(x, _):
            (b,) = children
            return Wait(x, b, span=p.span)
        case Fork(x, y, _, _):
            pb, c = children
            return Fork(x, y, pb, c, span=p.span)
        case Join(x, y, _):
            (b,) = children
            return Join(x, y, b, span=p.span)
        case Select(x, t, _):
            (b,) = children
            return Select(x, t, b, span=p.span)
        case Case(x, _, _):
            l, r = children
            return Case(x, l, r, span=p.span)
        case Server(x, y, _, _):
            a, i = children
            return Server(x, y, a, i, span=p.span)
        case Cons(x, y, _, _):
            c, t = children
            return Cons(x, y, c, t, span=p.span)
        case Cut(x, anno, _, _):
            l, r = children
            return Cut(x, anno, l, r, span=p.span)
    if children:
        raise ValueError(f"{type(p).__name__} has no process children")
    return p


def process_children(p: Process) -> tuple[Process, ...]:
    match p:
        case Wait(_, b) | Join(_, _, b) | Select(_, _, b):
            return (b,)
        case Fork(_, _, pb, c):
            return (pb, c)
        case Case(_, l, r):
            return (l, r)
        case Server(_, _, a, i):
            return (a, i)
        case Cons(_, _, c, t):
            return (c, t)
        case Cut(_, _, l, r):
            return (l, r)
    return ()
