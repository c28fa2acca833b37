"""Seeded random generation of well-typed programs.

Generation is goal-directed over the typing rules: a move is only taken
when a completability oracle confirms every premise context can still be
finished.  While fuel lasts, moves are sampled; once it runs out, the
oracle's memoized witness moves drive the context to completion, so
generation always terminates.

Two tiers: plain finite processes (multiplicative/additive fragment), and
client/server systems wrapping a recursive one-connection-at-a-time server
with a generated pool of finite clients.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations

from . import types as ty
from .process import (
    Call, Case, ChannelName, Close, Cons, Cut, Definition, Fail, Fork, Join,
    Nil, Process, Program, Select, Server, Wait, fresh,
)

_FRESH_NAMES = "uvwstpq"


def _tkey(t: ty.SessionType) -> tuple:
    return (type(t).__name__,) + tuple(_tkey(c) for c in ty.children(t))


def _ms(types: tuple[ty.SessionType, ...]) -> tuple[ty.SessionType, ...]:
    return tuple(sorted(types, key=_tkey))


@dataclass(frozen=True)
class _Move:
    kind: str          # close done fail wait join select case fork cons
    index: int = 0     # position of the acted-on type in the sorted multiset
    tag: int = 0       # select branch
    mask: tuple[int, ...] = ()  # positions sent to the first premise of a split


class Oracle:
    """Decides whether a multiset of types admits a closed process, and
    remembers one witness move per completable multiset."""

    def __init__(self) -> None:
        self.memo: dict[tuple, _Move | None] = {}

    def completable(self, types: tuple[ty.SessionType, ...]) -> bool:
        return self.witness(types) is not None

    def witness(self, types: tuple[ty.SessionType, ...]) -> _Move | None:
        ms = _ms(types)
        key = tuple(_tkey(t) for t in ms)
        if key in self.memo:
            return self.memo[key]
        self.memo[key] = None  # in-progress: treat self-dependency as failure
        move = self._search(ms)
        self.memo[key] = move
        return move

    def _search(self, ms: tuple[ty.SessionType, ...]) -> _Move | None:
        if not ms:
            return None
        if len(ms) == 1:
            if isinstance(ms[0], ty.One):
                return _Move("close")
            if isinstance(ms[0], ty.Client):
                return _Move("done")
        for i, t in enumerate(ms):
            if isinstance(t, ty.Top):
                return _Move("fail", i)
        rest_of = lambda i: ms[:i] + ms[i + 1:]
        for i, t in enumerate(ms):
            match t:
                case ty.Bot():
                    if self.completable(rest_of(i)):
                        return _Move("wait", i)
                case ty.Par(l, r):
                    if self.completable(rest_of(i) + (l, r)):
                        return _Move("join", i)
                case ty.Plus(l, r):
                    if self.completable(rest_of(i) + (l,)):
                        return _Move("select", i, tag=1)
                    if self.completable(rest_of(i) + (r,)):
                        return _Move("select", i, tag=2)
                case ty.With(l, r):
                    if self.completable(rest_of(i) + (l,)) and self.completable(rest_of(i) + (r,)):
                        return _Move("case", i)
                case ty.Tensor(l, r):
                    got = self._split(rest_of(i), (l,), (r,))
                    if got is not None:
                        return _Move("fork", i, mask=got)
                case ty.Client(inner):
                    got = self._split(rest_of(i), (inner,), (t,))
                    if got is not None:
                        return _Move("cons", i, mask=got)
        return None

    def _split(self, rest: tuple[ty.SessionType, ...], extra_a: tuple, extra_b: tuple
               ) -> tuple[int, ...] | None:
        n = len(rest)
        for k in range(n + 1):
            for mask in combinations(range(n), k):
                a = tuple(rest[i] for i in mask)
                b = tuple(rest[i] for i in range(n) if i not in mask)
                if self.completable(a + extra_a) and self.completable(b + extra_b):
                    return mask
        return None


_CUT_ATOMS = (ty.ONE, ty.BOT)


def random_type(rng: random.Random, depth: int = 2, allow_shared: bool = False) -> ty.SessionType:
    """A random type; shared modalities only when requested."""
    if depth <= 1:
        return rng.choice(_CUT_ATOMS)
    ctors = ["atom", "tensor", "par", "plus", "with"]
    if allow_shared:
        ctors += ["client", "server"]
    match rng.choice(ctors):
        case "atom":
            return rng.choice(_CUT_ATOMS)
        case "tensor":
            return ty.Tensor(random_type(rng, depth - 1), random_type(rng, depth - 1))
        case "par":
            return ty.Par(random_type(rng, depth - 1), random_type(rng, depth - 1))
        case "plus":
            return ty.Plus(random_type(rng, depth - 1), random_type(rng, depth - 1))
        case "with":
            return ty.With(random_type(rng, depth - 1), random_type(rng, depth - 1))
        case "client":
            return ty.Client(random_type(rng, depth - 1))
        case "server":
            return ty.Server(random_type(rng, depth - 1))
    raise AssertionError


def random_any_type(rng: random.Random, depth: int = 3) -> ty.SessionType:
    """Arbitrary type tree over the full grammar (for structural properties)."""
    if depth <= 1:
        return rng.choice((ty.ONE, ty.BOT, ty.TOP, ty.ZERO))
    c = rng.randrange(10)
    if c < 4:
        return rng.choice((ty.ONE, ty.BOT, ty.TOP, ty.ZERO))
    if c < 6:
        ctor = rng.choice((ty.Server, ty.Client))
        return ctor(random_any_type(rng, depth - 1))
    ctor = rng.choice((ty.Tensor, ty.Par, ty.Plus, ty.With))
    return ctor(random_any_type(rng, depth - 1), random_any_type(rng, depth - 1))


class ProcessGen:
    def __init__(self, rng: random.Random, oracle: Oracle | None = None):
        self.rng = rng
        self.oracle = oracle or Oracle()
        self._name_i = 0

    def _fresh(self) -> ChannelName:
        self._name_i += 1
        return fresh(_FRESH_NAMES[self._name_i % len(_FRESH_NAMES)])

    def generate(self, ctx: dict[ChannelName, ty.SessionType], fuel: int) -> Process:
        """A random process well typed in ctx (which must be completable)."""
        ms_items = sorted(ctx.items(), key=lambda kv: (_tkey(kv[1]), kv[0].name, kv[0].uid))
        ms = tuple(t for _, t in ms_items)
        chans = [c for c, _ in ms_items]
        if fuel > 0:
            moves = self._candidates(ms)
            if len(ctx) <= 3 and self.rng.random() < 0.4:
                cut = self._try_cut(ctx, fuel)
                if cut is not None:
                    return cut
        else:
            w = self.oracle.witness(ms)
            assert w is not None, f"uncompletable context: {ms}"
            moves = [w]
        move = self.rng.choice(moves)
        return self._apply(move, chans, ms, ctx, fuel - 1)

    def _candidates(self, ms: tuple[ty.SessionType, ...]) -> list[_Move]:
        out: list[_Move] = []
        orc = self.oracle
        if len(ms) == 1 and isinstance(ms[0], ty.One):
            out.append(_Move("close"))
        if len(ms) == 1 and isinstance(ms[0], ty.Client):
            out.append(_Move("done"))
        rest_of = lambda i: ms[:i] + ms[i + 1:]
        for i, t in enumerate(ms):
            match t:
                case ty.Top():
                    out.append(_Move("fail", i))
                case ty.Bot():
                    if orc.completable(rest_of(i)):
                        out.append(_Move("wait", i))
                case ty.Par(_, _):
                    if orc.completable(rest_of(i) + (t.left, t.right)):
                        out.append(_Move("join", i))
                case ty.Plus(_, _):
                    for tag, side in ((1, t.left), (2, t.right)):
                        if orc.completable(rest_of(i) + (side,)):
                            out.append(_Move("select", i, tag=tag))
                case ty.With(_, _):
                    if orc.completable(rest_of(i) + (t.left,)) and orc.completable(rest_of(i) + (t.right,)):
                        out.append(_Move("case", i))
                case ty.Tensor(_, _):
                    mask = orc._split(rest_of(i), (t.left,), (t.right,))
                    if mask is not None:
                        out.append(_Move("fork", i, mask=mask))
                case ty.Client(inner):
                    mask = orc._split(rest_of(i), (inner,), (t,))
                    if mask is not None:
                        out.append(_Move("cons", i, mask=mask))
        if not out:
            w = self.oracle.witness(ms)
            assert w is not None, f"uncompletable context: {ms}"
            out.append(w)
        return out

    def _try_cut(self, ctx: dict[ChannelName, ty.SessionType], fuel: int) -> Process | None:
        rng = self.rng
        anno = random_type(rng, depth=rng.choice((1, 2)))
        items = list(ctx.items())
        rng.shuffle(items)
        k = rng.randrange(len(items) + 1)
        left = dict(items[:k])
        right = dict(items[k:])
        x = self._fresh()
        la = tuple(t for t in left.values()) + (anno,)
        ra = tuple(t for t in right.values()) + (ty.dual(anno),)
        if not (self.oracle.completable(la) and self.oracle.completable(ra)):
            return None
        lp = self.generate({**left, x: anno}, fuel - 1)
        rp = self.generate({**right, x: ty.dual(anno)}, fuel - 1)
        return Cut(x, anno, lp, rp)

    def _apply(self, m: _Move, chans: list[ChannelName], ms: tuple[ty.SessionType, ...],
               ctx: dict[ChannelName, ty.SessionType], fuel: int) -> Process:
        if m.kind == "close":
            return Close(chans[0])
        if m.kind == "done":
            return Nil(chans[0])
        c, t = chans[m.index], ms[m.index]
        rest_c = chans[:m.index] + chans[m.index + 1:]
        rest_t = ms[:m.index] + ms[m.index + 1:]
        rest_ctx = dict(zip(rest_c, rest_t))
        if m.kind == "fail":
            return Fail(c)
        if m.kind == "wait":
            return Wait(c, self.generate(rest_ctx, fuel))
        if m.kind == "join":
            y = self._fresh()
            return Join(c, y, self.generate({**rest_ctx, y: t.left, c: t.right}, fuel))
        if m.kind == "select":
            side = t.left if m.tag == 1 else t.right
            return Select(c, m.tag, self.generate({**rest_ctx, c: side}, fuel))
        if m.kind == "case":
            return Case(c,
                        self.generate({**rest_ctx, c: t.left}, fuel),
                        self.generate({**rest_ctx, c: t.right}, fuel))
        if m.kind == "fork":
            y = self._fresh()
            a_ctx = {rest_c[i]: rest_t[i] for i in m.mask}
            b_ctx = {rest_c[i]: rest_t[i] for i in range(len(rest_c)) if i not in m.mask}
            return Fork(c, y,
                        self.generate({**a_ctx, y: t.left}, fuel),
                        self.generate({**b_ctx, c: t.right}, fuel))
        if m.kind == "cons":
            y = self._fresh()
            a_ctx = {rest_c[i]: rest_t[i] for i in m.mask}
            b_ctx = {rest_c[i]: rest_t[i] for i in range(len(rest_c)) if i not in m.mask}
            return Cons(c, y,
                        self.generate({**a_ctx, y: t.inner}, fuel),
                        self.generate({**b_ctx, c: t}, fuel))
        raise AssertionError(f"unknown move {m.kind}")


def gen_finite_main(seed: int, fuel: int = 7) -> Program:
    """A definition-free program whose main is well typed at a single 1-channel."""
    rng = random.Random(seed)
    g = ProcessGen(rng)
    z = fresh("z")
    body = g.generate({z: ty.ONE}, fuel)
    return Program({}, Definition("main", ((z, ty.ONE),), body))


def gen_server_main(seed: int, fuel: int = 5, max_clients: int = 3) -> Program:
    """A racy client/server program: a recursive server draining a pool of
    generated finite clients, reporting completion on z."""
    rng = random.Random(seed)
    oracle = Oracle()
    g = ProcessGen(rng, oracle)
    while True:
        proto = random_type(rng, depth=rng.choice((1, 2)))
        if oracle.completable((proto,)) and oracle.completable((ty.dual(proto), ty.ONE)):
            break
    srv_type = ty.Server(ty.dual(proto))

    x, z = fresh("x"), fresh("z")
    y, w = fresh("y"), fresh("w")
    handler_body = g.generate({y: ty.dual(proto), w: ty.ONE}, fuel)
    accept = Cut(w, ty.ONE, handler_body, Wait(w, Call("Srv", (x, z))))
    srv = Definition("Srv", ((x, srv_type), (z, ty.ONE)),
                     Server(x, y, accept, Close(z)))

    xm, zm = fresh("x"), fresh("z")
    pool: Process = Nil(xm)
    for _ in range(rng.randint(1, max_clients)):
        yc = fresh("y")
        pool = Cons(xm, yc, g.generate({yc: proto}, fuel), pool)
    main_body = Cut(xm, ty.Client(proto), pool, Call("Srv", (xm, zm)))
    main = Definition("main", ((zm, ty.ONE),), main_body)
    return Program({"Srv": srv}, main)


def gen_program(seed: int) -> Program:
    """Mixed generator: mostly finite systems, some client/server systems."""
    if seed % 10 < 7:
        return gen_finite_main(seed)
    return gen_server_main(seed)
