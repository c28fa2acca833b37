"""Pretty-printer; parse(pretty(v)) is alpha-equivalent to v."""

from __future__ import annotations

from . import types as ty
from .parser import KEYWORDS
from .process import (
    Call, Case, ChannelName, Close, Cons, Cut, Definition, Fail, Fork, Join,
    Nil, Process, Program, Select, Server, Wait, free_names,
)

_ADD, _MULT, _PREFIX, _ATOM = 1, 2, 3, 4

_BIN = {ty.Plus: ("+", _ADD), ty.With: ("&", _ADD), ty.Tensor: ("*", _MULT), ty.Par: ("par", _MULT)}


def _type_level(t: ty.SessionType) -> int:
    if type(t) in _BIN:
        return _BIN[type(t)][1]
    if isinstance(t, (ty.Server, ty.Client)):
        return _PREFIX
    return _ATOM


def pretty_type(t: ty.SessionType) -> str:
    def render(t: ty.SessionType) -> str:
        match t:
            case ty.One():
                return "1"
            case ty.Bot():
                return "bot"
            case ty.Zero():
                return "0"
            case ty.Top():
                return "top"
            case ty.Server(inner):
                return "srv " + wrap(inner, _PREFIX, None)
            case ty.Client(inner):
                return "cli " + wrap(inner, _PREFIX, None)
        op, level = _BIN[type(t)]
        left = wrap(t.left, level + 1, None)
        right = wrap(t.right, level, op)
        return f"{left} {op} {right}"

    def wrap(t: ty.SessionType, min_level: int, same_op: str | None) -> str:
        level = _type_level(t)
        if level > min_level:
            return render(t)
        if level == min_level:
            # right operand of a right-associative chain: same operator only
            if type(t) in _BIN and _BIN[type(t)][0] == same_op:
                return render(t)
            if type(t) not in _BIN:
                return render(t)
        return "(" + render(t) + ")"

    return render(t)


class _Namer:
    """Scope-aware display names; disambiguates clashes with numeric suffixes."""

    def __init__(self, reserved: set[str] | None = None):
        self.display: dict[ChannelName, str] = {}
        self.taken: list[set[str]] = [set(KEYWORDS) | (reserved or set())]

    def seed(self, chans: list[ChannelName]) -> None:
        for c in sorted(chans, key=lambda c: (c.name, c.uid)):
            self.bind(c)

    def bind(self, c: ChannelName) -> str:
        base = c.name if (c.name and not c.name[0].isdigit()) else "c"
        name = base
        k = 1
        while any(name in frame for frame in self.taken):
            k += 1
            name = f"{base}{k}"
        self.taken[-1].add(name)
        self.display[c] = name
        return name

    def push(self) -> None:
        self.taken.append(set())

    def pop(self) -> None:
        self.taken.pop()

    def of(self, c: ChannelName) -> str:
        return self.display.get(c, c.name or "c")


_INLINE_LIMIT = 44


def pretty_process(p: Process, namer: _Namer | None = None, indent: int = 0) -> str:
    if namer is None:
        namer = _Namer()
        namer.seed(sorted(free_names(p), key=lambda c: (c.name, c.uid)))
    return _render(p, namer, indent)


def _block(body: str, indent: int) -> str:
    if "\n" not in body and len(body) <= _INLINE_LIMIT:
        return "{ " + body + " }"
    pad = "  " * (indent + 1)
    return "{\n" + pad + body + "\n" + "  " * indent + "}"


def _render(p: Process, n: _Namer, indent: int) -> str:
    match p:
        case Call(name, args):
            return f"{name}({', '.join(n.of(a) for a in args)})"
        case Close(x):
            return f"close {n.of(x)}"
        case Fail(x):
            return f"fail {n.of(x)}"
        case Nil(x):
            return f"done {n.of(x)}"
        case Wait(x, body):
            return f"wait {n.of(x)}; " + _render(body, n, indent)
        case Select(x, tag, body):
            return f"{n.of(x)}.in{tag}; " + _render(body, n, indent)
        case Join(x, y, body):
            n.push()
            yd = n.bind(y)
            out = f"recv {n.of(x)}({yd}); " + _render(body, n, indent)
            n.pop()
            return out
        case Fork(x, y, pb, cont):
            n.push()
            yd = n.bind(y)
            payload = _render(pb, n, indent)
            n.pop()
            return f"send {n.of(x)}({yd}){_block(payload, indent)}; " + _render(cont, n, indent)
        case Case(x, l, r):
            pad = "  " * (indent + 1)
            left = _render(l, n, indent + 1)
            right = _render(r, n, indent + 1)
            one_line = f"case {n.of(x)} {{ in1: {left} ; in2: {right} }}"
            if "\n" not in one_line and len(one_line) <= 2 * _INLINE_LIMIT:
                return one_line
            return (f"case {n.of(x)} {{\n{pad}in1: {left} ;\n{pad}in2: {right}\n"
                    + "  " * indent + "}")
        case Server(x, y, acc, idle):
            n.push()
            yd = n.bind(y)
            accept = _render(acc, n, indent + 1)
            n.pop()
            idle_s = _render(idle, n, indent + 1)
            return (f"server {n.of(x)}({yd}) " + _block(accept, indent)
                    + " idle " + _block(idle_s, indent))
        case Cons(x, y, client, pool):
            n.push()
            yd = n.bind(y)
            body = _render(client, n, indent)
            n.pop()
            return f"client {n.of(x)}({yd}){_block(body, indent)}; " + _render(pool, n, indent)
        case Cut(x, anno, l, r):
            n.push()
            xd = n.bind(x)
            pad = "  " * (indent + 1)
            left = _render(l, n, indent + 1)
            right = _render(r, n, indent + 1)
            n.pop()
            head = f"new {xd} : {pretty_type(anno)} "
            one_line = head + "{ " + left + " | " + right + " }"
            if "\n" not in one_line and len(one_line) <= 2 * _INLINE_LIMIT:
                return one_line
            return (head + "{\n" + pad + left + "\n" + pad + "| " + right + "\n"
                    + "  " * indent + "}")
    raise TypeError(f"not a process: {p!r}")


def pretty_definition(d: Definition, keyword: str = "def") -> str:
    namer = _Namer()
    for c, _ in d.params:
        namer.bind(c)
    params = ", ".join(f"{namer.of(c)}: {pretty_type(t)}" for c, t in d.params)
    head = f"main({params})" if keyword == "main" else f"def {d.name}({params})"
    return f"{head} = " + _render(d.body, namer, 1)


def pretty_program(prog: Program) -> str:
    chunks = [pretty_definition(d) for d in prog.defs.values()]
    if prog.main is not None:
        chunks.append(pretty_definition(prog.main, keyword="main"))
    return "\n\n".join(chunks) + "\n"


def pretty(v) -> str:
    if isinstance(v, ty.SessionType):
        return pretty_type(v)
    if isinstance(v, Process):
        return pretty_process(v)
    if isinstance(v, Program):
        return pretty_program(v)
    if isinstance(v, Definition):
        return pretty_definition(v)
    raise TypeError(f"cannot pretty-print {type(v).__name__}")
