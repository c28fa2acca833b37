"""Operational semantics: redex discovery, full and deterministic stepping,
schedulers, state-space exploration, and termination verdicts.

Redexes live at a cut whose two sides expose dual actions on the cut
channel.  Exposure rewrites lazily: invocations are unfolded only while they
block discovery, guards are pulled out through enclosing cuts (and, in the
full semantics, through pool heads), mirroring the pre-congruence moves that
justify each step.  The deterministic fragment drops every pool rule, so
clients connect strictly in queue order.
"""

from __future__ import annotations

import hashlib
import random as _random
from dataclasses import dataclass, field
from typing import Callable, Iterator

from . import types as ty
from .canon import canonical_form
from .process import (
    Call, Case, ChannelName, Close, Cons, Cut, DivergentUnfolding, Fail,
    Fork, Join, Nil, Process, Program, Select, Server, Wait, channels,
    free_names, fresh, instantiate, rename, subject, threads, unfold,
)
from .printer import pretty_process


class NoRedexError(Exception):
    pass


@dataclass(frozen=True)
class RedexInfo:
    kind: str                 # r-close | r-comm | r-case | r-done | r-connect
    channel: str              # display name of the synchronizing channel
    path: tuple[str, ...]     # steps to the cut: L/R (cut sides), T (pool tail)
    participants: tuple[str, str]
    client_index: int = 0     # which pool cell connects, for r-connect

    def __str__(self) -> str:
        loc = "".join(self.path) or "·"
        return f"{self.kind}@{self.channel}[{loc}]"


def _unfold_head(p: Process, defs: Program, budget: int = 64) -> Process:
    while isinstance(p, Call) and budget > 0:
        defn = defs.defs.get(p.name)
        if defn is None:
            return p
        p = instantiate(defn, p.args)
        budget -= 1
    return p


def _find_guard(p: Process, x: ChannelName, defs: Program, pool_ok: bool
                ) -> tuple[Process, Callable[[Process], Process]] | None:
    """Locate the unguarded x-guard in p, with a rebuild closure for its context."""
    p = _unfold_head(p, defs)
    s = subject(p)
    if s == x:
        return p, lambda h: h
    if isinstance(p, Cut):
        got = _find_guard(p.left, x, defs, pool_ok)
        if got is not None:
            g, rb = got
            return g, lambda h: Cut(p.chan, p.anno, rb(h), p.right)
        got = _find_guard(p.right, x, defs, pool_ok)
        if got is not None:
            g, rb = got
            return g, lambda h: Cut(p.chan, p.anno, p.left, rb(h))
        return None
    if pool_ok and isinstance(p, Cons):
        # scope extrusion across a pool head requires x not to occur in it
        if x != p.chan and x not in (free_names(p.client) - {p.session}):
            got = _find_guard(p.pool, x, defs, pool_ok)
            if got is not None:
                g, rb = got
                return g, lambda h: Cons(p.chan, p.session, p.client, rb(h))
    return None


def _pool_cells(g: Process, x: ChannelName, defs: Program
                ) -> tuple[list[tuple[ChannelName, Process]], Process]:
    cells: list[tuple[ChannelName, Process]] = []
    node = g
    while True:
        node = _unfold_head(node, defs)
        if isinstance(node, Cons) and node.chan == x:
            cells.append((node.session, node.client))
            node = node.pool
        else:
            return cells, node


def _rebuild_pool(x: ChannelName, cells: list[tuple[ChannelName, Process]], end: Process) -> Process:
    out = end
    for y, body in reversed(cells):
        out = Cons(x, y, body, out)
    return out


def _descr(p: Process) -> str:
    names = {
        Close: "close", Wait: "wait", Fail: "fail", Fork: "send", Join: "recv",
        Select: "select", Case: "case", Server: "server", Cons: "client", Nil: "done",
    }
    return names.get(type(p), type(p).__name__.lower())


@dataclass(frozen=True)
class Step:
    """One enabled reduction: the redex, the pre-congruence rearrangement that
    exposes it (with the synchronizing cut as a shared subterm), and the
    reduct."""

    info: RedexInfo
    exposed: Process
    cut: Cut        # the exposed cut node, embedded in `exposed`
    reduct: Process


def _sync_redexes(cut: Cut, defs: Program, pool_ok: bool, path: tuple[str, ...]) -> list[Step]:
    x = cut.chan
    lg = _find_guard(cut.left, x, defs, pool_ok)
    rg = _find_guard(cut.right, x, defs, pool_ok)
    if lg is None or rg is None:
        return []
    (g1, rb1), (g2, rb2) = lg, rg
    left_type = cut.anno

    def around(core: Process) -> Process:
        return rb1(rb2(core))

    def info(kind: str, a: Process, b: Process, client_index: int = 0) -> RedexInfo:
        return RedexInfo(kind, x.name, path, (_descr(a), _descr(b)), client_index)

    out: list[Step] = []

    def add(i: RedexInfo, core: Process, exp1: Process = None, exp2: Process = None) -> None:
        exposed_cut = Cut(x, left_type, exp1 if exp1 is not None else g1,
                          exp2 if exp2 is not None else g2)
        out.append(Step(i, around(exposed_cut), exposed_cut, around(core)))

    def close_wait(gc: Close, gw: Wait) -> None:
        add(info("r-close", gc, gw), gw.body)

    def comm(gf: Fork, gj: Join, fork_type: ty.SessionType) -> None:
        if not isinstance(fork_type, ty.Tensor):
            return
        c = fresh(gf.payload.name)
        payload = rename(gf.payload_body, {gf.payload: c})
        jbody = rename(gj.body, {gj.payload: c})
        core = Cut(c, fork_type.left, payload, Cut(x, fork_type.right, gf.cont, jbody))
        add(info("r-comm", gf, gj), core)

    def case_sel(gs: Select, gc: Case, sel_type: ty.SessionType) -> None:
        if not isinstance(sel_type, ty.Plus):
            return
        branch = gc.left if gs.tag == 1 else gc.right
        chosen = sel_type.left if gs.tag == 1 else sel_type.right
        add(info("r-case", gs, gc), Cut(x, chosen, gs.body, branch))

    def pool_server(gp: Process, gs: Server, client_type: ty.SessionType, pool_is_left: bool) -> None:
        if not isinstance(client_type, ty.Client):
            return
        cells, end = _pool_cells(gp, x, defs)
        if not cells:
            if isinstance(end, Nil) and end.chan == x:
                i = info("r-done", end, gs)
                if pool_is_left:
                    add(i, gs.idle, exp1=end, exp2=g2)
                else:
                    add(i, gs.idle, exp1=g1, exp2=end)
            return
        indices = range(len(cells)) if pool_ok else range(1)
        for i in indices:
            y, body = cells[i]
            c = fresh(y.name)
            client = rename(body, {y: c})
            accept = rename(gs.accept, {gs.session: c})
            rest = _rebuild_pool(x, cells[:i] + cells[i + 1:], end)
            exposed_pool = Cons(x, y, body, rest)
            core = Cut(c, client_type.inner, client,
                       Cut(x, client_type, rest, accept))
            ri = info("r-connect", gp, gs, client_index=i)
            if pool_is_left:
                add(ri, core, exp1=exposed_pool, exp2=g2)
            else:
                add(ri, core, exp1=g1, exp2=exposed_pool)

    pairs = ((g1, g2, left_type, True), (g2, g1, ty.dual(left_type), False))
    for a, b, a_type, a_is_left in pairs:
        match a, b:
            case Close(), Wait():
                close_wait(a, b)
            case Fork(), Join():
                comm(a, b, a_type)
            case Select(), Case():
                case_sel(a, b, a_type)
            case (Cons(), Server()) | (Nil(), Server()):
                pool_server(a, b, a_type, a_is_left)
    return out


def _steps_full(p: Process, defs: Program, pool_ok: bool, path: tuple[str, ...] = ()
                ) -> list[Step]:
    p = _unfold_head(p, defs)
    out: list[Step] = []
    if isinstance(p, Cut):
        out.extend(_sync_redexes(p, defs, pool_ok, path))
        for st in _steps_full(p.left, defs, pool_ok, path + ("L",)):
            out.append(Step(st.info, Cut(p.chan, p.anno, st.exposed, p.right), st.cut,
                            Cut(p.chan, p.anno, st.reduct, p.right)))
        for st in _steps_full(p.right, defs, pool_ok, path + ("R",)):
            out.append(Step(st.info, Cut(p.chan, p.anno, p.left, st.exposed), st.cut,
                            Cut(p.chan, p.anno, p.left, st.reduct)))
    elif pool_ok and isinstance(p, Cons):
        for st in _steps_full(p.pool, defs, pool_ok, path + ("T",)):
            out.append(Step(st.info, Cons(p.chan, p.session, p.client, st.exposed), st.cut,
                            Cons(p.chan, p.session, p.client, st.reduct)))
    return out


def _steps(p: Process, defs: Program, pool_ok: bool, path: tuple[str, ...] = ()
           ) -> list[tuple[RedexInfo, Process]]:
    return [(st.info, st.reduct) for st in _steps_full(p, defs, pool_ok, path)]


def enabled_steps(p: Process, defs: Program, deterministic: bool = False) -> list[Step]:
    """Full step records including the exposed rearrangement, uncanonicalized."""
    return _steps_full(p, defs, pool_ok=not deterministic)


def step_all(p: Process, defs: Program) -> list[tuple[RedexInfo, Process]]:
    """Every one-step reduct under the full semantics, canonicalized."""
    return [(info, canonical_form(q)) for info, q in _steps(p, defs, pool_ok=True)]


def step_det(p: Process, defs: Program) -> list[tuple[RedexInfo, Process]]:
    """One-step reducts with all pool rules removed (queue order only)."""
    return [(info, canonical_form(q)) for info, q in _steps(p, defs, pool_ok=False)]


def find_redex(p: Process, defs: Program) -> tuple[RedexInfo, Process]:
    """The deterministic scheduler's next step, following the deadlock-freedom
    construction: unfold, then locate a channel whose two guards synchronize.

    Raises NoRedexError when p is in normal form.
    """
    try:
        q = unfold(p, defs)
    except DivergentUnfolding as e:
        # an unguarded invocation cycle never exposes a guard, so it is stuck
        raise NoRedexError(str(e)) from e
    steps = _steps(q, defs, pool_ok=False)
    if not steps:
        raise NoRedexError(f"no deterministic redex in: {pretty_process(q)}")
    return steps[0]


def is_close_normal(p: Process, defs: Program) -> bool:
    """True when p unfolds to a bare close (the terminal shape at a 1-typed context)."""
    try:
        return isinstance(unfold(p, defs), Close)
    except Exception:
        return False


def state_hash(p: Process) -> str:
    return hashlib.sha256(pretty_process(canonical_form(p)).encode()).hexdigest()[:12]


@dataclass
class TraceStep:
    index: int
    info: RedexInfo
    state_hash: str

    def line(self) -> str:
        return f"{self.index}, {self.info.kind}, {self.info.channel}, {self.state_hash}"


@dataclass
class Trace:
    steps: list[TraceStep]
    final: Process
    terminated: bool   # reached a state with no applicable redex
    truncated: bool    # stopped because of the step budget
    scheduler: str
    seed: int | None = None
    states: list[Process] = field(default_factory=list)  # canonical, one per step


def run(p: Process, ctx: dict, defs: Program, scheduler: str = "det",
        seed: int | None = None, max_steps: int = 1000) -> Trace:
    """Drive p to a normal form (or a step budget) under the chosen scheduler."""
    del ctx  # typing is the caller's concern; kept for symmetry with checking
    steps: list[TraceStep] = []
    states: list[Process] = [canonical_form(p)]
    cur = p

    def record(i: int, info: RedexInfo) -> None:
        states.append(canonical_form(cur))
        steps.append(TraceStep(i, info, state_hash(cur)))

    if scheduler == "det":
        for i in range(max_steps):
            try:
                info, nxt = find_redex(cur, defs)
            except NoRedexError:
                return Trace(steps, cur, True, False, scheduler, states=states)
            cur = nxt
            record(i, info)
        terminated = not _steps(cur, defs, pool_ok=False)
        return Trace(steps, cur, terminated, not terminated, scheduler, states=states)
    if scheduler == "random":
        rng = _random.Random(seed)
        for i in range(max_steps):
            succ = _steps(cur, defs, pool_ok=True)
            if not succ:
                return Trace(steps, cur, True, False, scheduler, seed, states=states)
            info, cur = rng.choice(succ)
            record(i, info)
        terminated = not _steps(cur, defs, pool_ok=True)
        return Trace(steps, cur, terminated, not terminated, scheduler, seed, states=states)
    raise ValueError(f"unknown scheduler {scheduler!r}")


@dataclass
class ReductionGraph:
    states: list[Process] = field(default_factory=list)
    index: dict[Process, int] = field(default_factory=dict)
    edges: dict[int, list[tuple[RedexInfo, int]]] = field(default_factory=dict)
    expanded: set[int] = field(default_factory=set)
    partial: bool = False
    root: int = 0

    def add_state(self, p: Process) -> int:
        sid = self.index.get(p)
        if sid is None:
            sid = len(self.states)
            self.states.append(p)
            self.index[p] = sid
            self.edges[sid] = []
        return sid

    def normal_forms(self) -> set[int]:
        return {sid for sid in self.expanded if not self.edges[sid]}

    def successors(self, sid: int) -> Iterator[int]:
        for _, t in self.edges[sid]:
            yield t

    def to_json_dict(self) -> dict:
        return {
            "states": [{"id": i, "term": pretty_process(s), "hash": state_hash(s),
                        "normal": i in self.normal_forms(), "expanded": i in self.expanded}
                       for i, s in enumerate(self.states)],
            "edges": [{"from": src, "rule": info.kind, "channel": info.channel, "to": tgt}
                      for src, outs in sorted(self.edges.items()) for info, tgt in outs],
            "partial": self.partial,
        }

    def to_dot(self) -> str:
        lines = ["digraph reduction {", "  node [shape=box, fontname=monospace];"]
        normals = self.normal_forms()
        for i, s in enumerate(self.states):
            label = pretty_process(s).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\l")
            style = ', style=filled, fillcolor="palegreen"' if i in normals else ""
            lines.append(f'  s{i} [label="{label}"{style}];')
        for src, outs in sorted(self.edges.items()):
            for info, tgt in outs:
                lines.append(f'  s{src} -> s{tgt} [label="{info.kind}@{info.channel}"];')
        lines.append("}")
        return "\n".join(lines)


def explore(p: Process, defs: Program, max_states: int = 100_000,
            max_depth: int = 10_000) -> ReductionGraph:
    """Breadth-first closure of step_all with canonical-form deduplication."""
    g = ReductionGraph()
    root = g.add_state(canonical_form(p))
    g.root = root
    frontier = [root]
    depth = 0
    while frontier and depth < max_depth:
        nxt: list[int] = []
        for sid in frontier:
            if sid in g.expanded:
                continue
            if len(g.states) >= max_states:
                g.partial = True
                return g
            g.expanded.add(sid)
            for info, q in step_all(g.states[sid], defs):
                tid = g.add_state(q)
                g.edges[sid].append((info, tid))
                if tid not in g.expanded:
                    nxt.append(tid)
        frontier = nxt
        depth += 1
    if frontier:
        g.partial = True
    return g


def is_weakly_terminating(sid: int, g: ReductionGraph) -> str:
    """'yes' | 'no' | 'unknown' for reachability of a normal form from sid."""
    normals = g.normal_forms()
    seen = {sid}
    queue = [sid]
    hit_unexpanded = False
    while queue:
        cur = queue.pop()
        if cur in normals:
            return "yes"
        if cur not in g.expanded:
            hit_unexpanded = True
            continue
        for t in g.successors(cur):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return "unknown" if hit_unexpanded else "no"


def weakly_terminating_state_count(trace: Trace, defs: Program,
                                   max_states: int = 2000, max_depth: int = 2000) -> int:
    """Post-hoc fairness accounting for a recorded run: the number of its
    states that are weakly terminating.  A fair run contains only finitely
    many, so an infinite run approximated by a truncated trace whose count
    stopped growing is fair-so-far."""
    count = 0
    for state in trace.states:
        g = explore(state, defs, max_states=max_states, max_depth=max_depth)
        if is_weakly_terminating(g.root, g) == "yes":
            count += 1
    return count


@dataclass
class FairTerminationReport:
    verdict: str  # "fairly-terminating" | "not-fairly-terminating" | "unknown"
    graph: ReductionGraph
    offending_state: int | None = None


def check_fair_termination(p: Process, defs: Program, max_states: int = 100_000,
                           max_depth: int = 10_000) -> FairTerminationReport:
    """Fair termination holds iff every reachable state is weakly terminating."""
    g = explore(p, defs, max_states, max_depth)
    unknown = False
    for sid in range(len(g.states)):
        wt = is_weakly_terminating(sid, g)
        if wt == "no":
            return FairTerminationReport("not-fairly-terminating", g, sid)
        if wt == "unknown":
            unknown = True
    if unknown or g.partial:
        return FairTerminationReport("unknown", g)
    return FairTerminationReport("fairly-terminating", g)
