"""Annotated-run enumeration and the trace preorder.

Runs are tuples mixing events with optional segments (`Opt`).  Optional
segments arise from unfolding iterations: the first execution of a loop
body is mandatory, every further unfolding is wrapped as optional.  All
enumerators bound iteration unfolding by K and produce complete runs
(sessions terminated, queues drained).

A trace stands for its equivalence class modulo permutation of causally
independent events, where two events are independent iff they are by
different participants on different channels.  The preorder matcher
looks for an injective, label-preserving embedding of the mandatory
events of the left run into the right run that preserves the relative
order of dependent pairs on both sides; a brute-force closure of the
preorder's inference rules (used by the tests as an oracle) agrees with
it on small runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .guards import DomainDecl, EMPTY_DOMAINS, Store
from .projection import project, well_formed
from .pseudotype import normal_form
from .semantics import SysState, system_steps
from .syntax.ast import (
    Event, GChoice, GEnd, GIter, GSeq, GlobalDef, GlobalType, TEnd,
    TExternal, TInternal, TIter, TSeq, is_nil,
)
from .typecheck import SpecEnv, instantiate, participants_ordered, unique_role


@dataclass(frozen=True)
class Opt:
    """An optional segment [r] of an annotated run."""

    items: tuple

    def __str__(self) -> str:
        return "[" + " ".join(str(i) for i in self.items) + "]"


def run_str(run: tuple) -> str:
    return " ".join(str(i) for i in run) if run else "<empty>"


def mandatory(run: tuple) -> tuple:
    """The run with all optional segments deleted."""
    out = []
    for item in run:
        if isinstance(item, Event):
            out.append(item)
    return tuple(out)


def all_events(run: tuple) -> tuple:
    out = []
    for item in run:
        if isinstance(item, Event):
            out.append(item)
        else:
            out.extend(all_events(item.items))
    return tuple(out)


class IllFormed(Exception):
    pass


class NotAnImplementation(Exception):
    def __init__(self, clause: str, message: str):
        super().__init__(f"{clause}: {message}")
        self.clause = clause


# ------------------------------------------------------- runs of global types

def _nestings(body_runs: frozenset, k_max: int) -> frozenset:
    """r1, r1[r2], r1[r2[r3]], ... with at most k_max bodies."""
    levels = [frozenset(body_runs)]
    for _ in range(k_max - 1):
        prev = levels[-1]
        levels.append(frozenset(
            r1 + (Opt(rest),) for r1 in body_runs for rest in prev))
    out: set = set()
    for level in levels:
        out |= level
    return frozenset(out)


def runs_global(g: GlobalType, unfold: int = 2, check: bool = True) -> frozenset:
    """The annotated runs allowed by g, iterations unfolded at most
    `unfold` times, in the canonical interleaving of each rule."""
    if unfold < 1:
        raise ValueError("the unfold bound must be at least 1")
    if check:
        violations = well_formed(g)
        if violations:
            raise IllFormed("; ".join(str(v) for v in violations))

    def walk(node: GlobalType) -> frozenset:
        match node:
            case GEnd():
                return frozenset({()})
            case GChoice(sender, branches):
                out: set = set()
                for b in branches:
                    head = (Event(sender, "!", b.channel, b.sort),
                            Event(b.receiver, "?", b.channel, b.sort))
                    out |= {head + r for r in walk(b.cont)}
                return frozenset(out)
            case GSeq(first, second):
                lefts, rights = walk(first), walk(second)
                return frozenset(l + r for l in lefts for r in rights)
            case GIter(body, controller, term):
                nested = _nestings(walk(body), unfold)
                tail = []
                for p, chan, sort in term:
                    tail.append(Event(controller, "!", chan, sort))
                    tail.append(Event(p, "?", chan, sort))
                tail = tuple(tail)
                return frozenset(r + tail for r in nested)
        raise TypeError(f"not a global type: {node!r}")

    return walk(g)


# ---------------------------------------------------- runs of specifications

def projection_env(gdef: GlobalDef, domains: DomainDecl = EMPTY_DOMAINS) -> SpecEnv:
    """The specification holding every projection of the instantiated
    global type, plus its empty queues."""
    g = gdef.body if not gdef.params else instantiate(gdef, gdef.params)
    parts = participants_ordered(g)
    sessions = {(tuple(gdef.params), p): normal_form(project(g, p), domains)
                for p in parts}
    queues = {y: () for y in gdef.params}
    return SpecEnv.make({}, sessions, queues)


def runs_spec(delta: SpecEnv, ys: tuple, unfold: int = 2,
              domains: DomainDecl = EMPTY_DOMAINS) -> frozenset:
    """The annotated runs of session ys generated by the specification.

    Communications follow the queue discipline (a send enqueues its
    sort, a receive consumes a matching head); iterations unfold in
    lockstep across the endpoints that sit at a loop head, one body
    execution mandatory and up to unfold-1 optional ones.
    """
    if unfold < 1:
        raise ValueError("the unfold bound must be at least 1")
    sessions = {}
    for (chans, role), t in delta.sessions:
        if set(chans) & set(ys):
            sessions[role] = normal_form(t, domains)
    queues = {y: q for y, q in delta.queues if y in ys}
    for y in ys:
        queues.setdefault(y, ())
    memo: dict = {}
    return frozenset(_spec_runs(_freeze_spec(sessions, queues), unfold,
                                domains, memo))


def _freeze_spec(sessions: dict, queues: dict):
    return (tuple(sorted(sessions.items(), key=lambda kv: kv[0])),
            tuple(sorted(queues.items())))


def _spec_runs(state, unfold: int, domains: DomainDecl, memo: dict) -> frozenset:
    if state in memo:
        return memo[state]
    memo[state] = frozenset()  # cut accidental cycles
    sessions = dict(state[0])
    queues = dict(state[1])
    out: set = set()

    moves = []
    for role in sorted(sessions):
        t = sessions[role]
        if isinstance(t, TExternal):
            for b in t.branches:
                q = queues.get(b.channel, ())
                if q and q[0] == b.sort:
                    moves.append((role, "?", b))
        elif isinstance(t, TInternal):
            for b in t.branches:
                if b.channel in queues:
                    moves.append((role, "!", b))

    for role, pol, b in moves:
        new_sessions = dict(sessions)
        new_sessions[role] = normal_form(b.cont, domains)
        new_queues = dict(queues)
        if pol == "!":
            new_queues[b.channel] = queues[b.channel] + (b.sort,)
        else:
            new_queues[b.channel] = queues[b.channel][1:]
        ev = Event(role, pol, b.channel, b.sort)
        for rest in _spec_runs(_freeze_spec(new_sessions, new_queues),
                               unfold, domains, memo):
            out.add((ev,) + rest)

    if not moves:
        loopers = {role: t for role, t in sessions.items()
                   if isinstance(t, TIter)
                   or (isinstance(t, TSeq) and isinstance(t.first, TIter))}
        if loopers:
            bodies = {}
            conts = {}
            for role, t in loopers.items():
                it = t if isinstance(t, TIter) else t.first
                bodies[role] = normal_form(it.body, domains)
                conts[role] = t.second if isinstance(t, TSeq) else TEnd()
            round_runs = _spec_runs(_freeze_spec(bodies, queues), unfold,
                                    domains, dict())
            after = dict(sessions)
            for role, cont in conts.items():
                after[role] = normal_form(cont, domains)
            tails = _spec_runs(_freeze_spec(after, queues), unfold, domains, memo)
            for nested in _nestings(round_runs, unfold):
                for tail in tails:
                    out.add(nested + tail)
        elif all(isinstance(t, TEnd) for t in sessions.values()) \
                and all(not q for q in queues.values()):
            out.add(())

    memo[state] = frozenset(out)
    return memo[state]


# -------------------------------------------------- runs of implementations

def runs_impl(iota: dict, shared_name: str, gdef: GlobalDef,
              domains: DomainDecl = EMPTY_DOMAINS, store: Store | None = None,
              context: tuple = (), step_bound: int = 300,
              validate: bool = True) -> frozenset:
    """The runs of the iota-implementation initiated on the shared name,
    restricted to the session's channels, with sorts replacing values.

    Events are reported over the global type's declared channel names
    (actual session channels are mapped back positionally).
    """
    g = instantiate(gdef, gdef.params)
    parts = participants_ordered(g)
    if validate:
        if set(iota) != set(parts):
            raise NotAnImplementation(
                "roles", f"iota covers {sorted(iota)}, the global type has "
                f"{sorted(parts)}")
        for p, proc in iota.items():
            if not unique_role(proc, shared_name, p, role0=parts[0]):
                raise NotAnImplementation(
                    "unique-role", f"iota({p}) does not uniquely play {p!r} "
                    f"in {shared_name!r}")
        for ctx_proc in context:
            from .syntax.ast import fn
            if shared_name in fn(ctx_proc):
                raise NotAnImplementation(
                    "context", "the context mentions the session's shared name")

    components = []
    tags = {}
    for i, p in enumerate(parts):
        tags[i] = p
        components.append((i, iota[p]))
    for j, ctx_proc in enumerate(context):
        components.append((len(parts) + j, ctx_proc))
    state = SysState(tuple(components), (), ())
    store = store or Store(tables=domains.tables)

    memo: dict = {}

    def explore(state: SysState, store: Store, session: tuple | None,
                fuel: int) -> frozenset:
        key = (state, session,
               tuple(sorted(store.vars.items(), key=lambda kv: kv[0])),
               tuple(sorted(store.sessions.items())))
        if key in memo:
            return memo[key]
        memo[key] = frozenset()
        out: set = set()
        done = all(is_nil(p) for i, p in state.procs if i in tags)
        if session is not None:
            drained = all(not dict(state.queues).get(y, ()) for y in session)
            if done and drained:
                out.add(())
        elif done:
            # the session never started: its queues are trivially empty
            out.add(())
        if fuel > 0:
            for label, state2, store2, detail in system_steps(state, store, domains):
                ev = None
                session2 = session
                action = detail.action
                if action.kind == "req" and action.shared == shared_name \
                        and session is None:
                    session2 = action.chans
                elif action.kind in ("out", "in") and session is not None \
                        and detail.component in tags \
                        and action.channel in session:
                    chan_map = dict(zip(session, gdef.params))
                    ev = Event(tags[detail.component],
                               "!" if action.kind == "out" else "?",
                               chan_map[action.channel], action.value.sort)
                for rest in explore(state2, store2, session2, fuel - 1):
                    out.add(((ev,) + rest) if ev is not None else rest)
        memo[key] = frozenset(out)
        return memo[key]

    return explore(state, store, None, step_bound)


# ------------------------------------------------------------ trace preorder

def independent(e1: Event, e2: Event) -> bool:
    return e1.participant != e2.participant and e1.channel != e2.channel


def _foata(events: tuple) -> tuple:
    """Canonical layered form of a trace modulo commuting independent
    events; equal layers mean equal equivalence classes."""
    remaining = list(events)
    layers = []
    while remaining:
        layer = []
        blocked: list = []
        for ev in remaining:
            if any(not independent(ev, other) for other in blocked) \
                    or any(not independent(ev, lev) for lev in layer):
                blocked.append(ev)
            else:
                layer.append(ev)
        layers.append(tuple(sorted(layer, key=lambda e: (
            e.participant, e.channel, e.polarity, str(e.sort)))))
        remaining = blocked
    return tuple(layers)


def trace_leq(r1: tuple, r2: tuple) -> bool:
    """r1 is covered by r2: the mandatory events of r1 embed into r2
    modulo permutation of causally independent events (optional
    segments of either side are droppable)."""
    m1 = mandatory(r1)
    m2 = mandatory(r2)
    if not m1:
        return True
    if len(m1) > len(m2):
        return False
    counts: dict = {}
    for ev in m2:
        counts[ev] = counts.get(ev, 0) + 1
    for ev in m1:
        counts[ev] = counts.get(ev, 0) - 1
        if counts[ev] < 0:
            return False
    if _foata(m1) == _foata(m2):
        return True
    return _embed(m1, m2)


def _embed(m1: tuple, m2: tuple) -> bool:
    n1, n2 = len(m1), len(m2)

    def step(i: int, assigned: tuple) -> bool:
        if i == n1:
            return True
        ev = m1[i]
        for j in range(n2):
            if j in assigned or m2[j] != ev:
                continue
            ok = True
            for i2, j2 in enumerate(assigned):
                # order of dependent pairs must agree on both sides
                if not independent(m1[i2], ev) and not j2 < j:
                    ok = False
                    break
                if not independent(m2[j2], m2[j]) and not j2 < j:
                    ok = False
                    break
            if ok and step(i + 1, assigned + (j,)):
                return True
        return False

    return step(0, ())


# ----------------------------------------------------------------- covering

@dataclass(frozen=True)
class CoversHolds:
    witnesses: tuple  # of (run, covering run)

    def holds(self) -> bool:
        return True


@dataclass(frozen=True)
class MissingRun:
    run: tuple

    def holds(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"no covering run for: {run_str(self.run)}"


def covers(runs1, runs2) -> CoversHolds | MissingRun:
    """R1 is covered by R2 when every run of R1 is below some run of R2
    in the trace preorder."""
    index: dict = {}
    for r2 in runs2:
        index.setdefault(_foata(mandatory(r2)), r2)
    witnesses = []
    others = list(runs2)
    for r1 in sorted(runs1, key=run_str):
        hit = index.get(_foata(mandatory(r1)))
        if hit is not None:
            witnesses.append((r1, hit))
            continue
        for r2 in others:
            if trace_leq(r1, r2):
                witnesses.append((r1, r2))
                break
        else:
            return MissingRun(r1)
    return CoversHolds(tuple(witnesses))
