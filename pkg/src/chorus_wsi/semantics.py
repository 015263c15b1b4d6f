"""The three labelled transition systems and the bounded conditional
simulation checker.

Process steps carry conditional labels <e>alpha; the guard records the
conjunction of the conditions taken by if-statements on the way to the
action.  System steps resolve communication against per-channel queues
(send appends, receive consumes the head) and synchronize one requester
with all acceptors of a shared name, creating fresh session channels
from a deterministic counter.  Specification steps rewrite normalized
session pseudo-types; queue-mediated specification steps are silent but
record the communication they perform, which is what the simulation
checker matches system communications against.

Structural congruence is applied as a normalization to canonical form
(flattened parallel components, restrictions hoisted, idle processes
dropped) rather than searched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .guards import DomainDecl, EMPTY_DOMAINS, Store, eval_expr
from .projection import NonProjectable, project
from .pseudotype import normal_form
from .syntax.ast import (
    Accept, Branch, Const, Expr, For, If, Lit, Par, Proc, Process, Queue,
    RepeatUntil, Request, Restrict, Send, Seq, Sort, System, TEnd,
    TExternal, TInternal, TIter, TRUE, TSeq, conj, is_nil, neg,
)
from .syntax.subst import subst_process
from .typecheck import SpecEnv, instantiate, participants_ordered


# ----------------------------------------------------------------- labels

@dataclass(frozen=True)
class Label:
    """A conditional action <guard>alpha."""

    kind: str  # "req" | "acc" | "out" | "in" | "tau"
    guard: Expr = TRUE
    shared: str | None = None
    arity: int | None = None
    role: str | None = None
    chans: tuple | None = None
    channel: str | None = None
    value: Lit | None = None

    def with_guard(self, e: Expr) -> "Label":
        return replace(self, guard=conj(e, self.guard))

    def __str__(self) -> str:
        body = {
            "req": lambda: f"req {self.shared}[{self.arity}]({', '.join(self.chans)})",
            "acc": lambda: f"acc {self.shared}[{self.role}]({', '.join(self.chans)})",
            "out": lambda: f"{self.channel}!{self.value}",
            "in": lambda: f"{self.channel}?{self.value}",
            "tau": lambda: "tau",
        }[self.kind]()
        from .syntax.printer import render_expr
        from .syntax.ast import is_true
        return body if is_true(self.guard) else f"<{render_expr(self.guard)}>{body}"


@dataclass(frozen=True)
class SpecLabel:
    """A specification action; values are replaced by sorts and
    conditions do not occur.  Queue-mediated steps are tau but record
    the communication performed (comm = (polarity, channel, sort))."""

    kind: str  # "req" | "acc" | "out" | "in" | "tau"
    shared: str | None = None
    role: str | None = None
    chans: tuple | None = None
    channel: str | None = None
    sort: Sort | None = None
    comm: tuple | None = None


# --------------------------------------------------------- process stepping

def proc_canon(p: Process) -> Process:
    """Quotient by the sequential monoid laws: drop idle units and
    reassociate to the right."""
    match p:
        case Seq(first, second):
            first = proc_canon(first)
            second = proc_canon(second)
            if is_nil(first):
                return second
            if is_nil(second):
                return first
            if isinstance(first, Seq):
                return proc_canon(Seq(first.first, Seq(first.second, second)))
            return Seq(first, second)
        case _:
            return p


def default_oracle(domains: DomainDecl, sorts: dict):
    """Candidate receive values for open-process exploration: the
    declared domain of the channel's payload sort."""

    def oracle(channel: str):
        sort = sorts.get(channel)
        if sort is None:
            return []
        return domains.values_of_sort(sort)

    return oracle


def step_process(p: Process, store: Store, domains: DomainDecl = EMPTY_DOMAINS,
                 oracle=None) -> list:
    """All one-step successors (label, process, store)."""
    p = proc_canon(p)
    oracle = oracle or (lambda channel: [])
    out: list = []
    match p:
        case Branch(arms) if not arms:
            return []
        case Request(shared, arity, chans, cont):
            chans, cont = _fresh_session_names(chans, cont, store)
            label = Label("req", shared=shared, arity=arity, chans=chans)
            out.append((label, cont, store.with_session(shared, chans)))
        case Accept(shared, role, chans, cont):
            chans, cont = _fresh_session_names(chans, cont, store)
            label = Label("acc", shared=shared, role=role, chans=chans)
            out.append((label, cont, store.with_session(shared, chans)))
        case Send(channel, payload):
            value = eval_expr(payload, store)
            out.append((Label("out", channel=channel, value=value),
                        Branch(()), store))
        case Branch(arms):
            for arm in arms:
                for value in oracle(arm.channel):
                    out.append((Label("in", channel=arm.channel, value=value),
                                arm.cont, store.with_var(arm.binder, value)))
        case Seq(first, second):
            for label, cont, store2 in step_process(first, store, domains, oracle):
                out.append((label, proc_canon(Seq(cont, second)), store2))
        case If(cond, then, orelse):
            test = eval_expr(cond, store)
            branch, guard = (then, cond) if test.value else (orelse, neg(cond))
            for label, cont, store2 in step_process(branch, store, domains, oracle):
                out.append((label.with_guard(guard), cont, store2))
        case For(binder, items, body):
            value = eval_expr(items, store)
            if not value.value:
                out.append((Label("tau"), Branch(()), store))
            else:
                head, tail = value.value[0], Lit(value.sort, value.value[1:])
                inner = store.with_var(binder, head)
                rest = For(binder, Const(tail), body)
                for label, cont, store2 in step_process(body, inner, domains, oracle):
                    out.append((label, proc_canon(Seq(cont, rest)), store2))
        case RepeatUntil(body, exit):
            exit_chans = {a.channel for a in exit.arms}
            for label, cont, store2 in step_process(body, store, domains, oracle):
                if label.channel in exit_chans:
                    continue
                out.append((label, proc_canon(Seq(cont, p)), store2))
            for label, cont, store2 in step_process(exit, store, domains, oracle):
                out.append((label, cont, store2))
    return out


def _fresh_session_names(chans: tuple, cont: Process, store: Store):
    taken = store.domain() | frozenset(
        y for ys in store.sessions.values() for y in ys)
    if not (set(chans) & taken):
        return chans, cont
    mapping = {}
    for y in chans:
        fresh = y
        i = 1
        while fresh in taken or fresh in mapping.values():
            fresh = f"{y}#{i}"
            i += 1
        mapping[y] = fresh
    new = tuple(mapping[y] for y in chans)
    return new, subst_process(cont, cmap={k: v for k, v in mapping.items() if k != v})


# ---------------------------------------------------------- system stepping

@dataclass(frozen=True)
class SysState:
    """Canonical runtime form of a system: numbered parallel components,
    channel queues, and the restrictions hoisted to the top."""

    procs: tuple = ()        # of (component id, Process)
    queues: tuple = ()       # sorted tuple of (chan, tuple[Lit])
    restricted: tuple = ()   # of (chans, shared)

    def queue_map(self) -> dict:
        return dict(self.queues)

    def proc_map(self) -> dict:
        return dict(self.procs)

    def is_terminated(self) -> bool:
        return all(is_nil(p) for _, p in self.procs)


@dataclass(frozen=True)
class StepDetail:
    """Which component moved, with its underlying process-level label."""

    component: int
    action: Label


def to_state(s: System) -> SysState:
    procs: list = []
    queues: dict = {}
    restricted: list = []

    def walk(node: System):
        match node:
            case Proc(p):
                p = proc_canon(p)
                procs.append((len(procs), p))
            case Par(left, right):
                walk(left)
                walk(right)
            case Queue(chan, values):
                queues[chan] = tuple(values)
            case Restrict(chans, shared, scope):
                restricted.append((tuple(chans), shared))
                walk(scope)

    walk(s)
    return SysState(tuple(procs), tuple(sorted(queues.items())),
                    tuple(restricted))


def _set_queue(queues: tuple, chan: str, values: tuple) -> tuple:
    qs = dict(queues)
    qs[chan] = values
    return tuple(sorted(qs.items()))


def _set_proc(procs: tuple, pid: int, p: Process) -> tuple:
    return tuple((i, proc_canon(p) if i == pid else q) for i, q in procs)


def system_steps(state: SysState, store: Store,
                 domains: DomainDecl = EMPTY_DOMAINS, oracle=None) -> list:
    """All one-step successors (label, state, store, detail)."""
    out: list = []
    queues = state.queue_map()

    def queue_oracle(channel):
        if channel in queues:
            q = queues[channel]
            return [q[0]] if q else []
        return oracle(channel) if oracle else []

    requests: list = []
    accepts: dict = {}
    for pid, p in state.procs:
        head = proc_canon(p)
        opener = head.first if isinstance(head, Seq) else head
        if isinstance(opener, Request):
            requests.append(pid)
        if isinstance(opener, Accept):
            accepts.setdefault(opener.shared, []).append(pid)

        for label, cont, store2 in step_process(p, store, domains, queue_oracle):
            detail = StepDetail(pid, label)
            if label.kind == "out":
                if label.channel in queues:
                    new_q = _set_queue(state.queues, label.channel,
                                       queues[label.channel] + (label.value,))
                    sys_label = Label("tau", guard=label.guard)
                    out.append((sys_label,
                                SysState(_set_proc(state.procs, pid, cont),
                                         new_q, state.restricted),
                                store2, detail))
                else:
                    out.append((label, SysState(_set_proc(state.procs, pid, cont),
                                                state.queues, state.restricted),
                                store2, detail))
            elif label.kind == "in":
                if label.channel in queues:
                    q = queues[label.channel]
                    if not q or q[0] != label.value:
                        continue
                    new_q = _set_queue(state.queues, label.channel, q[1:])
                    sys_label = Label("tau", guard=label.guard)
                    out.append((sys_label,
                                SysState(_set_proc(state.procs, pid, cont),
                                         new_q, state.restricted),
                                store2, detail))
                else:
                    out.append((label, SysState(_set_proc(state.procs, pid, cont),
                                                state.queues, state.restricted),
                                store2, detail))
            elif label.kind == "tau":
                out.append((label, SysState(_set_proc(state.procs, pid, cont),
                                            state.queues, state.restricted),
                            store2, detail))
            # lone req/acc labels do not fire at system level: session
            # initiation is the synchronous SInit step below

    out.extend(_init_steps(state, store, domains, requests, accepts))
    return out


def _init_steps(state: SysState, store: Store, domains: DomainDecl,
                requests: list, accepts: dict) -> list:
    out = []
    procs = state.proc_map()
    for pid in requests:
        p = procs[pid]
        prefix = None
        if isinstance(p, Seq):
            p, prefix = p.first, p.second
        assert isinstance(p, Request)
        partners = [q for q in accepts.get(p.shared, []) if q != pid]
        roles = []
        arity_ok = True
        for q in partners:
            acc = procs[q]
            acc = acc.first if isinstance(acc, Seq) else acc
            roles.append(acc.role)
            arity_ok = arity_ok and len(acc.chans) == len(p.chans)
        if not arity_ok or len(set(roles)) != len(roles):
            continue
        if len(partners) != p.arity:
            continue  # incomplete or ambiguous cohorts do not synchronize
        session_no = len(state.restricted)
        actuals = tuple(f"{y}@{p.shared}{session_no}" for y in p.chans)
        new_procs = list(state.procs)
        cont0 = subst_process(p.cont, cmap=dict(zip(p.chans, actuals)))
        if prefix is not None:
            cont0 = proc_canon(Seq(cont0, prefix))
        new_procs[pid] = (pid, cont0)
        for q in partners:
            acc = procs[q]
            acc_prefix = None
            if isinstance(acc, Seq):
                acc, acc_prefix = acc.first, acc.second
            cont = subst_process(acc.cont, cmap=dict(zip(acc.chans, actuals)))
            if acc_prefix is not None:
                cont = proc_canon(Seq(cont, acc_prefix))
            new_procs[q] = (q, cont)
        queues = _merge_queues(state.queues, actuals)
        store2 = store.with_session(p.shared, actuals)
        new_state = SysState(tuple(new_procs), queues,
                             state.restricted + ((actuals, p.shared),))
        out.append((Label("tau"), new_state, store2,
                    StepDetail(pid, Label("req", shared=p.shared,
                                          arity=p.arity, chans=actuals))))
    return out


def _merge_queues(queues: tuple, actuals: tuple) -> tuple:
    qs = dict(queues)
    for y in actuals:
        qs[y] = ()
    return tuple(sorted(qs.items()))


def step_system(s: System | SysState, store: Store,
                domains: DomainDecl = EMPTY_DOMAINS, oracle=None) -> list:
    """Public variant returning (label, state, store) triples."""
    state = s if isinstance(s, SysState) else to_state(s)
    return [(label, st, sto) for label, st, sto, _ in
            system_steps(state, store, domains, oracle)]


# ----------------------------------------------------- specification stepping

def _type_steps(t) -> list:
    """Head communications of a normalized pseudo-type: a list of
    (polarity, channel, sort, continuation)."""
    out: list = []
    match t:
        case TEnd():
            return []
        case TInternal(branches):
            return [("out", b.channel, b.sort, b.cont) for b in branches]
        case TExternal(branches):
            return [("in", b.channel, b.sort, b.cont) for b in branches]
        case TIter(body):
            for pol, chan, sort, cont in _type_steps(body):
                out.append((pol, chan, sort, cont))                  # once
                out.append((pol, chan, sort, TSeq(cont, t)))         # unfold
            return out
        case TSeq(first, second):
            for pol, chan, sort, cont in _type_steps(first):
                out.append((pol, chan, sort, TSeq(cont, second)))
            if isinstance(first, TIter):
                # the loop may be skipped on an input of the continuation
                for pol, chan, sort, cont in _type_steps(second):
                    if pol == "in":
                        out.append((pol, chan, sort, cont))
            return out
    raise TypeError(f"not a pseudo-type: {t!r}")


def _spec_chan_counter(delta: SpecEnv) -> int:
    return len(delta.session_channels())


def step_spec(gamma: dict, delta: SpecEnv, domains: DomainDecl = EMPTY_DOMAINS,
              init_chans: dict | None = None) -> list:
    """All one-step successors (SpecLabel, SpecEnv), working up to
    normal forms of the session pseudo-types."""
    out: list = []
    queues = delta.queue_map()
    sessions = {k: normal_form(t, domains) for k, t in delta.sessions}
    shared = delta.shared_map()

    for key, t in sessions.items():
        chans, role = key
        for pol, chan, sort, cont in _type_steps(t):
            new_sessions = dict(sessions)
            new_sessions[key] = normal_form(cont, domains)
            if chan in queues:
                if pol == "out":
                    new_queues = dict(queues)
                    new_queues[chan] = queues[chan] + (sort,)
                    out.append((SpecLabel("tau", role=role, channel=chan,
                                          sort=sort, comm=("out", chan, sort)),
                                SpecEnv.make(shared, new_sessions, new_queues)))
                else:
                    q = queues[chan]
                    if q and q[0] == sort:
                        new_queues = dict(queues)
                        new_queues[chan] = q[1:]
                        out.append((SpecLabel("tau", role=role, channel=chan,
                                              sort=sort, comm=("in", chan, sort)),
                                    SpecEnv.make(shared, new_sessions, new_queues)))
            else:
                kind = "out" if pol == "out" else "in"
                out.append((SpecLabel(kind, role=role, channel=chan, sort=sort),
                            SpecEnv.make(shared, new_sessions, queues)))

    for u, gdef in shared.items():
        hint = (init_chans or {}).get(u)
        chans = hint or tuple(f"{y}@{u}{_spec_chan_counter(delta)}"
                              for y in gdef.params)
        g = instantiate(gdef, chans)
        parts = participants_ordered(g)
        if any(set(chans) & set(k[0]) for k in sessions):
            continue
        projections = {}
        for p in parts:
            try:
                projections[p] = normal_form(project(g, p), domains)
            except NonProjectable:
                continue
        # TReq / TAcc: a single endpoint joins (only its own projection
        # needs to exist)
        for p, proj in projections.items():
            kind = "req" if p == parts[0] else "acc"
            new_sessions = dict(sessions)
            new_sessions[(chans, p)] = proj
            out.append((SpecLabel(kind, shared=u, role=p, chans=chans),
                        SpecEnv.make(shared, new_sessions, queues)))
        # TInit: the whole session starts, queues included
        if len(projections) == len(parts):
            new_sessions = dict(sessions)
            for p in parts:
                new_sessions[(chans, p)] = projections[p]
            new_queues = dict(queues)
            for y in chans:
                new_queues[y] = ()
            out.append((SpecLabel("tau", shared=u, chans=chans),
                        SpecEnv.make(shared, new_sessions, new_queues)))
    return out


# ------------------------------------------------------ conditional simulation

@dataclass(frozen=True)
class Holds:
    states: int

    def holds(self) -> bool:
        return True


@dataclass(frozen=True)
class Counterexample:
    trace: tuple
    action: object
    reason: str

    def holds(self) -> bool:
        return False


def _store_key(store: Store):
    return (tuple(sorted(store.vars.items(), key=lambda kv: kv[0])),
            tuple(sorted(store.sessions.items())))


def conditional_simulation(system: System | SysState, store: Store,
                           gamma: dict, delta: SpecEnv,
                           domains: DomainDecl = EMPTY_DOMAINS,
                           depth: int = 40) -> Holds | Counterexample:
    """Bounded check that the specification conditionally simulates the
    system: inputs must be answered for well-sorted payloads only, all
    other actions must be matched.  Communications are matched one to
    one (session starts against session starts, queue operations
    against queue operations on the same channel), which instantiates
    the tau-closure of the simulation clauses without chasing the
    specification's unbounded freedom to open unrelated sessions."""
    from collections import deque

    state = system if isinstance(system, SysState) else to_state(system)
    visited: set = set()
    frontier = deque([(state, store, frozenset([delta]), (), depth)])
    explored = 0
    while frontier:
        state, store, candidates, trace, fuel = frontier.popleft()
        if fuel <= 0:
            continue
        key = (state, _store_key(store), candidates)
        if key in visited:
            continue
        visited.add(key)
        explored += 1
        for label, state2, store2, detail in system_steps(state, store, domains):
            action = detail.action
            answers = set()
            for d in candidates:
                answers |= _spec_answers(d, detail, domains)
            if not answers:
                return Counterexample(trace, action,
                                      f"specification offers no matching step "
                                      f"for {action}")
            if action.kind == "in" and action.value is not None:
                sorts = {s.sort for s, _ in answers if s.sort is not None}
                if sorts and action.value.sort not in sorts:
                    # ill-sorted input: the pair needs no continuation
                    continue
                survivors = frozenset(d for s, d in answers
                                      if s.sort in (None, action.value.sort))
            else:
                survivors = frozenset(d for _, d in answers)
            frontier.append((state2, store2, survivors,
                             trace + (action,), fuel - 1))
    return Holds(explored)


def _init_hint(detail: StepDetail) -> dict | None:
    if detail.action.kind == "req" and detail.action.chans:
        return {detail.action.shared: detail.action.chans}
    return None


def _spec_answers(d: SpecEnv, detail: StepDetail, domains: DomainDecl) -> set:
    """Spec steps matching one system step, as (spec label, successor)."""
    action = detail.action
    out = set()
    for label, d2 in step_spec({}, d, domains, _init_hint(detail)):
        if action.kind in ("out", "in"):
            pol = action.kind
            if label.comm is not None:
                lpol, lchan, _ = label.comm
                if lpol == pol and lchan == action.channel:
                    if pol == "in" or label.sort == action.value.sort:
                        out.add((label, d2))
            elif label.kind == pol and label.channel == action.channel:
                if pol == "in" or label.sort == action.value.sort:
                    out.add((label, d2))
        elif action.kind == "req":
            if label.kind == "tau" and label.shared == action.shared:
                out.add((label, d2))
            if label.kind == "req" and label.shared == action.shared:
                out.add((label, d2))
        elif action.kind == "acc":
            if label.kind == "acc" and label.shared == action.shared \
                    and label.role == action.role:
                out.add((label, d2))
    if action.kind == "tau":
        # a purely administrative system step (loop bookkeeping) is
        # answered by the specification staying put; session starts and
        # communications are handled by their own action kinds
        out.add((SpecLabel("tau"), d))
    return out
