import random

import pytest

from chorus_wsi.guards import Store
from chorus_wsi.syntax.ast import Event, GEnd, INT, UNIT, TEnd
from chorus_wsi.syntax import parse_type
from chorus_wsi.traces import (
    MissingRun, Opt, all_events, covers, mandatory, projection_env,
    run_str, runs_global, runs_impl, runs_spec, trace_leq, independent,
)
from chorus_wsi.typecheck import SpecEnv, instantiate

import gen


def ev(p, pol, chan, sort=UNIT):
    return Event(p, pol, chan, sort)


# ------------------------------------------------------------- runs_global

def test_runs_global_end():
    assert runs_global(GEnd(), 1) == frozenset({()})


def test_runs_global_atm(atm):
    gdef = atm.globals_["G_ATM"]
    g = instantiate(gdef, gdef.params)
    runs = runs_global(g, 1)
    assert len(runs) == 3
    ok_runs = [r for r in runs if ev("b", "!", "ok") in mandatory(r)]
    ko_runs = [r for r in runs if ev("b", "!", "ko") in mandatory(r)]
    assert len(ok_runs) == 1 and len(ko_runs) == 1
    r = ok_runs[0]
    from chorus_wsi.syntax.ast import STR
    assert mandatory(r)[:2] == (ev("c", "!", "login", STR),
                                ev("b", "?", "login", STR))


def test_runs_global_one_loop_shapes():
    from chorus_wsi.syntax.ast import GBranch, GChoice, GIter
    body = GChoice("p", (GBranch("q", "a", INT, GEnd()),))
    g = GIter(body, "p", (("q", "t", UNIT),))
    runs = runs_global(g, 2)
    assert len(runs) == 2
    term = (ev("p", "!", "t"), ev("q", "?", "t"))
    one = (ev("p", "!", "a", INT), ev("q", "?", "a", INT)) + term
    two = (ev("p", "!", "a", INT), ev("q", "?", "a", INT),
           Opt((ev("p", "!", "a", INT), ev("q", "?", "a", INT)))) + term
    assert runs == frozenset({one, two})


# --------------------------------------------------------------- runs_spec

def test_runs_spec_end_only_empty_queues():
    delta = SpecEnv.make({}, {(("y",), "p"): TEnd()}, {"y": ()})
    assert runs_spec(delta, ("y",), 1) == frozenset({()})


def test_runs_spec_single_communication():
    delta = SpecEnv.make({}, {
        (("y",), "p"): parse_type("y!(Int). end"),
        (("y",), "q"): parse_type("y?(Int). end"),
    }, {"y": ()})
    runs = runs_spec(delta, ("y",), 1)
    assert runs == frozenset({(ev("p", "!", "y", INT), ev("q", "?", "y", INT))})


def test_runs_spec_atm_covers_global(atm, atm_domains):
    gdef = atm.globals_["G_ATM"]
    g = instantiate(gdef, gdef.params)
    rg = runs_global(g, 1)
    rs = runs_spec(projection_env(gdef, atm_domains), gdef.params, 1,
                   atm_domains)
    assert covers(rg, rs).holds()


@pytest.mark.parametrize("unfold", [1, 2])
def test_coverage_pop2(pop2, pop2_domains, unfold):
    gdef = pop2.globals_["G_POP"]
    g = instantiate(gdef, gdef.params)
    rg = runs_global(g, unfold)
    rs = runs_spec(projection_env(gdef, pop2_domains), gdef.params, unfold,
                   pop2_domains)
    assert covers(rg, rs).holds()


# --------------------------------------------------------------- runs_impl

def test_runs_impl_terminated_is_empty_run(pop2, pop2_domains):
    from chorus_wsi.syntax.ast import Branch
    iota = {"c": Branch(()), "s": Branch(())}
    runs = runs_impl(iota, "u", pop2.globals_["G_POP"], pop2_domains,
                     validate=False)
    assert runs == frozenset({()})


def test_runs_impl_quit_client(pop2, pop2_domains):
    iota = {"s": pop2.processes["Init"].body,
            "c": pop2.processes["CQuit"].body}
    runs = runs_impl(iota, "u", pop2.globals_["G_POP"], pop2_domains)
    quit_run = (ev("c", "!", "quit"), ev("s", "?", "quit"),
                ev("s", "!", "bye"), ev("c", "?", "bye"))
    assert quit_run in runs


def test_runs_impl_b2_never_sends_ok(atm, atm_domains):
    from chorus_wsi.syntax.ast import Arm, Branch, Const, Request, Seq, Send, str_lit, int_lit
    client = Request("atm", 1, ("login", "deposit", "overdraft", "ok", "ko"),
                     Seq(Send("login", Const(str_lit("good"))),
                         Seq(Send("overdraft", Const(int_lit(5))),
                             Branch((Arm("ok", "v1", Branch(())),
                                     Arm("ko", "v2", Branch(())))))))
    iota = {"b": atm.processes["B2"].body, "c": client}
    runs = runs_impl(iota, "atm", atm.globals_["G_ATM"], atm_domains)
    assert runs
    for r in runs:
        assert ev("b", "!", "ok") not in all_events(r)


def test_runs_impl_adequacy_replay(pop2, pop2_domains):
    """Every enumerated run embeds into a labelled execution of the
    driver with sort-respecting events."""
    from chorus_wsi.semantics import SysState, system_steps
    iota = {"s": pop2.processes["Init"].body,
            "c": pop2.processes["CQuit"].body}
    runs = runs_impl(iota, "u", pop2.globals_["G_POP"], pop2_domains)
    gdef = pop2.globals_["G_POP"]

    # replay: breadth-first over the driver, collecting event sequences
    state = SysState(tuple(enumerate([iota["c"], iota["s"]])), (), ())
    tags = {0: "c", 1: "s"}
    store = Store(tables=pop2_domains.tables)
    sequences = set()

    def explore(state, store, session, acc):
        succ = system_steps(state, store, pop2_domains)
        if not succ:
            sequences.add(acc)
        for label, st2, sto2, det in succ:
            session2 = session
            ev_item = None
            act = det.action
            if act.kind == "req" and act.shared == "u" and session is None:
                session2 = act.chans
            elif act.kind in ("out", "in") and session and det.component in tags \
                    and act.channel in session:
                names = dict(zip(session, gdef.params))
                ev_item = Event(tags[det.component],
                                "!" if act.kind == "out" else "?",
                                names[act.channel], act.value.sort)
            explore(st2, sto2, session2, acc + ((ev_item,) if ev_item else ()))

    explore(state, store, None, ())
    for r in runs:
        assert r in sequences


# ------------------------------------------------------------ trace preorder

def test_optional_below_empty():
    assert trace_leq((Opt((ev("p", "!", "a"),)),), ())


def test_empty_below_anything():
    assert trace_leq((), (ev("p", "!", "a"), ev("q", "?", "b")))


def test_optional_tail_drops_or_matches():
    r1 = (ev("p", "!", "a"), Opt((ev("q", "?", "a"),)))
    flat = (ev("p", "!", "a"), ev("q", "?", "a"))
    head = (ev("p", "!", "a"),)
    assert trace_leq(r1, flat)
    assert trace_leq(r1, head)
    assert not trace_leq(flat, head)


def test_permutation_soundness():
    a = ev("p", "!", "a")
    b = ev("q", "?", "b")
    assert independent(a, b)
    assert trace_leq((a, b), (b, a))
    assert trace_leq((b, a), (a, b))
    c = ev("p", "?", "b")  # same participant as a, same channel as b
    assert not trace_leq((a, c), (c, a)) or not independent(a, c)


def test_dependent_events_do_not_commute():
    a = ev("p", "!", "a")
    a2 = ev("q", "?", "a")  # same channel
    assert not trace_leq((a, a2), (a2, a))


@pytest.mark.parametrize("seed", range(60))
def test_preorder_reflexive(seed):
    rng = random.Random(seed + 7000)
    r = gen.gen_run(rng, rng.randint(0, 5))
    assert trace_leq(r, r)


@pytest.mark.parametrize("seed", range(120))
def test_preorder_transitive(seed):
    rng = random.Random(seed + 8000)
    r1 = gen.gen_run(rng, rng.randint(0, 3))
    r2 = gen.gen_run(rng, rng.randint(0, 3))
    r3 = gen.gen_run(rng, rng.randint(0, 3))
    if trace_leq(r1, r2) and trace_leq(r2, r3):
        assert trace_leq(r1, r3), (run_str(r1), run_str(r2), run_str(r3))


@pytest.mark.parametrize("seed", range(80))
def test_permutation_soundness_sampled(seed):
    """Swapping adjacent independent events preserves the preorder in
    both directions."""
    rng = random.Random(seed + 9000)
    events = tuple(gen.gen_event(rng) for _ in range(rng.randint(2, 5)))
    positions = [i for i in range(len(events) - 1)
                 if independent(events[i], events[i + 1])]
    if not positions:
        return
    i = rng.choice(positions)
    swapped = events[:i] + (events[i + 1], events[i]) + events[i + 2:]
    assert trace_leq(events, swapped)
    assert trace_leq(swapped, events)
    other = tuple(gen.gen_event(rng) for _ in range(rng.randint(0, 4)))
    assert trace_leq(events, other) == trace_leq(swapped, other)
    assert trace_leq(other, events) == trace_leq(other, swapped)


def test_not_an_implementation_missing_role(pop2, pop2_domains):
    from chorus_wsi.traces import NotAnImplementation
    with pytest.raises(NotAnImplementation):
        runs_impl({"s": pop2.processes["Init"].body}, "u",
                  pop2.globals_["G_POP"], pop2_domains)


def test_not_an_implementation_wrong_role(pop2, pop2_domains):
    from chorus_wsi.traces import NotAnImplementation
    iota = {"s": pop2.processes["CQuit"].body,  # a requester cannot play s
            "c": pop2.processes["Init"].body}
    with pytest.raises(NotAnImplementation) as err:
        runs_impl(iota, "u", pop2.globals_["G_POP"], pop2_domains)
    assert err.value.clause == "unique-role"


# ------------------------------------ brute-force oracle for the preorder

def _items_independent(i1, i2) -> bool:
    evs1 = all_events((i1,))
    evs2 = all_events((i2,))
    return all(independent(x, y) for x in evs1 for y in evs2)


import functools


@functools.lru_cache(maxsize=None)
def class_of(run: tuple, cap: int = 2000) -> frozenset:
    """All runs reachable by swapping adjacent independent items."""
    seen = {run}
    frontier = [run]
    while frontier and len(seen) < cap:
        r = frontier.pop()
        for i in range(len(r) - 1):
            if _items_independent(r[i], r[i + 1]):
                swapped = r[:i] + (r[i + 1], r[i]) + r[i + 2:]
                if swapped not in seen:
                    seen.add(swapped)
                    frontier.append(swapped)
    return frozenset(seen)


def derivable(a: tuple, b: tuple, memo=None) -> bool:
    """Direct derivability in the preorder's rule system (refl, drop,
    emp, cmp) on a fixed pair of item sequences."""
    if memo is None:
        memo = {}
    key = (a, b)
    if key in memo:
        return memo[key]
    memo[key] = False
    if a == b or not a:
        memo[key] = True
        return True
    if len(a) == 1 and isinstance(a[0], Opt) and not b:
        memo[key] = True
        return True
    for i in range(len(a) + 1):
        for j in range(len(b) + 1):
            if (i, j) == (0, 0) or (i, j) == (len(a), len(b)):
                continue
            if derivable(a[:i], b[:j], memo) and derivable(a[i:], b[j:], memo):
                memo[key] = True
                return True
    return memo[key]


def oracle_leq(r1: tuple, r2: tuple) -> bool:
    reps2 = class_of(r2)
    return any(derivable(a, b) for a in class_of(r1) for b in reps2)


@pytest.mark.parametrize("seed", range(120))
def test_matcher_agrees_with_oracle_sampled(seed):
    rng = random.Random(seed)
    r1 = gen.gen_run(rng, rng.randint(0, 4))
    r2 = gen.gen_run(rng, rng.randint(0, 4))
    assert trace_leq(r1, r2) == oracle_leq(r1, r2), (run_str(r1), run_str(r2))


def enumerate_runs(events, max_events, allow_opt=True):
    """All annotated runs with at most max_events events (optional
    segments one level deep)."""
    if max_events == 0:
        return [()]
    out = [()]
    for e in events:
        for rest in enumerate_runs(events, max_events - 1, allow_opt):
            out.append((e,) + rest)
    if allow_opt:
        for k in range(1, max_events + 1):
            for inner in enumerate_runs(events, k, False):
                if len(inner) != k:
                    continue
                for rest in enumerate_runs(events, max_events - k, allow_opt):
                    out.append((Opt(inner),) + rest)
    return out


def test_matcher_agrees_with_oracle_exhaustive_small():
    events = [ev("p", "!", "a"), ev("q", "?", "a"), ev("p", "!", "b")]
    universe = {r for r in enumerate_runs(events, 2)}
    assert len(universe) > 30
    for r1 in universe:
        for r2 in universe:
            assert trace_leq(r1, r2) == oracle_leq(r1, r2), \
                (run_str(r1), run_str(r2))


# ----------------------------------------------------------------- covering

def test_covers_empty_set():
    assert covers(frozenset(), frozenset({(ev("p", "!", "a"),)})).holds()


def test_covers_reports_missing_run():
    r = (ev("p", "!", "a"),)
    verdict = covers(frozenset({r}), frozenset({()}))
    assert isinstance(verdict, MissingRun)
    assert verdict.run == r
