from chorus_wsi.guards import Store
from chorus_wsi.semantics import (
    Counterexample, Holds, conditional_simulation, step_process,
    step_spec, step_system, system_steps, to_state,
)
from chorus_wsi.syntax import parse_expr, parse_process, parse_module, parse_type
from chorus_wsi.syntax.ast import Branch, INT, Proc, TRUE, int_lit
from chorus_wsi.typecheck import SpecEnv, gamma_from_domains, typecheck_system

import gen
import srcheck

D = gen.GUARD_DOMAINS


def test_step_send_evaluates_payload():
    p = parse_process("y!(1 + 1)")
    steps = step_process(p, Store(), D)
    assert len(steps) == 1
    label, cont, _ = steps[0]
    assert label.kind == "out" and label.channel == "y"
    assert label.value == int_lit(2)
    assert cont == Branch(())


def test_step_nil_is_stuck():
    assert step_process(Branch(()), Store(), D) == []


def test_step_if_records_guard():
    p = parse_process("if x > 0 then y!(1) else z!(0)")
    steps = step_process(p, Store({"x": int_lit(2)}), D)
    assert len(steps) == 1
    label, _, _ = steps[0]
    assert label.kind == "out" and label.channel == "y"
    assert label.guard == parse_expr("x > 0")


def test_step_else_records_negated_guard():
    p = parse_process("if x > 0 then y!(1) else z!(0)")
    steps = step_process(p, Store({"x": int_lit(0)}), D)
    label, _, _ = steps[0]
    assert label.channel == "z"
    assert label.guard == parse_expr("not x > 0")


def test_step_receive_uses_oracle():
    p = parse_process("y?(v). z!(v)")
    steps = step_process(p, Store(), D, oracle=lambda chan: [int_lit(7)])
    assert len(steps) == 1
    label, cont, store = steps[0]
    assert label.kind == "in" and label.value == int_lit(7)
    assert store.vars["v"] == int_lit(7)


def test_step_for_unfolds_and_ends():
    p = parse_process("for i in 1..2 { y!(i) }")
    steps = step_process(p, Store(), D)
    assert len(steps) == 1
    label, cont, _ = steps[0]
    assert label.kind == "out" and label.value == int_lit(1)
    empty = parse_process("for i in 1..0 { y!(i) }")
    steps = step_process(empty, Store(), D)
    assert [l.kind for l, _, _ in steps] == ["tau"]


def test_system_init_creates_queues(atm, atm_domains):
    state = to_state(atm.systems["ATM_DEP"].body)
    store = Store(tables=atm_domains.tables)
    succ = system_steps(state, store, atm_domains)
    assert len(succ) == 1
    label, state2, store2, detail = succ[0]
    assert label.kind == "tau" and detail.action.kind == "req"
    assert len(state2.queues) == 5
    assert all(q == () for _, q in state2.queues)
    assert detail.action.shared == "atm"
    assert set(detail.action.chans) <= store2.domain() | set(
        y for ys in store2.sessions.values() for y in ys)


def test_system_queue_communication(pop2, pop2_domains):
    state = to_state(pop2.systems["POP_QUIT"].body)
    store = Store(tables=pop2_domains.tables)
    path = []
    for _ in range(10):
        succ = system_steps(state, store, pop2_domains)
        if not succ:
            break
        label, state, store, detail = succ[0]
        path.append(detail.action)
    assert state.is_terminated()
    kinds = [a.kind for a in path]
    assert kinds == ["req", "out", "in", "out", "in"]
    chans = [a.channel for a in path if a.channel]
    assert [c.split("@")[0].rsplit("_", 1)[0] for c in chans] == \
        ["quit", "quit", "bye", "bye"]


def test_closed_terminated_system_stuck():
    state = to_state(Proc(Branch(())))
    assert step_system(state, Store(), D) == []


def test_step_spec_internal_choice_per_live_branch():
    t = parse_type("e!(). end (+) r!(Int). end")
    delta = SpecEnv.make({}, {(("e", "r"), "s"): t}, {})
    steps = step_spec({}, delta, D)
    outs = [(l.channel, str(l.sort)) for l, _ in steps if l.kind == "out"]
    assert sorted(outs) == [("e", "Unit"), ("r", "Int")]


def test_step_spec_empty():
    assert step_spec({}, SpecEnv.make({}, {}, {}), D) == []


def test_step_spec_tinit_adds_projections(pop2, pop2_domains):
    delta = SpecEnv.make({"u": pop2.globals_["G_POP"]}, {}, {})
    steps = step_spec({}, delta, pop2_domains)
    taus = [d for l, d in steps if l.kind == "tau" and l.shared == "u"]
    assert len(taus) == 1
    d2 = taus[0]
    roles = sorted(role for (_, role), _ in d2.sessions)
    assert roles == ["c", "s"]
    assert len(d2.queue_map()) == 12


def test_step_spec_queue_communication():
    t = parse_type("y!(Int). end")
    partner = parse_type("y?(Int). end")
    delta = SpecEnv.make({}, {(("y",), "p"): t, (("y",), "q"): partner},
                         {"y": ()})
    first = step_spec({}, delta, D)
    sends = [(l, d) for l, d in first if l.comm and l.comm[0] == "out"]
    assert len(sends) == 1
    label, d2 = sends[0]
    assert d2.queue_map()["y"] == (INT,)
    second = step_spec({}, d2, D)
    recvs = [(l, d) for l, d in second if l.comm and l.comm[0] == "in"]
    assert len(recvs) == 1
    assert recvs[0][1].queue_map()["y"] == ()


def test_simulation_trivial():
    verdict = conditional_simulation(Proc(Branch(())), Store(), {},
                                     SpecEnv.make({}, {}, {}), D, depth=5)
    assert isinstance(verdict, Holds)


def test_simulation_corpus_systems(pop2, atm, multiparty, pop2_domains,
                                   atm_domains, multiparty_domains):
    cases = [
        (pop2, pop2_domains, "POP_FULL", {"u": pop2.globals_["G_POP"]}),
        (atm, atm_domains, "ATM_B1C", {"atm": atm.globals_["G_ATM"]}),
        (multiparty, multiparty_domains, "POP_M_RUN",
         {"u": multiparty.globals_["G_POP_P"]}),
    ]
    for module, domains, name, shared in cases:
        gamma = gamma_from_domains(domains)
        sysd = module.systems[name].body
        delta = typecheck_system(gamma, TRUE, sysd, shared, domains)
        store = next(domains.assignments(sorted(domains.domains)))
        verdict = conditional_simulation(sysd, store, gamma, delta, domains,
                                         depth=40)
        assert verdict.holds(), (name, verdict)


def test_simulation_counterexample_on_channel_mutation(pop2, pop2_domains):
    import conftest
    text = (conftest.CORPUS / "pop2.chor").read_text()
    mutated = parse_module(text.replace("process Exit = bye!()",
                                        "process Exit = r!(0)"))
    gamma = gamma_from_domains(pop2_domains)
    shared = {"u": pop2.globals_["G_POP"]}
    delta = typecheck_system(gamma, TRUE, pop2.systems["POP_FULL"].body,
                             shared, pop2_domains)
    store = next(pop2_domains.assignments(sorted(pop2_domains.domains)))
    verdict = conditional_simulation(mutated.systems["POP_FULL"].body, store,
                                     gamma, delta, pop2_domains, depth=40)
    assert isinstance(verdict, Counterexample)
    assert verdict.action.kind == "out"


def test_subject_reduction_fuzz_sample(pop2, atm, pop2_domains, atm_domains):
    cases = [
        (pop2, pop2_domains, {"u": pop2.globals_["G_POP"]},
         pop2.processes["Init"].body),
        (pop2, pop2_domains, {"u": pop2.globals_["G_POP"]},
         pop2.processes["CPop"].body),
        (atm, atm_domains, {"atm": atm.globals_["G_ATM"]},
         atm.processes["B1"].body),
        (atm, atm_domains, {"atm": atm.globals_["G_ATM"]},
         atm.processes["CATM"].body),
    ]
    steps = srcheck.fuzz_corpus(cases, runs=24, max_steps=50, seed0=100)
    assert steps > 50
