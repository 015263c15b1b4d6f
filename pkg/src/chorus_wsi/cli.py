"""Command-line front end.

Exit codes: 0 on success (analysis holds), 1 on an analysis rejection
(typing error, covering failure, simulation counterexample), 2 on usage
or parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .guards import DomainDecl, Store
from .projection import NonProjectable, participants, project, well_formed
from .pseudotype import normal_form, remove_guards
from .semantics import system_steps, to_state
from .syntax import parse_module, render_module, render_type
from .syntax.ast import Event, GlobalDef, ModuleDecl, TRUE
from .syntax.parser import ParseError
from .traces import covers, projection_env, run_str, runs_global, runs_spec
from .typecheck import (
    TypingError, gamma_from_domains, instantiate, typecheck_process,
    typecheck_system,
)
from .syntax.ast import fU
from .wsi import wsi_by_covering, wsi_by_typing


def _color(text: str, code: str) -> str:
    if os.environ.get("CHORUS_COLOR") == "1":
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


def _ok(text: str) -> str:
    return _color(text, "32")


def _bad(text: str) -> str:
    return _color(text, "31")


def _load(path: str) -> ModuleDecl:
    return parse_module(Path(path).read_text())


def _the_global(module: ModuleDecl, name: str | None) -> GlobalDef:
    if name is not None:
        if name not in module.globals_:
            raise SystemExit(f"error: no global type named {name!r}")
        return module.globals_[name]
    entries = [g for g in module.globals_.values() if g.params]
    if len(entries) != 1:
        raise SystemExit("error: module declares several entry globals; "
                         "pick one with --global")
    return entries[0]


def _shared_env(module: ModuleDecl, gdef: GlobalDef, term) -> dict:
    return {u: gdef for u in fU(term)} or {"u": gdef}


def run_to_json(run: tuple) -> list:
    out = []
    for item in run:
        if isinstance(item, Event):
            out.append({"p": item.participant, "dir": item.polarity,
                        "chan": item.channel, "sort": str(item.sort)})
        else:
            out.append({"opt": run_to_json(item.items)})
    return out


# ---------------------------------------------------------------- commands

def cmd_parse(args) -> int:
    module = _load(args.file)
    if args.json:
        print(json.dumps({
            "domains": sorted(module.domains),
            "tables": sorted(module.tables),
            "globals": sorted(module.globals_),
            "types": sorted(module.types),
            "processes": sorted(module.processes),
            "systems": sorted(module.systems),
        }, indent=2))
    else:
        print(render_module(module), end="")
    return 0


def cmd_project(args) -> int:
    module = _load(args.file)
    domains = DomainDecl.from_module(module)
    gdef = _the_global(module, args.global_name)
    g = instantiate(gdef, gdef.params)
    if args.role not in participants(g):
        print(_bad(f"{args.role!r} is not a participant of {gdef.name}"))
        return 1
    violations = well_formed(g)
    if violations:
        for v in violations:
            print(_bad(str(v)))
        return 1
    try:
        local = remove_guards(normal_form(project(g, args.role), domains))
    except NonProjectable as exc:
        print(_bad(f"not projectable: {exc}"))
        return 1
    if args.json:
        print(json.dumps({"role": args.role, "type": render_type(local)}))
    else:
        print(render_type(local))
    return 0


def cmd_normalize(args) -> int:
    module = _load(args.file)
    domains = DomainDecl.from_module(module)
    names = [args.type_name] if args.type_name else sorted(module.types)
    out = {}
    for name in names:
        if name not in module.types:
            raise SystemExit(f"error: no type named {name!r}")
        out[name] = render_type(normal_form(module.types[name], domains))
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for name in names:
            print(f"{name} = {out[name]}")
    return 0


def cmd_typecheck(args) -> int:
    module = _load(args.file)
    domains = DomainDecl.from_module(module)
    gamma = gamma_from_domains(domains)
    failures = []
    results = {}

    targets = []
    if args.proc:
        targets.append(("process", args.proc))
    if args.system:
        targets.append(("system", args.system))
    if not targets:
        targets = [("process", n) for n, d in module.processes.items() if d.role]
        targets += [("system", n) for n in module.systems]

    entry_globals = [g for g in module.globals_.values() if g.params]

    def system_global_candidates():
        if args.global_name:
            return [_the_global(module, args.global_name)]
        return entry_globals or [_the_global(module, None)]

    for kind, name in targets:
        try:
            if kind == "process":
                decl = module.processes[name]
                gdef = module.globals_[decl.global_name] if decl.global_name \
                    else _the_global(module, None)
                shared = _shared_env(module, gdef, decl.body)
                typecheck_process(gamma, TRUE, decl.body, shared, domains)
            else:
                body = module.systems[name].body
                # without --global, try each entry global until one fits
                last_error = None
                for gdef in system_global_candidates():
                    shared = _shared_env(module, gdef, body)
                    try:
                        typecheck_system(gamma, TRUE, body, shared, domains)
                        last_error = None
                        break
                    except TypingError as exc:
                        last_error = exc
                if last_error is not None:
                    raise last_error
            results[name] = {"ok": True}
            print(_ok(f"{name}: well typed"))
        except KeyError:
            raise SystemExit(f"error: no {kind} named {name!r}")
        except TypingError as exc:
            results[name] = {"ok": False, **exc.to_json()}
            failures.append(name)
            print(_bad(f"{name}: {exc}"))
    if args.json:
        print(json.dumps(results, indent=2))
    return 1 if failures else 0


def cmd_simulate(args) -> int:
    from .syntax.ast import Accept, Request, Seq

    module = _load(args.file)
    domains = DomainDecl.from_module(module)
    if args.system not in module.systems:
        raise SystemExit(f"error: no system named {args.system!r}")
    state = to_state(module.systems[args.system].body)
    rng = random.Random(args.seed)
    init_vars = {
        var: sorted(values, key=str)[rng.randrange(len(values))]
        for var, values in sorted(domains.domains.items())
    }
    store = Store(vars=init_vars, tables=domains.tables)

    participants = {}
    for pid, proc in state.procs:
        head = proc.first if isinstance(proc, Seq) else proc
        if isinstance(head, Accept):
            participants[pid] = head.role
        elif isinstance(head, Request):
            try:
                gdef = _the_global(module, args.global_name)
                g = instantiate(gdef, gdef.params)
                from .typecheck import participants_ordered
                participants[pid] = participants_ordered(g)[0]
            except SystemExit:
                pass

    trace = []
    for step in range(args.steps):
        succ = system_steps(state, store, domains)
        if not succ:
            break
        label, state2, store2, detail = succ[rng.randrange(len(succ))]
        delta_vars = {k: str(v) for k, v in store2.vars.items()
                      if store.vars.get(k) != v}
        entry = {"label": str(detail.action),
                 "component": detail.component,
                 "store-delta": delta_vars}
        if detail.component in participants:
            entry["participant"] = participants[detail.component]
        trace.append(entry)
        state, store = state2, store2
    terminated = state.is_terminated()
    if args.trace:
        Path(args.trace).write_text(json.dumps(trace, indent=2) + "\n")
    for entry in trace:
        print(f"[{entry['component']}] {entry['label']}")
    print(("terminated" if terminated else "stopped") + f" after {len(trace)} steps")
    return 0


def cmd_traces(args) -> int:
    module = _load(args.file)
    domains = DomainDecl.from_module(module)
    gdef = _the_global(module, args.global_name)
    g = instantiate(gdef, gdef.params)
    runs = sorted(runs_global(g, args.unfold), key=run_str)
    if args.json:
        print(json.dumps([run_to_json(r) for r in runs], indent=2))
    else:
        for r in runs:
            print(run_str(r))
        print(f"{len(runs)} runs at unfold bound {args.unfold}")
    return 0


def cmd_cover(args) -> int:
    module = _load(args.file)
    domains = DomainDecl.from_module(module)
    gdef = _the_global(module, args.global_name)
    g = instantiate(gdef, gdef.params)
    rg = runs_global(g, args.unfold)
    rs = runs_spec(projection_env(gdef, domains), gdef.params, args.unfold,
                   domains)
    verdict = covers(rg, rs)
    if args.json:
        payload = {"holds": verdict.holds(), "global-runs": len(rg),
                   "spec-runs": len(rs)}
        if not verdict.holds():
            payload["missing"] = run_to_json(verdict.run)
        print(json.dumps(payload, indent=2))
    if verdict.holds():
        print(_ok(f"Holds@{args.unfold}: {len(rg)} global runs covered by "
                  f"{len(rs)} specification runs"))
        return 0
    print(_bad(f"MissingRun: {run_str(verdict.run)}"))
    return 1


def cmd_wsi(args) -> int:
    module = _load(args.file)
    domains = DomainDecl.from_module(module)
    if args.proc not in module.processes:
        raise SystemExit(f"error: no process named {args.proc!r}")
    decl = module.processes[args.proc]
    gdef = module.globals_[decl.global_name] if decl.global_name \
        else _the_global(module, args.global_name)
    shared = sorted(fU(decl.body)) or ["u"]
    shared_name = shared[0]
    role = args.role or decl.role
    if role is None:
        raise SystemExit("error: give --role or declare 'plays' on the process")

    payload = {}
    code = 0
    if args.mode in ("typing", "both"):
        verdict = wsi_by_typing(gdef, role, decl.body, domains, shared_name)
        payload["typing"] = {"holds": verdict.holds(),
                             "detail": str(verdict)}
        print(("typing:   " + (_ok(str(verdict)) if verdict.holds()
                               else _bad(str(verdict)))))
        code = code or (0 if verdict.holds() else 1)
    if args.mode in ("covering", "both"):
        verdict = wsi_by_covering(gdef, role, decl.body, domains,
                                  unfold=args.unfold, step_bound=args.steps,
                                  shared_name=shared_name)
        payload["covering"] = {"holds": verdict.holds(), "detail": str(verdict)}
        if not verdict.holds() and verdict.missing:
            payload["covering"]["missing"] = run_to_json(verdict.missing)
        print(("covering: " + (_ok(str(verdict)) if verdict.holds()
                               else _bad(str(verdict)))))
        code = code or (0 if verdict.holds() else 1)
    if args.json:
        print(json.dumps(payload, indent=2))
    return code


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="chorus-wsi",
        description="Choreography projection, guard-sensitive session "
                    "typing, and whole-spectrum implementation checking.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, *, role=False, unfold=False, steps=False, seed=False,
               glob=False, mode=False):
        p.add_argument("file", help="a .chor module")
        p.add_argument("--json", action="store_true", help="machine output")
        if glob:
            p.add_argument("--global", dest="global_name", default=None,
                           help="entry global type (default: the unique one)")
        if role:
            p.add_argument("--role", default=None)
        if unfold:
            p.add_argument("--unfold", type=int, default=2, metavar="K")
        if steps:
            p.add_argument("--steps", type=int, default=200, metavar="N")
        if seed:
            p.add_argument("--seed", type=int, default=0, metavar="S")
        if mode:
            p.add_argument("--mode", choices=("typing", "covering", "both"),
                           default="both")

    p = sub.add_parser("parse", help="parse and reprint a module")
    common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("project", help="project a global type on a role")
    common(p, role=True, glob=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("normalize", help="normal forms of declared types")
    common(p)
    p.add_argument("--type", dest="type_name", default=None)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("typecheck", help="typecheck processes and systems")
    common(p, glob=True)
    p.add_argument("--proc", default=None)
    p.add_argument("--system", default=None)
    p.set_defaults(func=cmd_typecheck)

    p = sub.add_parser("simulate", help="seeded execution of a system")
    common(p, steps=True, seed=True, glob=True)
    p.add_argument("--system", required=True)
    p.add_argument("--trace", default=None, metavar="OUT.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("traces", help="annotated runs of a global type")
    common(p, unfold=True, glob=True)
    p.set_defaults(func=cmd_traces)

    p = sub.add_parser("cover", help="check runs(G) covered by its projections")
    common(p, unfold=True, glob=True)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("wsi", help="whole-spectrum implementation verdicts")
    common(p, role=True, unfold=True, steps=True, glob=True, mode=True)
    p.add_argument("--proc", required=True)
    p.set_defaults(func=cmd_wsi)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(_bad(f"{args.file}:{exc}"), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(_bad(f"error: {exc}"), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
