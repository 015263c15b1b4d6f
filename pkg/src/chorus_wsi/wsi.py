"""The two whole-spectrum-implementation verdict paths.

By typing: a process that typechecks against the global type is a WSI
of its role.  By covering: synthesize, for every maximal run of the
global type at the unfold bound, a deterministic set of peers that
drives exactly that run's choices, execute the resulting
implementations, and check that their runs cover the global type's
runs.  Peer synthesis hardcodes branch decisions per target run;
payload values that steer guarded branches of the candidate process
are searched over the declared finite domains.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .guards import DomainDecl, EMPTY_DOMAINS
from .projection import project
from .pseudotype import viable
from .syntax.ast import (
    Accept, Arm, Branch, Const, GlobalDef, Lit, Process, Request, Send,
    Seq, TRUE,
)
from .traces import (
    MissingRun, covers, mandatory, run_str, runs_global, runs_impl,
)
from .typecheck import (
    TypingError, gamma_from_domains, instantiate, participants_ordered,
    typecheck_process,
)


class NonViable(Exception):
    pass


@dataclass(frozen=True)
class TypingVerdict:
    ok: bool
    role: str
    error: TypingError | None = None

    def holds(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return f"Holds (typing validates the role {self.role!r})"
        return f"Rejected: {self.error}"


@dataclass(frozen=True)
class CoveringVerdict:
    ok: bool
    unfold: int
    missing: tuple | None = None
    reason: str | None = None
    contexts: tuple = ()

    def holds(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return f"Holds@{self.unfold} ({len(self.contexts)} contexts)"
        detail = f": {self.reason}" if self.reason else ""
        return f"MissingRun {run_str(self.missing)}{detail}"


def wsi_by_typing(gdef: GlobalDef, role: str, proc: Process,
                  domains: DomainDecl = EMPTY_DOMAINS,
                  shared_name: str = "u") -> TypingVerdict:
    """WSI by typing: a well-typed process covers its role's whole
    spectrum."""
    gamma = gamma_from_domains(domains)
    try:
        typecheck_process(gamma, TRUE, proc, {shared_name: gdef}, domains)
    except TypingError as exc:
        return TypingVerdict(False, role, exc)
    return TypingVerdict(True, role)


# ----------------------------------------------------------- peer synthesis

def _default_value(sort) -> Lit:
    return {
        "Int": Lit(sort, 0), "Bool": Lit(sort, False), "Str": Lit(sort, ""),
        "Unit": Lit(sort, None), "Data": Lit(sort, b""),
        "List": Lit(sort, ()),
    }[sort.kind]


def _chain(events: list, values: dict, binder_seed: list) -> Process:
    """A straight-line process performing the given events in order."""
    proc: Process = Branch(())
    for idx, ev in reversed(list(enumerate(events))):
        if ev.polarity == "!":
            send = Send(ev.channel, Const(values[idx]))
            is_nil = isinstance(proc, Branch) and not proc.arms
            proc = send if is_nil else Seq(send, proc)
        else:
            binder_seed[0] += 1
            proc = Branch((Arm(ev.channel, f"v{binder_seed[0]}", proc),))
    return proc


def synthesize_contexts(gdef: GlobalDef, role: str, proc: Process,
                        domains: DomainDecl = EMPTY_DOMAINS, unfold: int = 1,
                        search_cap: int = 256, shared_name: str = "u"):
    """One candidate family of peer assignments per maximal run: a list
    of (target run, generator of iota mappings) where every iota maps
    the checked role to `proc` and each other role to a deterministic
    straight-line peer driving that run's mandatory events."""
    g = instantiate(gdef, gdef.params)
    parts = participants_ordered(g)
    if role not in parts:
        raise NonViable(f"{role!r} is not a participant of {gdef.name}")
    for q in parts:
        if q == role:
            continue
        if not viable(project(g, q), domains):
            raise NonViable(f"projection of {gdef.name} on {q!r} is not viable")

    targets = sorted(runs_global(g, unfold), key=run_str)
    jobs = []
    seen_skeletons = set()
    for target in targets:
        skeleton = mandatory(target)
        if skeleton in seen_skeletons:
            continue
        seen_skeletons.add(skeleton)
        jobs.append((target, _iota_candidates(
            gdef, parts, role, proc, skeleton, domains, search_cap,
            shared_name)))
    return jobs


def _iota_candidates(gdef, parts, role, proc, skeleton, domains, cap,
                     shared_name):
    """Iota mappings for one target skeleton: the peers' control
    structure is fixed; their send payloads range over declared-domain
    candidates, with guard-steering sorts (Str, Bool) varying first."""
    peer_events = {q: [ev for ev in skeleton if ev.participant == q]
                   for q in parts if q != role}
    send_positions = []  # (peer, event index, candidate values)
    for q, events in peer_events.items():
        for idx, ev in enumerate(events):
            if ev.polarity != "!":
                continue
            pool = domains.values_of_sort(ev.sort)
            candidates = list(dict.fromkeys(
                list(pool) + [_default_value(ev.sort)]))
            send_positions.append((q, idx, ev.sort, candidates))
    # itertools.product varies the last factor fastest: put the
    # payloads most likely to steer guards there
    send_positions.sort(key=lambda entry: entry[2].kind in ("Str", "Bool"))

    def build(assignment: dict):
        iota = {role: proc}
        binder_seed = [0]
        for q, events in peer_events.items():
            values = {idx: assignment.get((q, idx)) for idx, _ in enumerate(events)}
            body = _chain(events, values, binder_seed)
            if q == parts[0]:
                iota[q] = Request(shared_name, len(parts) - 1,
                                  tuple(gdef.params), body)
            else:
                iota[q] = Accept(shared_name, q, tuple(gdef.params), body)
        return iota

    def gen():
        pools = [cands for _, _, _, cands in send_positions]
        for count, combo in enumerate(itertools.product(*pools)):
            if count >= cap:
                return
            assignment = dict()
            for (q, idx, _, _), value in zip(send_positions, combo):
                assignment[(q, idx)] = value
            yield build(assignment)

    return gen


def wsi_by_covering(gdef: GlobalDef, role: str, proc: Process,
                    domains: DomainDecl = EMPTY_DOMAINS, unfold: int = 1,
                    step_bound: int = 300, shared_name: str = "u",
                    search_cap: int = 256) -> CoveringVerdict:
    """WSI via bounded trace covering over synthesized contexts."""
    g = instantiate(gdef, gdef.params)
    if participants_ordered(g) == ():
        # the finished choreography is covered by the empty context
        return CoveringVerdict(True, unfold, contexts=((),))
    try:
        jobs = synthesize_contexts(gdef, role, proc, domains, unfold,
                                   search_cap, shared_name)
    except NonViable as exc:
        return CoveringVerdict(False, unfold, missing=(), reason=str(exc))
    achieved: set = set()
    used = []
    all_runs = runs_global(g, unfold)
    for target, candidates in jobs:
        if any(covers([target], [r]).holds() for r in achieved):
            continue
        found = False
        for iota in candidates():
            runs = runs_impl(iota, shared_name, gdef, domains,
                             step_bound=step_bound)
            hits = [r for r in runs if covers([target], [r]).holds()]
            if hits:
                achieved |= set(runs)
                used.append(iota)
                found = True
                break
        if not found:
            return CoveringVerdict(
                False, unfold, missing=target,
                reason="branch unreachable under declared domains")
    verdict = covers(all_runs, achieved)
    if isinstance(verdict, MissingRun):
        return CoveringVerdict(False, unfold, missing=verdict.run,
                               reason="no synthesized context produced a "
                               "covering run")
    return CoveringVerdict(True, unfold, contexts=tuple(
        tuple(sorted(i.keys())) for i in used))
