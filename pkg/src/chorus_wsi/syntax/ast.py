"""Abstract syntax for the five object languages.

Expressions, global types (choreographies), pseudo-types (guarded local
types), processes, and systems.  All nodes are frozen dataclasses: trees
are immutable, hashable, and safely shareable.

Conventions:
- participants, channels, shared names, and variables are plain strings
  drawn from disjoint syntactic positions;
- a local type is a pseudo-type whose guards are all the literal true
  (see `is_local`);
- the empty process 0 is the input choice with no arms (`NIL`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


# ---------------------------------------------------------------- sorts

@dataclass(frozen=True)
class Sort:
    """Payload sort: Int, Bool, Str, Unit, Data, or List(elem)."""

    kind: str
    elem: Optional["Sort"] = None

    def __post_init__(self):
        assert self.kind in ("Int", "Bool", "Str", "Unit", "Data", "List")
        assert (self.elem is not None) == (self.kind == "List")

    def __str__(self) -> str:
        if self.kind == "List":
            return f"[{self.elem}]"
        return self.kind


INT = Sort("Int")
BOOL = Sort("Bool")
STR = Sort("Str")
UNIT = Sort("Unit")
DATA = Sort("Data")


def list_sort(elem: Sort) -> Sort:
    return Sort("List", elem)


# ------------------------------------------------------------- literals

@dataclass(frozen=True)
class Lit:
    """A typed literal value.

    value is int for Int, bool for Bool, str for Str, None for Unit,
    bytes for Data, and a tuple of Lit for List sorts.
    """

    sort: Sort
    value: object

    def __str__(self) -> str:
        if self.sort == UNIT:
            return "()"
        if self.sort == BOOL:
            return "true" if self.value else "false"
        if self.sort == STR:
            return '"%s"' % str(self.value).replace('"', '\\"')
        if self.sort == DATA:
            return "0x%s" % bytes(self.value).hex()
        if self.sort.kind == "List":
            return "[%s]" % ", ".join(str(v) for v in self.value)
        return str(self.value)


UNIT_LIT = Lit(UNIT, None)
TRUE_LIT = Lit(BOOL, True)
FALSE_LIT = Lit(BOOL, False)


def int_lit(n: int) -> Lit:
    return Lit(INT, n)


def str_lit(s: str) -> Lit:
    return Lit(STR, s)


def bool_lit(b: bool) -> Lit:
    return TRUE_LIT if b else FALSE_LIT


# ---------------------------------------------------------- expressions

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Lit


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * and or = != < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    """Unary operator application.

    op is one of the built-ins (not, -, hd, tl) or the name of a table
    declared in the enclosing module.
    """

    op: str
    arg: "Expr"


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class Range:
    """Numerical range lo..hi, inclusive on both ends; endpoints are Int."""

    lo: "Expr"
    hi: "Expr"


Expr = Union[Var, Const, BinOp, UnOp, ListLit, Range]

TRUE = Const(TRUE_LIT)
FALSE = Const(FALSE_LIT)


def expr_vars(e: Expr) -> frozenset:
    """var(e): the variables occurring in e."""
    match e:
        case Var(name):
            return frozenset({name})
        case Const():
            return frozenset()
        case BinOp(_, left, right):
            return expr_vars(left) | expr_vars(right)
        case UnOp(_, arg):
            return expr_vars(arg)
        case ListLit(items):
            out: frozenset = frozenset()
            for it in items:
                out |= expr_vars(it)
            return out
        case Range(lo, hi):
            return expr_vars(lo) | expr_vars(hi)
    raise TypeError(f"not an expression: {e!r}")


def is_true(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == TRUE_LIT


def is_false(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == FALSE_LIT


def conj(e1: Expr, e2: Expr) -> Expr:
    """e1 and e2, eliding literal-true units."""
    if is_true(e1):
        return e2
    if is_true(e2):
        return e1
    return BinOp("and", e1, e2)


def disj(e1: Expr, e2: Expr) -> Expr:
    """e1 or e2, eliding literal-false units."""
    if is_false(e1):
        return e2
    if is_false(e2):
        return e1
    return BinOp("or", e1, e2)


def neg(e: Expr) -> Expr:
    if is_true(e):
        return FALSE
    if is_false(e):
        return TRUE
    return UnOp("not", e)


# --------------------------------------------------------- global types

@dataclass(frozen=True)
class GBranch:
    receiver: str
    channel: str
    sort: Sort
    cont: "GlobalType"


@dataclass(frozen=True)
class GChoice:
    """sender -> receivers over pairwise-distinct channels."""

    sender: str
    branches: tuple  # of GBranch, nonempty


@dataclass(frozen=True)
class GSeq:
    first: "GlobalType"
    second: "GlobalType"


@dataclass(frozen=True)
class GIter:
    """Controlled iteration (body)*^{controller -> term}.

    term lists, in declaration order, the termination signal (channel,
    sort) the controller sends to every other participant of the body.
    """

    body: "GlobalType"
    controller: str
    term: tuple  # of (participant, channel, Sort)


@dataclass(frozen=True)
class GEnd:
    pass


GlobalType = Union[GChoice, GSeq, GIter, GEnd]
G_END = GEnd()


def g_channels(g: GlobalType) -> frozenset:
    match g:
        case GChoice(_, branches):
            out = frozenset(b.channel for b in branches)
            for b in branches:
                out |= g_channels(b.cont)
            return out
        case GSeq(first, second):
            return g_channels(first) | g_channels(second)
        case GIter(body, _, term):
            return g_channels(body) | frozenset(t[1] for t in term)
        case GEnd():
            return frozenset()
    raise TypeError(f"not a global type: {g!r}")


# --------------------------------------------------------- pseudo-types

@dataclass(frozen=True)
class TBranch:
    guard: Expr
    channel: str
    sort: Sort
    cont: "PseudoType"


@dataclass(frozen=True)
class TInternal:
    """Guarded internal choice (+) over output prefixes.

    Unlike process branches, channels may repeat across branches: guard
    removal quotients branches by channel equality.
    """

    branches: tuple  # of TBranch, nonempty


@dataclass(frozen=True)
class TExternal:
    """Guarded external choice (&) over input prefixes."""

    branches: tuple  # of TBranch, nonempty


@dataclass(frozen=True)
class TSeq:
    first: "PseudoType"
    second: "PseudoType"


@dataclass(frozen=True)
class TIter:
    body: "PseudoType"


@dataclass(frozen=True)
class TEnd:
    guard: Expr = TRUE


PseudoType = Union[TInternal, TExternal, TSeq, TIter, TEnd]

T_END = TEnd()


def is_local(t: PseudoType) -> bool:
    """True when every guard in t is the literal true."""
    match t:
        case TEnd(guard):
            return is_true(guard)
        case TInternal(branches) | TExternal(branches):
            return all(is_true(b.guard) and is_local(b.cont) for b in branches)
        case TSeq(first, second):
            return is_local(first) and is_local(second)
        case TIter(body):
            return is_local(body)
    raise TypeError(f"not a pseudo-type: {t!r}")


def pt_channels(t: PseudoType) -> frozenset:
    """fY(T): session channels occurring in t."""
    match t:
        case TEnd():
            return frozenset()
        case TInternal(branches) | TExternal(branches):
            out: frozenset = frozenset()
            for b in branches:
                out |= frozenset({b.channel}) | pt_channels(b.cont)
            return out
        case TSeq(first, second):
            return pt_channels(first) | pt_channels(second)
        case TIter(body):
            return pt_channels(body)
    raise TypeError(f"not a pseudo-type: {t!r}")


def pt_vars(t: PseudoType) -> frozenset:
    """var(T): variables occurring in the guards of t."""
    match t:
        case TEnd(guard):
            return expr_vars(guard)
        case TInternal(branches) | TExternal(branches):
            out: frozenset = frozenset()
            for b in branches:
                out |= expr_vars(b.guard) | pt_vars(b.cont)
            return out
        case TSeq(first, second):
            return pt_vars(first) | pt_vars(second)
        case TIter(body):
            return pt_vars(body)
    raise TypeError(f"not a pseudo-type: {t!r}")


def dual(t: PseudoType) -> PseudoType:
    """Swap internal and external choices throughout."""
    match t:
        case TEnd():
            return t
        case TInternal(branches):
            return TExternal(tuple(
                TBranch(b.guard, b.channel, b.sort, dual(b.cont)) for b in branches))
        case TExternal(branches):
            return TInternal(tuple(
                TBranch(b.guard, b.channel, b.sort, dual(b.cont)) for b in branches))
        case TSeq(first, second):
            return TSeq(dual(first), dual(second))
        case TIter(body):
            return TIter(dual(body))
    raise TypeError(f"not a pseudo-type: {t!r}")


# ------------------------------------------------------------ processes

@dataclass(frozen=True)
class Request:
    shared: str
    arity: int
    chans: tuple  # of channel names
    cont: "Process"


@dataclass(frozen=True)
class Accept:
    shared: str
    role: str
    chans: tuple
    cont: "Process"


@dataclass(frozen=True)
class Send:
    channel: str
    payload: Expr


@dataclass(frozen=True)
class Arm:
    channel: str
    binder: str
    cont: "Process"


@dataclass(frozen=True)
class Branch:
    """Input-guarded choice; arms use pairwise-distinct channels.

    The empty branch is the terminated process 0.
    """

    arms: tuple = ()


@dataclass(frozen=True)
class Seq:
    first: "Process"
    second: "Process"


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Process"
    orelse: "Process"


@dataclass(frozen=True)
class For:
    binder: str
    items: Expr
    body: "Process"


@dataclass(frozen=True)
class RepeatUntil:
    body: "Branch"
    exit: "Branch"


Process = Union[Request, Accept, Send, Branch, Seq, If, For, RepeatUntil]

NIL = Branch(())


def is_nil(p: Process) -> bool:
    return isinstance(p, Branch) and not p.arms


# -------------------------------------------------------------- systems

@dataclass(frozen=True)
class Proc:
    process: Process


@dataclass(frozen=True)
class Par:
    left: "System"
    right: "System"


@dataclass(frozen=True)
class Queue:
    channel: str
    values: tuple  # of Lit


@dataclass(frozen=True)
class Restrict:
    chans: tuple
    shared: str
    scope: "System"


System = Union[Proc, Par, Queue, Restrict]


# ------------------------------------------------------ free/bound names

@dataclass(frozen=True)
class NameSets:
    """fn split by category: all, session channels, variables, shared.

    Shared names requested/accepted with a role also contribute the
    decorated name "u[p]" to `all` (requests decorate with role 0).
    """

    all: frozenset
    chans: frozenset
    vars: frozenset
    shared: frozenset


def _ns(all=frozenset(), chans=frozenset(), vars=frozenset(), shared=frozenset()):
    return NameSets(frozenset(all), frozenset(chans), frozenset(vars), frozenset(shared))


def _ns_union(a: NameSets, b: NameSets) -> NameSets:
    return NameSets(a.all | b.all, a.chans | b.chans, a.vars | b.vars, a.shared | b.shared)


def free_names(term) -> NameSets:
    """Free names, split into all/channels/variables/shared."""
    match term:
        case Request(shared, _, chans, cont):
            inner = free_names(cont)
            keep = inner.all - frozenset(chans)
            return NameSets(keep | {shared, f"{shared}[0]"},
                            inner.chans - frozenset(chans),
                            inner.vars, inner.shared | {shared})
        case Accept(shared, role, chans, cont):
            inner = free_names(cont)
            keep = inner.all - frozenset(chans)
            return NameSets(keep | {shared, f"{shared}[{role}]"},
                            inner.chans - frozenset(chans),
                            inner.vars, inner.shared | {shared})
        case Send(channel, payload):
            vs = expr_vars(payload)
            return _ns({channel} | vs, {channel}, vs)
        case Branch(arms):
            out = _ns()
            for arm in arms:
                inner = free_names(arm.cont)
                pruned = NameSets(inner.all - {arm.binder}, inner.chans,
                                  inner.vars - {arm.binder}, inner.shared)
                out = _ns_union(out, _ns_union(_ns({arm.channel}, {arm.channel}), pruned))
            return out
        case Seq(first, second) | Par(first, second):
            return _ns_union(free_names(first), free_names(second))
        case If(cond, then, orelse):
            vs = expr_vars(cond)
            return _ns_union(_ns(vs, frozenset(), vs),
                             _ns_union(free_names(then), free_names(orelse)))
        case For(binder, items, body):
            inner = free_names(body)
            vs = expr_vars(items)
            return NameSets((inner.all - {binder}) | vs, inner.chans,
                            (inner.vars - {binder}) | vs, inner.shared)
        case RepeatUntil(body, exit):
            return _ns_union(free_names(body), free_names(exit))
        case Proc(process):
            return free_names(process)
        case Queue(channel, _):
            return _ns({channel}, {channel})
        case Restrict(chans, _, scope):
            inner = free_names(scope)
            return NameSets(inner.all - frozenset(chans),
                            inner.chans - frozenset(chans),
                            inner.vars, inner.shared)
    raise TypeError(f"not a process or system: {term!r}")


def bound_names(term) -> NameSets:
    """Bound names, split by category (shared names are never bound)."""
    match term:
        case Request(_, _, chans, cont) | Accept(_, _, chans, cont):
            inner = bound_names(cont)
            return NameSets(inner.all | frozenset(chans),
                            inner.chans | frozenset(chans), inner.vars, frozenset())
        case Send():
            return _ns()
        case Branch(arms):
            out = _ns()
            for arm in arms:
                inner = bound_names(arm.cont)
                out = _ns_union(out, NameSets(inner.all | {arm.binder}, inner.chans,
                                              inner.vars | {arm.binder}, frozenset()))
            return out
        case Seq(first, second) | Par(first, second):
            return _ns_union(bound_names(first), bound_names(second))
        case If(_, then, orelse):
            return _ns_union(bound_names(then), bound_names(orelse))
        case For(binder, _, body):
            inner = bound_names(body)
            return NameSets(inner.all | {binder}, inner.chans,
                            inner.vars | {binder}, frozenset())
        case RepeatUntil(body, exit):
            return _ns_union(bound_names(body), bound_names(exit))
        case Proc(process):
            return bound_names(process)
        case Queue():
            return _ns()
        case Restrict(chans, _, scope):
            inner = bound_names(scope)
            return NameSets(inner.all | frozenset(chans),
                            inner.chans | frozenset(chans), inner.vars, frozenset())
    raise TypeError(f"not a process or system: {term!r}")


def fn(term) -> frozenset:
    return free_names(term).all


def fY(term) -> frozenset:
    return free_names(term).chans


def fX(term) -> frozenset:
    return free_names(term).vars


def fU(term) -> frozenset:
    return free_names(term).shared


def bn(term) -> frozenset:
    return bound_names(term).all


# --------------------------------------------------------------- events

@dataclass(frozen=True)
class Event:
    """A send (!) or receive (?) by a participant, with the payload sort."""

    participant: str
    polarity: str  # "!" or "?"
    channel: str
    sort: Sort

    def __str__(self) -> str:
        return f"({self.participant},{self.channel}{self.polarity}{self.sort})"


# ---------------------------------------------------------- module decls

@dataclass(frozen=True)
class Table:
    """A finite unary function on literals with a default result."""

    name: str
    arg_sort: Sort
    ret_sort: Sort
    mapping: tuple  # of (Lit, Lit)
    default: Lit

    def lookup(self, v: Lit) -> Lit:
        for k, r in self.mapping:
            if k == v:
                return r
        return self.default


@dataclass(frozen=True)
class GlobalDef:
    name: str
    params: tuple  # session channel tuple, in declaration order
    body: GlobalType


@dataclass(frozen=True)
class ProcessDef:
    name: str
    body: Process
    role: Optional[str] = None  # from "plays p of GNAME"
    global_name: Optional[str] = None


@dataclass(frozen=True)
class SystemDef:
    name: str
    body: System


@dataclass
class ModuleDecl:
    """A parsed .chor module: declarations by kind, in source order."""

    domains: dict = field(default_factory=dict)   # var -> frozenset[Lit]
    tables: dict = field(default_factory=dict)    # name -> Table
    globals_: dict = field(default_factory=dict)  # name -> GlobalDef
    types: dict = field(default_factory=dict)     # name -> PseudoType
    processes: dict = field(default_factory=dict)  # name -> ProcessDef
    systems: dict = field(default_factory=dict)   # name -> SystemDef
    # binders moved by alpha-freshening: fresh name -> declared name,
    # so domain declarations follow renamed variables
    domain_aliases: dict = field(default_factory=dict)
