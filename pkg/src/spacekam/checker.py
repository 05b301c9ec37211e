"""Weighted derivations over terms and machine components, checked by
recomputation.

A derivation node carries its conclusion judgment (subject kind,
subject, context, assigned type, stored weight) and its premise
subtrees.  check validates every node against its rule's shape and side
conditions, recomputes every weight bottom-up in the requested mode,
and compares stored against recomputed: stored weights are advisory and
never trusted.

Modes:

  space  weights compose by max and measure the peak state size of the
         machine run the derivation describes
  time   same rules; a term rule's weight is the sum of its premises
         plus the context and type sizes of its own conclusion, and
         machine rules add instead of taking max, measuring the summed
         state sizes of the run
  kam    the plain, unindexed rules; the weight counts rule uses and
         matches the plain machine's transition count

Rules, premises in stored order:

  TVar       x:[A]^k |- x : A            no premises
  TLamStar   G |- \\x.t : *               no premises, G dry
  TLam1      [body]                      binder typed in the premise
  TLam2      [body]                      binder absent, source []^k
  TMany      [one premise per element]   n >= 1, index forced
  TNone      no premises                 G dry, index forced
  TApp1      [fun, arg multi]            argument not a variable
  TApp2      [fun]                       argument a variable
  TEnv       [one closure per entry, in environment order]
  TCl        [term multi, env]
  TSt        [term, env, stack closures top first]

  DC_TVar, DC_TLamStar, DC_TLam, DC_TApp   plain flavor; DC_TApp takes
             the function premise then one premise per argument element
             directly, with no TMany wrapper
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .kam import (
    Closure,
    MachState,
    Run,
    closure_to_json,
    env_to_json,
    state_to_json,
)
from .space_kam import SpaceRun
from .terms import Abs, App, Term, Var, free_vars, parse_term, print_term
from .types import (
    Arrow,
    ClosureMulti,
    DCArrow,
    MultiType,
    NotSummable,
    Star,
    TypeContext,
    context_from_json,
    context_to_json,
    context_union,
    dc_context_union,
    format_context,
    format_linear,
    format_multi,
    is_dry,
    linear_from_json,
    linear_to_json,
    multi_from_json,
    multi_to_json,
    size_context,
    size_linear,
    type_key,
)

R_VAR = "TVar"
R_LAM_STAR = "TLamStar"
R_LAM1 = "TLam1"
R_LAM2 = "TLam2"
R_MANY = "TMany"
R_NONE = "TNone"
R_APP1 = "TApp1"
R_APP2 = "TApp2"
R_ENV = "TEnv"
R_CL = "TCl"
R_ST = "TSt"

R_DC_VAR = "DC_TVar"
R_DC_LAM = "DC_TLam"
R_DC_LAM_STAR = "DC_TLamStar"
R_DC_APP = "DC_TApp"

MACHINE_RULES = frozenset(
    {R_VAR, R_LAM_STAR, R_LAM1, R_LAM2, R_MANY, R_NONE, R_APP1, R_APP2, R_ENV, R_CL, R_ST}
)
DC_RULES = frozenset({R_DC_VAR, R_DC_LAM, R_DC_LAM_STAR, R_DC_APP})

# structural bookkeeping nodes do not count toward derivation size
_SIZE_EXEMPT = frozenset({R_MANY, R_NONE, R_CL, R_ENV})

MODES = ("space", "time", "kam")

KIND_TERM = "term"
KIND_ENV = "env"
KIND_CLOSURE = "closure"
KIND_STATE = "state"


@dataclass(frozen=True)
class Judgment:
    subject_kind: str
    subject: object
    context: TypeContext
    assigned: object
    weight: int


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Judgment
    premises: tuple = ()


@dataclass(frozen=True)
class CheckError:
    path: tuple
    message: str

    def __str__(self):
        where = ".".join(str(i) for i in self.path) if self.path else "root"
        return f"at {where}: {self.message}"


@dataclass
class CheckResult:
    ok: bool
    errors: list


class InvalidDerivation(Exception):
    def __init__(self, errors):
        super().__init__("; ".join(str(e) for e in errors[:3]))
        self.errors = errors


# ---------------------------------------------------------------------------
# weights

def rule_weight(rule, ctx, assigned, premise_weights, mode) -> int:
    """The weight a node's conclusion must carry, from its premises."""
    pw = premise_weights
    if mode == "kam":
        if rule == R_DC_VAR:
            return 1
        if rule == R_DC_LAM_STAR:
            return 0
        if rule == R_DC_LAM:
            return pw[0] + 1
        if rule == R_DC_APP:
            return sum(pw) + 1
        raise ValueError(f"rule {rule} has no weight in mode kam")
    if rule not in MACHINE_RULES:
        raise ValueError(f"rule {rule} has no weight in mode {mode}")
    if rule == R_NONE:
        return 0
    if rule in (R_MANY, R_ENV, R_CL, R_ST):
        if mode == "space":
            return max(pw, default=0)
        return sum(pw)
    # term rules proper
    if mode == "time":
        # uniformly: premises plus the conclusion's own footprint
        return sum(pw) + size_context(ctx) + size_linear(assigned)
    if rule == R_VAR:
        return size_context(ctx) + size_linear(assigned)
    if rule == R_LAM_STAR:
        return size_context(ctx)
    if rule == R_LAM1:
        return pw[0]
    if rule == R_LAM2:
        return max(pw[0], size_context(ctx) + size_linear(assigned))
    if rule == R_APP1:
        return max(pw)
    if rule == R_APP2:
        return pw[0]
    raise ValueError(f"unhandled rule {rule}")


# ---------------------------------------------------------------------------
# per-rule shape and side conditions

def _is_linear(a) -> bool:
    return type(a) is Star or type(a) is Arrow


def _is_dc_linear(a) -> bool:
    return type(a) is Star or type(a) is DCArrow


def _term_node(d, err, mode) -> bool:
    c = d.conclusion
    if c.subject_kind != KIND_TERM:
        err(f"rule {d.rule} concludes a term judgment, found {c.subject_kind}")
        return False
    if type(c.subject) not in (Var, Abs, App):
        err("term judgment subject is not a term")
        return False
    want = ClosureMulti if mode != "kam" else MultiType
    for x, m in c.context.entries:
        if type(m) is not want:
            err(f"context image of {x} has the wrong grammar for mode {mode}")
            return False
    fv = free_vars(c.subject)
    dom = c.context.domain()
    if mode == "kam":
        if not dom <= fv:
            err(
                f"context domain {sorted(dom)} mentions variables not free "
                f"in the subject {sorted(fv)}"
            )
            return False
    elif dom != fv:
        err(f"context domain {sorted(dom)} differs from free variables {sorted(fv)}")
        return False
    return True


def _premise_kinds(d, err, kinds) -> bool:
    if len(d.premises) != len(kinds):
        err(f"rule {d.rule} takes {len(kinds)} premises, found {len(d.premises)}")
        return False
    for i, (p, kind) in enumerate(zip(d.premises, kinds)):
        if p.conclusion.subject_kind != kind:
            err(f"premise {i} must be a {kind} judgment")
            return False
    return True


def _check_tvar(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, ()):
        return
    c = d.conclusion
    if type(c.subject) is not Var:
        err("TVar subject must be a variable")
        return
    if not _is_linear(c.assigned):
        err("TVar assigns a linear type")
        return
    if len(c.context.entries) != 1:
        err("TVar context must be the single binding for the variable")
        return
    x, m = c.context.entries[0]
    if x != c.subject.name:
        err(f"TVar context binds {x}, subject is {c.subject.name}")
        return
    if m.elems != (c.assigned,):
        err(
            f"TVar context multi {format_multi(m)} is not the singleton of "
            f"the assigned type {format_linear(c.assigned)}"
        )


def _check_tlamstar(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, ()):
        return
    c = d.conclusion
    if type(c.subject) is not Abs:
        err("TLamStar subject must be an abstraction")
        return
    if type(c.assigned) is not Star:
        err("TLamStar assigns the ground type")
        return
    if not is_dry(c.context):
        err("TLamStar needs a dry context")


def _check_tlam1(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, (KIND_TERM,)):
        return
    c = d.conclusion
    p = d.premises[0].conclusion
    if type(c.subject) is not Abs:
        err("TLam1 subject must be an abstraction")
        return
    if p.subject != c.subject.body:
        err("TLam1 premise must type the abstraction body")
        return
    if type(c.assigned) is not Arrow:
        err("TLam1 assigns an arrow")
        return
    if p.assigned != c.assigned.res:
        err("TLam1 premise type must be the arrow target")
        return
    x = c.subject.binder
    m = p.context.get(x)
    if m is None:
        err(f"TLam1 needs the binder {x} in the premise context")
        return
    if m != c.assigned.arg:
        err(
            f"arrow source {format_multi(c.assigned.arg)} differs from the "
            f"binder's multi {format_multi(m)}"
        )
        return
    if c.context != p.context.minus(x):
        err("TLam1 conclusion context must be the premise context without the binder")


def _check_tlam2(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, (KIND_TERM,)):
        return
    c = d.conclusion
    p = d.premises[0].conclusion
    if type(c.subject) is not Abs:
        err("TLam2 subject must be an abstraction")
        return
    if p.subject != c.subject.body:
        err("TLam2 premise must type the abstraction body")
        return
    if type(c.assigned) is not Arrow or c.assigned.arg.elems != ():
        err("TLam2 assigns an arrow with an empty source")
        return
    if p.assigned != c.assigned.res:
        err("TLam2 premise type must be the arrow target")
        return
    x = c.subject.binder
    if x in p.context.domain():
        err(f"TLam2 requires the binder {x} absent from the premise context")
        return
    if c.context != p.context:
        err("TLam2 keeps the premise context")


def _check_tmany(d, err, mode):
    if not _term_node(d, err, mode):
        return
    c = d.conclusion
    if len(d.premises) < 1:
        err("TMany needs at least one premise")
        return
    if type(c.assigned) is not ClosureMulti:
        err("TMany assigns a multi type")
        return
    union = None
    elems = []
    for i, pd in enumerate(d.premises):
        p = pd.conclusion
        if p.subject_kind != KIND_TERM:
            err(f"premise {i} must be a term judgment")
            return
        if p.subject != c.subject:
            err(f"premise {i} must type the same term")
            return
        if not _is_linear(p.assigned):
            err(f"premise {i} must assign a linear type")
            return
        elems.append(p.assigned)
        try:
            union = p.context if union is None else context_union(union, p.context)
        except NotSummable as ex:
            err(f"premise contexts are not summable: {ex}")
            return
    if tuple(sorted(elems, key=type_key)) != c.assigned.elems:
        err(
            f"premise types do not assemble the multi "
            f"{format_multi(c.assigned)}"
        )
        return
    if c.context != union:
        err("TMany conclusion context must be the union of the premise contexts")
        return
    if c.assigned.index != 1 + size_context(union):
        err(
            f"TMany index must be 1 + |context| = {1 + size_context(union)}, "
            f"found {c.assigned.index}"
        )


def _check_tnone(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, ()):
        return
    c = d.conclusion
    if type(c.assigned) is not ClosureMulti or c.assigned.elems != ():
        err("TNone assigns an empty multi type")
        return
    if not is_dry(c.context):
        err("TNone needs a dry context")
        return
    if c.assigned.index != 1 + size_context(c.context):
        err(
            f"TNone index must be 1 + |context| = {1 + size_context(c.context)}, "
            f"found {c.assigned.index}"
        )


def _check_tapp1(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, (KIND_TERM, KIND_TERM)):
        return
    c = d.conclusion
    if type(c.subject) is not App:
        err("TApp1 subject must be an application")
        return
    if type(c.subject.arg) is Var:
        err("TApp1 is for non-variable arguments; variables go through TApp2")
        return
    pf = d.premises[0].conclusion
    pa = d.premises[1].conclusion
    if pf.subject != c.subject.fun:
        err("TApp1 first premise must type the function")
        return
    if pa.subject != c.subject.arg:
        err("TApp1 second premise must type the argument")
        return
    if type(pf.assigned) is not Arrow:
        err("TApp1 function premise must assign an arrow")
        return
    if pa.assigned != pf.assigned.arg:
        err(
            f"argument multi {format_multi(pa.assigned) if type(pa.assigned) is ClosureMulti else pa.assigned} "
            f"differs from the arrow source {format_multi(pf.assigned.arg)}"
        )
        return
    if c.assigned != pf.assigned.res:
        err("TApp1 conclusion type must be the arrow target")
        return
    try:
        union = context_union(pf.context, pa.context)
    except NotSummable as ex:
        err(f"premise contexts are not summable: {ex}")
        return
    if c.context != union:
        err("TApp1 conclusion context must be the union of the premise contexts")


def _check_tapp2(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, (KIND_TERM,)):
        return
    c = d.conclusion
    if type(c.subject) is not App or type(c.subject.arg) is not Var:
        err("TApp2 subject must be an application with a variable argument")
        return
    p = d.premises[0].conclusion
    if p.subject != c.subject.fun:
        err("TApp2 premise must type the function")
        return
    if type(p.assigned) is not Arrow:
        err("TApp2 premise must assign an arrow")
        return
    if c.assigned != p.assigned.res:
        err("TApp2 conclusion type must be the arrow target")
        return
    x = c.subject.arg.name
    try:
        union = context_union(p.context, TypeContext(((x, p.assigned.arg),)))
    except NotSummable as ex:
        err(f"the argument's multi does not sum into the function context: {ex}")
        return
    if c.context != union:
        err(
            "TApp2 conclusion context must be the function context plus the "
            "arrow source at the argument variable"
        )


def _check_tenv(d, err, mode):
    c = d.conclusion
    if c.subject_kind != KIND_ENV:
        err("TEnv concludes an environment judgment")
        return
    e = c.subject
    if not isinstance(e, tuple) or not all(
        isinstance(p, tuple) and len(p) == 2 and isinstance(p[0], str) and type(p[1]) is Closure
        for p in e
    ):
        err("environment subject is not an environment")
        return
    names = [x for x, _ in e]
    if len(set(names)) != len(names):
        err(f"environment binds a name twice: {names}")
        return
    if not c.context.is_empty():
        err("TEnv carries no free context")
        return
    if type(c.assigned) is not TypeContext:
        err("TEnv assigns a context")
        return
    if c.assigned.domain() != set(names):
        err(
            f"assigned context domain {sorted(c.assigned.domain())} differs "
            f"from the environment domain {sorted(names)}"
        )
        return
    if len(d.premises) != len(e):
        err(f"TEnv takes one premise per binding, found {len(d.premises)} for {len(e)}")
        return
    for i, ((x, cl), pd) in enumerate(zip(e, d.premises)):
        p = pd.conclusion
        if p.subject_kind != KIND_CLOSURE:
            err(f"premise {i} must be a closure judgment")
            return
        if p.subject != cl:
            err(f"premise {i} must type the closure bound to {x}")
            return
        if p.assigned != c.assigned.get(x):
            err(f"premise {i} must assign the context's multi for {x}")
            return


def _check_tcl(d, err, mode):
    c = d.conclusion
    if c.subject_kind != KIND_CLOSURE:
        err("TCl concludes a closure judgment")
        return
    if type(c.subject) is not Closure:
        err("closure subject is not a closure")
        return
    if not c.context.is_empty():
        err("TCl carries no free context")
        return
    if type(c.assigned) is not ClosureMulti:
        err("TCl assigns a multi type")
        return
    if not _premise_kinds(d, err, (KIND_TERM, KIND_ENV)):
        return
    pt = d.premises[0].conclusion
    pe = d.premises[1].conclusion
    if pt.subject != c.subject.code:
        err("TCl term premise must type the closure code")
        return
    if pt.assigned != c.assigned:
        err("TCl term premise must assign the closure's multi")
        return
    if pe.subject != c.subject.env:
        err("TCl environment premise must type the closure environment")
        return
    if pe.assigned != pt.context:
        err("TCl environment premise must assign the term premise's context")


def _check_tst(d, err, mode):
    c = d.conclusion
    if c.subject_kind != KIND_STATE:
        err("TSt concludes a state judgment")
        return
    if type(c.subject) is not MachState:
        err("state subject is not a machine state")
        return
    if not c.context.is_empty():
        err("TSt carries no free context")
        return
    if type(c.assigned) is not Star:
        err("TSt assigns the ground type")
        return
    s = c.subject
    if len(d.premises) != 2 + len(s.stack):
        err(
            f"TSt takes a term, an environment and one premise per stack "
            f"closure, found {len(d.premises)} for a stack of {len(s.stack)}"
        )
        return
    pt = d.premises[0].conclusion
    pe = d.premises[1].conclusion
    if pt.subject_kind != KIND_TERM or pt.subject != s.code:
        err("TSt first premise must type the state's code")
        return
    if pe.subject_kind != KIND_ENV or pe.subject != s.env:
        err("TSt second premise must type the state's environment")
        return
    if pe.assigned != pt.context:
        err("TSt environment premise must assign the term premise's context")
        return
    # the code's type must spend one arrow per stack closure, top first,
    # and bottom out at the ground type
    a = pt.assigned
    for i, cl in enumerate(s.stack):
        if type(a) is not Arrow:
            err(f"code type runs out of arrows at stack position {i}")
            return
        p = d.premises[2 + i].conclusion
        if p.subject_kind != KIND_CLOSURE or p.subject != cl:
            err(f"premise {2 + i} must type stack closure {i}")
            return
        if p.assigned != a.arg:
            err(
                f"stack closure {i} must be typed with the arrow source "
                f"{format_multi(a.arg)}"
            )
            return
        a = a.res
    if type(a) is not Star:
        err("code type must end at the ground type once the stack is spent")


def _check_dc_tvar(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, ()):
        return
    c = d.conclusion
    if type(c.subject) is not Var:
        err("DC_TVar subject must be a variable")
        return
    if not _is_dc_linear(c.assigned):
        err("DC_TVar assigns a linear type")
        return
    want = TypeContext(((c.subject.name, MultiType((c.assigned,))),))
    if c.context != want:
        err("DC_TVar context must be the singleton of the assigned type")


def _check_dc_tlamstar(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, ()):
        return
    c = d.conclusion
    if type(c.subject) is not Abs:
        err("DC_TLamStar subject must be an abstraction")
        return
    if type(c.assigned) is not Star:
        err("DC_TLamStar assigns the ground type")
        return
    if not c.context.is_empty():
        err("DC_TLamStar needs an empty context")


def _check_dc_tlam(d, err, mode):
    if not _term_node(d, err, mode) or not _premise_kinds(d, err, (KIND_TERM,)):
        return
    c = d.conclusion
    p = d.premises[0].conclusion
    if type(c.subject) is not Abs:
        err("DC_TLam subject must be an abstraction")
        return
    if p.subject != c.subject.body:
        err("DC_TLam premise must type the abstraction body")
        return
    if type(c.assigned) is not DCArrow:
        err("DC_TLam assigns an arrow")
        return
    if p.assigned != c.assigned.res:
        err("DC_TLam premise type must be the arrow target")
        return
    x = c.subject.binder
    m = p.context.get(x)
    if m is None:
        if c.assigned.arg != MultiType(()):
            err("binder unused in the premise, so the arrow source must be empty")
            return
        if c.context != p.context:
            err("DC_TLam keeps the premise context when the binder is unused")
        return
    if c.assigned.arg != m:
        err(
            f"arrow source {format_multi(c.assigned.arg)} differs from the "
            f"binder's multi {format_multi(m)}"
        )
        return
    if c.context != p.context.minus(x):
        err("DC_TLam conclusion context must be the premise context without the binder")


def _check_dc_tapp(d, err, mode):
    if not _term_node(d, err, mode):
        return
    c = d.conclusion
    if type(c.subject) is not App:
        err("DC_TApp subject must be an application")
        return
    if len(d.premises) < 1:
        err("DC_TApp needs the function premise")
        return
    pf = d.premises[0].conclusion
    if pf.subject_kind != KIND_TERM or pf.subject != c.subject.fun:
        err("DC_TApp first premise must type the function")
        return
    if type(pf.assigned) is not DCArrow:
        err("DC_TApp function premise must assign an arrow")
        return
    if c.assigned != pf.assigned.res:
        err("DC_TApp conclusion type must be the arrow target")
        return
    elems = []
    ctx = pf.context
    for i, pd in enumerate(d.premises[1:], start=1):
        p = pd.conclusion
        if p.subject_kind != KIND_TERM or p.subject != c.subject.arg:
            err(f"premise {i} must type the argument")
            return
        if not _is_dc_linear(p.assigned):
            err(f"premise {i} must assign a linear type")
            return
        elems.append(p.assigned)
        ctx = dc_context_union(ctx, p.context)
    if tuple(sorted(elems, key=type_key)) != pf.assigned.arg.elems:
        err(
            f"argument premises do not assemble the arrow source "
            f"{format_multi(pf.assigned.arg)}"
        )
        return
    if c.context != ctx:
        err("DC_TApp conclusion context must be the union of the premise contexts")


_RULE_CHECKS = {
    R_VAR: _check_tvar,
    R_LAM_STAR: _check_tlamstar,
    R_LAM1: _check_tlam1,
    R_LAM2: _check_tlam2,
    R_MANY: _check_tmany,
    R_NONE: _check_tnone,
    R_APP1: _check_tapp1,
    R_APP2: _check_tapp2,
    R_ENV: _check_tenv,
    R_CL: _check_tcl,
    R_ST: _check_tst,
    R_DC_VAR: _check_dc_tvar,
    R_DC_LAM_STAR: _check_dc_tlamstar,
    R_DC_LAM: _check_dc_tlam,
    R_DC_APP: _check_dc_tapp,
}


# ---------------------------------------------------------------------------
# tree walks

def _walk(d: Derivation):
    """Pre-order node list plus parent metadata; reversed, it is a valid
    bottom-up order.  Shared subtrees are listed once per occurrence."""
    order = []
    meta = [(None, None)]
    stack = [(d, 0)]
    while stack:
        n, mi = stack.pop()
        if not isinstance(n, Derivation):
            raise TypeError(f"premise is not a derivation: {n!r}")
        at = len(order)
        order.append((n, mi))
        for i, p in enumerate(n.premises):
            meta.append((at, i))
            stack.append((p, len(meta) - 1))
    return order, meta


def _path_of(mi: int, order, meta) -> tuple:
    path = []
    while True:
        parent_at, idx = meta[mi]
        if parent_at is None:
            break
        path.append(idx)
        mi = order[parent_at][1]
    return tuple(reversed(path))


def _run_check(d, mode, full_scan, compare_stored):
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; pick one of {', '.join(MODES)}")
    order, meta = _walk(d)
    weights: dict[int, int] = {}
    groups = []  # per-node error lists, deepest node first
    allowed = DC_RULES if mode == "kam" else MACHINE_RULES
    for at in range(len(order) - 1, -1, -1):
        n, mi = order[at]
        msgs = []
        err = msgs.append
        if n.rule not in allowed:
            err(f"rule {n.rule} does not belong to mode {mode}")
        else:
            try:
                _RULE_CHECKS[n.rule](n, err, mode)
            except Exception as ex:  # malformed nodes must fail, not crash
                err(f"malformed node: {ex}")
        w = None
        if not msgs:
            pw = [weights[id(p)] for p in n.premises]
            if None not in pw:
                try:
                    w = rule_weight(
                        n.rule, n.conclusion.context, n.conclusion.assigned, pw, mode
                    )
                except (TypeError, ValueError) as ex:
                    err(f"weight not computable: {ex}")
        if w is not None and compare_stored:
            stored = n.conclusion.weight
            if not isinstance(stored, int) or isinstance(stored, bool) or stored != w:
                err(f"stored weight {stored!r}, recomputed {w}")
                w = None
        weights[id(n)] = w
        if msgs:
            path = _path_of(mi, order, meta)
            groups.append([CheckError(path, m) for m in msgs])
            if not full_scan:
                return CheckResult(False, groups[0]), None
    if groups:
        # report shallow nodes first
        errors = [e for grp in reversed(groups) for e in grp]
        return CheckResult(False, errors), None
    return CheckResult(True, []), weights[id(d)]


def check(d: Derivation, mode: str, full_scan: bool = False) -> CheckResult:
    """Validate every node and compare stored weights against recomputed
    ones.  Stops at the first failing node unless full_scan."""
    result, _ = _run_check(d, mode, full_scan, compare_stored=True)
    return result


def weight_of(d: Derivation, mode: str) -> int:
    """The recomputed root weight; stored weights are ignored.  Raises
    InvalidDerivation when the structure itself does not check."""
    result, w = _run_check(d, mode, full_scan=False, compare_stored=False)
    if not result.ok:
        raise InvalidDerivation(result.errors)
    return w


def reweight(d: Derivation, mode: str) -> Derivation:
    """The same tree with every stored weight replaced by mode's
    recomputed one.  The structure must be valid enough for the weight
    formulas to make sense; nothing else is checked."""
    order, _ = _walk(d)
    rebuilt: dict[int, Derivation] = {}
    for at in range(len(order) - 1, -1, -1):
        n, _ = order[at]
        if id(n) in rebuilt:
            continue
        prem = tuple(rebuilt[id(p)] for p in n.premises)
        w = rule_weight(
            n.rule,
            n.conclusion.context,
            n.conclusion.assigned,
            [p.conclusion.weight for p in prem],
            mode,
        )
        rebuilt[id(n)] = Derivation(n.rule, replace(n.conclusion, weight=w), prem)
    return rebuilt[id(d)]


def size_of(d: Derivation) -> int:
    """Nodes counted once per occurrence, skipping the bookkeeping rules
    (TMany, TNone, TCl, TEnv).  On a run derivation this counts the
    machine states."""
    n = 0
    stack = [d]
    while stack:
        x = stack.pop()
        if x.rule not in _SIZE_EXEMPT:
            n += 1
        stack.extend(x.premises)
    return n


def rule_counts(d: Derivation) -> dict:
    counts: dict[str, int] = {}
    stack = [d]
    while stack:
        x = stack.pop()
        counts[x.rule] = counts.get(x.rule, 0) + 1
        stack.extend(x.premises)
    return counts


def check_rule_transition_correspondence(d: Derivation, run: SpaceRun) -> bool:
    """Rule uses against transition counts for a complete run:

        TApp2 = sea_v   TApp1 = sea_nv   TLam1 = beta_nw
        TLam2 = beta_w  TVar  = sub      TLamStar = 1 (the final state)
    """
    if not run.final_reached:
        return False
    counts = rule_counts(d)
    want = run.counts
    return (
        counts.get(R_APP2, 0) == want.get("sea_v", 0)
        and counts.get(R_APP1, 0) == want.get("sea_nv", 0)
        and counts.get(R_LAM1, 0) == want.get("beta_nw", 0)
        and counts.get(R_LAM2, 0) == want.get("beta_w", 0)
        and counts.get(R_VAR, 0) == want.get("sub", 0)
        and counts.get(R_LAM_STAR, 0) == 1
    )


# ---------------------------------------------------------------------------
# JSON

def _subject_to_json(kind, subject):
    if kind == KIND_TERM:
        return print_term(subject)
    if kind == KIND_ENV:
        return env_to_json(subject)
    if kind == KIND_CLOSURE:
        return closure_to_json(subject)
    if kind == KIND_STATE:
        return state_to_json(subject)
    raise ValueError(f"unknown subject kind {kind!r}")


def _assigned_to_json(assigned):
    if type(assigned) is TypeContext:
        return context_to_json(assigned)
    if type(assigned) in (ClosureMulti, MultiType):
        return multi_to_json(assigned)
    return linear_to_json(assigned)


def judgment_to_json(j: Judgment) -> dict:
    return {
        "subject_kind": j.subject_kind,
        "subject": _subject_to_json(j.subject_kind, j.subject),
        "context": context_to_json(j.context),
        "type": _assigned_to_json(j.assigned),
        "weight": j.weight,
    }


def derivation_to_json(d: Derivation) -> dict:
    order, _ = _walk(d)
    built: dict[int, dict] = {}
    for at in range(len(order) - 1, -1, -1):
        n, _ = order[at]
        if id(n) in built:
            continue
        built[id(n)] = {
            "rule": n.rule,
            "judgment": judgment_to_json(n.conclusion),
            "premises": [built[id(p)] for p in n.premises],
        }
    return built[id(d)]


def _subject_from_json(kind, obj, where):
    try:
        if kind == KIND_TERM:
            if not isinstance(obj, str):
                raise ValueError("term subject must be a string")
            return parse_term(obj)
        if kind == KIND_ENV:
            return _env_from_json(obj)
        if kind == KIND_CLOSURE:
            return _closure_from_json(obj)
        if kind == KIND_STATE:
            if not isinstance(obj, dict) or set(obj) != {"code", "env", "stack"}:
                raise ValueError("state subject must have code, env and stack")
            return MachState(
                parse_term(obj["code"]),
                _env_from_json(obj["env"]),
                tuple(_closure_from_json(c) for c in obj["stack"]),
            )
    except ValueError as ex:
        raise ValueError(f"{where}: {ex}") from None
    raise ValueError(f"{where}: unknown subject kind {kind!r}")


def _closure_from_json(obj):
    if not isinstance(obj, dict) or set(obj) != {"code", "env"}:
        raise ValueError("closure must have code and env")
    return Closure(parse_term(obj["code"]), _env_from_json(obj["env"]))


def _env_from_json(obj):
    if not isinstance(obj, list):
        raise ValueError("environment must be a list of [name, closure] pairs")
    out = []
    for p in obj:
        if not isinstance(p, list) or len(p) != 2 or not isinstance(p[0], str):
            raise ValueError("environment entries are [name, closure] pairs")
        out.append((p[0], _closure_from_json(p[1])))
    return tuple(out)


def judgment_from_json(obj, where="judgment") -> Judgment:
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: judgment must be an object")
    missing = {"subject_kind", "subject", "context", "type", "weight"} - set(obj)
    if missing:
        raise ValueError(f"{where}: judgment lacks {sorted(missing)}")
    kind = obj["subject_kind"]
    subject = _subject_from_json(kind, obj["subject"], where)
    try:
        context = context_from_json(obj["context"])
        if kind == KIND_ENV:
            assigned = context_from_json(obj["type"])
        elif isinstance(obj["type"], dict) and "elems" in obj["type"]:
            assigned = multi_from_json(obj["type"])
        else:
            assigned = linear_from_json(obj["type"])
    except ValueError as ex:
        raise ValueError(f"{where}: {ex}") from None
    weight = obj["weight"]
    if not isinstance(weight, int) or isinstance(weight, bool):
        raise ValueError(f"{where}: weight must be an integer")
    return Judgment(kind, subject, context, assigned, weight)


def derivation_from_json(obj, _where="root") -> Derivation:
    if not isinstance(obj, dict):
        raise ValueError(f"{_where}: derivation must be an object")
    missing = {"rule", "judgment", "premises"} - set(obj)
    if missing:
        raise ValueError(f"{_where}: derivation lacks {sorted(missing)}")
    rule = obj["rule"]
    if rule not in MACHINE_RULES and rule not in DC_RULES:
        raise ValueError(f"{_where}: unknown rule {rule!r}")
    conclusion = judgment_from_json(obj["judgment"], _where)
    if not isinstance(obj["premises"], list):
        raise ValueError(f"{_where}: premises must be a list")
    premises = tuple(
        derivation_from_json(p, f"{_where}.{i}") for i, p in enumerate(obj["premises"])
    )
    return Derivation(rule, conclusion, premises)


# ---------------------------------------------------------------------------
# pretty rendering

def _subject_str(kind, subject):
    if kind == KIND_TERM:
        return print_term(subject)
    if kind == KIND_CLOSURE:
        return f"({print_term(subject.code)}, {_env_str(subject.env)})"
    if kind == KIND_ENV:
        return _env_str(subject)
    return (
        f"({print_term(subject.code)} | {_env_str(subject.env)} | "
        + " . ".join(_subject_str(KIND_CLOSURE, c) for c in subject.stack)
        + ")"
    )


def _env_str(e):
    inner = ", ".join(f"{x} <- {_subject_str(KIND_CLOSURE, c)}" for x, c in e)
    return f"[{inner}]"


def _assigned_str(assigned):
    if type(assigned) is TypeContext:
        return format_context(assigned) or "."
    if type(assigned) in (ClosureMulti, MultiType):
        return format_multi(assigned)
    return format_linear(assigned)


def render_derivation(d: Derivation) -> str:
    """An indented one-node-per-line rendering, premises below their
    conclusion."""
    lines = []
    stack = [(d, 0)]
    while stack:
        n, depth = stack.pop()
        c = n.conclusion
        ctx = format_context(c.context) or "."
        lines.append(
            f"{'  ' * depth}{n.rule} w={c.weight}  {ctx} |- "
            f"{_subject_str(c.subject_kind, c.subject)} : {_assigned_str(c.assigned)}"
        )
        for p in reversed(n.premises):
            stack.append((p, depth + 1))
    return "\n".join(lines)
