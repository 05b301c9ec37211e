"""The Space KAM: a Krivine machine that is reasonable for space.

Two changes against the plain machine.  Eager garbage collection: every
environment is restricted, on the fly, to the free variables of the
code it accompanies, and a beta transition binding a variable that does
not occur in the body drops the argument closure on the spot.  Variable
unchaining: an application with a variable argument pushes that
variable's closure rather than a new closure wrapping the variable, so
environments never build renaming chains.

Transitions (e|_t is e restricted to fv(t)):

    (t x, e, S)        -> sea_v    (t, e|_t, e(x) . S)
    (t u, e, S)        -> sea_nv   (t, e|_t, (u, e|_u) . S)   u not a variable
    (\\x.t, e, c . S)   -> beta_w   (t, e, S)                  x not in fv(t)
    (\\x.t, e, c . S)   -> beta_nw  (t, [x <- c] . e, S)       x in fv(t)
    (x, [x <- (u, e)], S) -> sub   (u, e, S)

Every reachable state satisfies dom(env) = fv(code), for the state
itself and inside every closure; skam_step checks the top level of that
invariant and refuses to fire a sub whose environment is not exactly
the one binding for the variable.

Sizes count pointers: a closure is 1 plus its environment, an
environment or stack is the sum of its closures, a state is environment
plus stack.  A run's space is the max state size over all states
including the initial one; its time is the sum over all states.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kam import Closure, Env, MachState, Stack, env_lookup, state_to_json
from .terms import Abs, App, Term, Var, free_vars, print_term


class InvariantViolation(Exception):
    """A state broke dom(env) = fv(code), or a variable state did not
    carry exactly its own binding."""


LABEL_SEA_V = "sea_v"
LABEL_SEA_NV = "sea_nv"
LABEL_BETA_W = "beta_w"
LABEL_BETA_NW = "beta_nw"
LABEL_SUB = "sub"

SKAM_LABELS = (LABEL_SEA_V, LABEL_SEA_NV, LABEL_BETA_W, LABEL_BETA_NW, LABEL_SUB)


def env_restrict(e: Env, names: frozenset[str]) -> Env:
    """Keep the first binding of each name in names, in entry order."""
    out = []
    seen = set()
    for x, c in e:
        if x in names and x not in seen:
            out.append((x, c))
            seen.add(x)
    return tuple(out)


def size_env(e: Env) -> int:
    return sum(1 + size_env(c.env) for _, c in e)


def size_closure(c: Closure) -> int:
    return 1 + size_env(c.env)


def state_size(s: MachState) -> int:
    return size_env(s.env) + sum(size_closure(c) for c in s.stack)


def _dom(e: Env) -> set[str]:
    return {x for x, _ in e}


def skam_step(s: MachState) -> tuple[str, MachState] | None:
    """One transition, or None when s is final."""
    t, e, stack = s.code, s.env, s.stack
    fv = free_vars(t)
    if _dom(e) != fv:
        raise InvariantViolation(
            f"environment domain {sorted(_dom(e))} differs from "
            f"free variables {sorted(fv)} of {print_term(t)}"
        )
    if type(t) is App:
        fun, arg = t.fun, t.arg
        fun_env = env_restrict(e, free_vars(fun))
        if type(arg) is Var:
            c = env_lookup(e, arg.name)
            assert c is not None  # arg.name is in fv, hence in dom(e)
            return LABEL_SEA_V, MachState(fun, fun_env, (c,) + stack)
        c = Closure(arg, env_restrict(e, free_vars(arg)))
        return LABEL_SEA_NV, MachState(fun, fun_env, (c,) + stack)
    if type(t) is Abs:
        if not stack:
            return None
        c = stack[0]
        if t.binder in free_vars(t.body):
            return LABEL_BETA_NW, MachState(t.body, ((t.binder, c),) + e, stack[1:])
        return LABEL_BETA_W, MachState(t.body, e, stack[1:])
    # variable: its environment must be the one binding and nothing else
    if len(e) != 1 or e[0][0] != t.name:
        raise InvariantViolation(
            f"variable {t.name} must carry exactly its own binding, "
            f"environment has domain {sorted(_dom(e))} with {len(e)} entries"
        )
    c = e[0][1]
    return LABEL_SUB, MachState(c.code, c.env, stack)


@dataclass(frozen=True)
class SpaceRun:
    initial: MachState
    trace: tuple[tuple[str, MachState], ...]
    final_reached: bool
    space: int
    time: int
    counts: dict

    @property
    def final(self) -> MachState | None:
        """The final state, or None when the run stopped on fuel."""
        if not self.final_reached:
            return None
        return self.trace[-1][1] if self.trace else self.initial

    @property
    def transitions(self) -> int:
        return len(self.trace)


def skam_run(s: MachState, fuel: int) -> SpaceRun:
    """Run for at most fuel transitions, tracking space and time.

    Both measures include the initial state; time also includes the
    final state when it is reached.  Stack size is maintained
    incrementally and closure sizes are memoized per run, since states
    share closures, so a step costs O(|env|) rather than O(state size).
    """
    sizes: dict[int, int] = {}  # id(closure) -> size; trace keeps them alive

    def csize(c: Closure) -> int:
        got = sizes.get(id(c))
        if got is None:
            got = 1 + sum(csize(d) for _, d in c.env)
            sizes[id(c)] = got
        return got

    def esize(e: Env) -> int:
        return sum(csize(c) for _, c in e)

    trace: list[tuple[str, MachState]] = []
    counts = {label: 0 for label in SKAM_LABELS}
    cur = s
    stack_sz = sum(csize(c) for c in s.stack)
    sz = esize(s.env) + stack_sz
    space = sz
    time = sz
    final = False
    for _ in range(fuel):
        step = skam_step(cur)
        if step is None:
            final = True
            break
        label, nxt = step
        if label in (LABEL_SEA_V, LABEL_SEA_NV):
            stack_sz += csize(nxt.stack[0])
        elif label in (LABEL_BETA_W, LABEL_BETA_NW):
            stack_sz -= csize(cur.stack[0])
        counts[label] += 1
        trace.append((label, nxt))
        cur = nxt
        sz = esize(cur.env) + stack_sz
        if sz > space:
            space = sz
        time += sz
    else:
        final = skam_step(cur) is None
    return SpaceRun(s, tuple(trace), final, space, time, counts)


def check_env_domain_invariant(s: MachState) -> bool:
    """dom(env) = fv(code) for the state and inside every closure."""

    def closure_ok(c: Closure) -> bool:
        if _dom(c.env) != free_vars(c.code):
            return False
        return all(closure_ok(d) for _, d in c.env)

    return closure_ok(Closure(s.code, s.env)) and all(
        closure_ok(c) for c in s.stack
    )


def run_trace_rows(run: SpaceRun):
    """Like the plain machine's trace rows, with the state size added."""
    for i, (label, s) in enumerate(run.trace, start=1):
        row = {"step": i, "label": label, "size": state_size(s)}
        row.update(state_to_json(s))
        yield row


def run_summary(run: SpaceRun) -> dict:
    return {
        "transitions": run.transitions,
        "space": run.space,
        "time": run.time,
        "complete": run.final_reached,
    }
