"""Syntax and weak head reduction for the pure lambda calculus.

Terms are immutable dataclasses compared structurally, so == is
name-sensitive; alpha_eq compares up to renaming of bound variables.
Concrete syntax accepts '\\' or 'λ' for binders, '--' line comments,
and identifiers over letters, digits, underscore and prime.

Long reduction sequences produce deeply nested terms, so the traversals
here (free variables, substitution, printing, alpha equality) use
explicit stacks rather than recursion.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


class ParseError(ValueError):
    """Malformed input; offset is the byte position of the failure.

    A ValueError, so callers validating embedded term strings (the
    derivation JSON loader for one) catch it without special casing."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.message = message
        self.offset = offset


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


Term = Union[Var, Abs, App]


# ---------------------------------------------------------------------------
# parsing

_IDENT = re.compile(r"[A-Za-z0-9_']+")
_WS = " \t\r\n"


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    # token kinds: lam, dot, lpar, rpar, ident; position is a codepoint
    # index, converted to a byte offset only when reporting errors
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in _WS:
            i += 1
        elif text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
        elif ch == "\\" or ch == "λ":
            toks.append(("lam", ch, i))
            i += 1
        elif ch == ".":
            toks.append(("dot", ch, i))
            i += 1
        elif ch == "(":
            toks.append(("lpar", ch, i))
            i += 1
        elif ch == ")":
            toks.append(("rpar", ch, i))
            i += 1
        else:
            m = _IDENT.match(text, i)
            if m is None:
                raise ParseError(f"unexpected character {ch!r}", _byte_offset(text, i))
            toks.append(("ident", m.group(), i))
            i = m.end()
    return toks


def parse_term(text: str) -> Term:
    """Parse a term.

    Grammar: a term is an abstraction or an application of one or more
    atoms, where an atom is an identifier or a parenthesized term.  An
    abstraction body extends as far right as possible; an abstraction in
    the last argument position of an application needs no parentheses.
    """
    toks = _tokenize(text)
    eof = _byte_offset(text, len(text))
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def fail(message, tok):
        raise ParseError(message, eof if tok is None else _byte_offset(text, tok[2]))

    def term():
        tok = peek()
        if tok is None:
            fail("expected a term, found end of input", None)
        if tok[0] == "lam":
            return abstraction()
        return application()

    def abstraction():
        nonlocal pos
        pos += 1  # the lambda token
        tok = peek()
        if tok is None or tok[0] != "ident":
            fail("expected a binder after the lambda", tok)
        name = tok[1]
        pos += 1
        tok = peek()
        if tok is None or tok[0] != "dot":
            fail("expected '.' after the binder", tok)
        pos += 1
        return Abs(name, term())

    def application():
        t = atom()
        while True:
            tok = peek()
            if tok is None:
                return t
            if tok[0] in ("ident", "lpar"):
                t = App(t, atom())
            elif tok[0] == "lam":
                return App(t, abstraction())
            else:
                return t

    def atom():
        nonlocal pos
        tok = peek()
        if tok is None:
            fail("expected a term, found end of input", None)
        if tok[0] == "ident":
            pos += 1
            return Var(tok[1])
        if tok[0] == "lpar":
            pos += 1
            t = term()
            tok = peek()
            if tok is None or tok[0] != "rpar":
                fail("expected ')'", tok)
            pos += 1
            return t
        fail(f"unexpected {tok[1]!r}", tok)

    t = term()
    tok = peek()
    if tok is not None:
        fail(f"unexpected {tok[1]!r} after the term", tok)
    return t


def print_term(t: Term) -> str:
    """Render with '\\' binders; parse_term(print_term(t)) == t."""
    # context: 0 = top or abstraction body, 1 = function position,
    # 2 = argument position
    out = []
    work = [("t", t, 0)]
    while work:
        tag, x, ctx = work.pop()
        if tag == "s":
            out.append(x)
            continue
        if type(x) is Var:
            out.append(x.name)
        elif type(x) is Abs:
            parens = ctx != 0
            if parens:
                out.append("(")
                work.append(("s", ")", 0))
            out.append(f"\\{x.binder}.")
            work.append(("t", x.body, 0))
        else:
            parens = ctx == 2
            if parens:
                out.append("(")
                work.append(("s", ")", 0))
            work.append(("t", x.arg, 2))
            work.append(("s", " ", 0))
            work.append(("t", x.fun, 1))
    return "".join(out)


# ---------------------------------------------------------------------------
# variables and substitution

def free_vars(t: Term) -> frozenset[str]:
    free = set()
    bound: dict[str, int] = {}
    work: list[tuple[str, object]] = [("t", t)]
    while work:
        tag, x = work.pop()
        if tag == "t":
            if type(x) is Var:
                if bound.get(x.name, 0) == 0:
                    free.add(x.name)
            elif type(x) is App:
                work.append(("t", x.fun))
                work.append(("t", x.arg))
            else:
                bound[x.binder] = bound.get(x.binder, 0) + 1
                work.append(("x", x.binder))  # scope exit marker
                work.append(("t", x.body))
        else:
            bound[x] -= 1
    return frozenset(free)


def all_vars(t: Term) -> frozenset[str]:
    """Every name occurring in t, free or binding."""
    names = set()
    work = [t]
    while work:
        x = work.pop()
        if type(x) is Var:
            names.add(x.name)
        elif type(x) is App:
            work.append(x.fun)
            work.append(x.arg)
        else:
            names.add(x.binder)
            work.append(x.body)
    return frozenset(names)


def term_size(t: Term) -> int:
    n = 0
    work = [t]
    while work:
        x = work.pop()
        n += 1
        if type(x) is App:
            work.append(x.fun)
            work.append(x.arg)
        elif type(x) is Abs:
            work.append(x.body)
    return n


_fresh_counter = 0


def _fresh(base: str, avoid: frozenset[str] | set[str]) -> str:
    global _fresh_counter
    while True:
        _fresh_counter += 1
        cand = f"{base}_{_fresh_counter}"
        if cand not in avoid:
            return cand


def subst(t: Term, x: str, u: Term) -> Term:
    """Capture-avoiding t{x := u}; binders clashing with fv(u) are renamed."""
    return _subst_sim(t, {x: u}, free_vars(u))


def _any_free(t: Term, names) -> bool:
    """Does any of names occur free in t?  Early exit on the first hit."""
    if not names:
        return False
    bound: dict[str, int] = {}
    work: list[tuple[str, object]] = [("t", t)]
    while work:
        tag, node = work.pop()
        if tag == "x":
            bound[node] -= 1
            continue
        if type(node) is Var:
            if node.name in names and not bound.get(node.name):
                return True
        elif type(node) is App:
            work.append(("t", node.arg))
            work.append(("t", node.fun))
        else:
            bound[node.binder] = bound.get(node.binder, 0) + 1
            work.append(("x", node.binder))
            work.append(("t", node.body))
    return False


def _subst_sim(t: Term, sigma: dict[str, Term], avoid: frozenset[str]) -> Term:
    # simultaneous substitution, post-order rebuild with an explicit stack
    work: list[tuple[str, object, object]] = [("v", t, sigma)]
    out: list[Term] = []
    while work:
        tag, a, b = work.pop()
        if tag == "v":
            node, sg = a, b
            # untouched subtrees are reused, not copied, so binders are
            # only ever renamed under a live capture threat
            if not _any_free(node, sg):
                out.append(node)
                continue
            if type(node) is Var:
                out.append(sg.get(node.name, node))
            elif type(node) is App:
                work.append(("app", None, None))
                work.append(("v", node.arg, sg))
                work.append(("v", node.fun, sg))
            else:
                y = node.binder
                sg2 = {k: v for k, v in sg.items() if k != y}
                if not sg2:
                    out.append(node)
                    continue
                if y in avoid:
                    # a substituted image could capture y; rename the binder,
                    # steering clear of everything already in the body
                    y2 = _fresh(y, avoid | all_vars(node.body) | set(sg2))
                    sg2[y] = Var(y2)
                    y = y2
                work.append(("abs", y, None))
                work.append(("v", node.body, sg2))
        elif tag == "app":
            arg = out.pop()
            fun = out.pop()
            out.append(App(fun, arg))
        else:
            out.append(Abs(a, out.pop()))
    assert len(out) == 1
    return out[0]


def alpha_eq(t: Term, u: Term) -> bool:
    # simultaneous walk assigning the same level to corresponding binders
    mt: dict[str, list[int]] = {}
    mu: dict[str, list[int]] = {}
    lvl = 0
    work: list[tuple[str, object, object]] = [("t", t, u)]
    while work:
        tag, a, b = work.pop()
        if tag == "x":
            mt[a].pop()
            mu[b].pop()
            continue
        if type(a) is not type(b):
            return False
        if type(a) is Var:
            sa = mt.get(a.name)
            sb = mu.get(b.name)
            ra = sa[-1] if sa else ("free", a.name)
            rb = sb[-1] if sb else ("free", b.name)
            if ra != rb:
                return False
        elif type(a) is App:
            work.append(("t", a.arg, b.arg))
            work.append(("t", a.fun, b.fun))
        else:
            lvl += 1
            mt.setdefault(a.binder, []).append(lvl)
            mu.setdefault(b.binder, []).append(lvl)
            work.append(("x", a.binder, b.binder))
            work.append(("t", a.body, b.body))
    return True


# ---------------------------------------------------------------------------
# weak head reduction

def whnf_step(t: Term) -> Term | None:
    """One step of weak head reduction, or None if t is already normal.

    The head redex of (\\x.b) u r1 .. rh fires: the result is
    b{x := u} r1 .. rh.  Nothing reduces under an abstraction.
    """
    spine = []
    h = t
    while type(h) is App:
        spine.append(h.arg)
        h = h.fun
    if type(h) is not Abs or not spine:
        return None
    reduced = subst(h.body, h.binder, spine[-1])
    for a in reversed(spine[:-1]):
        reduced = App(reduced, a)
    return reduced


@dataclass(frozen=True)
class WhnfResult:
    result: Term
    steps: int
    exhausted: bool


def whnf_eval(t: Term, fuel: int) -> WhnfResult:
    """Iterate whnf_step at most fuel times.

    exhausted is True only when the fuel ran out strictly before a
    normal form: a term already normal reports exhausted=False at any
    fuel, including zero.
    """
    steps = 0
    while steps < fuel:
        nxt = whnf_step(t)
        if nxt is None:
            return WhnfResult(t, steps, False)
        t = nxt
        steps += 1
    return WhnfResult(t, steps, whnf_step(t) is not None)
