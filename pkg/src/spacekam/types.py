"""Multi types, their indexed refinement, and type contexts.

Two grammars share this module.  The indexed one types machine
components: a linear type is the ground type or an arrow whose source
is a multi set of linear types carrying a positive index, the size of
any closure the multi can type.  The plain one types terms against the
Krivine machine: same shape, no index.

Multi sets are kept as tuples sorted under a total structural order, so
structural equality of the dataclasses is multiset equality.  A context
maps variables to multis and is kept sorted by name.  Contexts are
summable when their indices agree on shared variables; the union then
joins the multisets.  Note the difference between a variable missing
from a context and one mapped to an empty multi: only the latter
contributes its index to the context size.
"""

from __future__ import annotations

from dataclasses import dataclass


class NotSummable(Exception):
    """Context or multi union with disagreeing indices."""


class BadSplit(Exception):
    """The claimed parts do not rebuild the whole multiset."""


@dataclass(frozen=True)
class Star:
    def __repr__(self):
        return "Star()"


STAR = Star()


@dataclass(frozen=True)
class ClosureMulti:
    """An indexed multi set [A1, ..., An]^k with k > 0, n >= 0."""

    elems: tuple = ()
    index: int = 1

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"multi type index must be positive, got {self.index}")
        for a in self.elems:
            if not isinstance(a, (Star, Arrow)):
                raise TypeError(f"indexed multi over a non-indexed element: {a!r}")
        object.__setattr__(self, "elems", tuple(sorted(self.elems, key=type_key)))


@dataclass(frozen=True)
class Arrow:
    arg: ClosureMulti
    res: "Star | Arrow"

    def __post_init__(self):
        if type(self.arg) is not ClosureMulti:
            raise TypeError(f"indexed arrow needs an indexed source: {self.arg!r}")
        if not isinstance(self.res, (Star, Arrow)):
            raise TypeError(f"indexed arrow needs an indexed target: {self.res!r}")


@dataclass(frozen=True)
class MultiType:
    """A plain multi set [A1, ..., An], the de Carvalho flavor."""

    elems: tuple = ()

    def __post_init__(self):
        for a in self.elems:
            if not isinstance(a, (Star, DCArrow)):
                raise TypeError(f"plain multi over an indexed element: {a!r}")
        object.__setattr__(self, "elems", tuple(sorted(self.elems, key=type_key)))


@dataclass(frozen=True)
class DCArrow:
    arg: MultiType
    res: "Star | DCArrow"

    def __post_init__(self):
        if type(self.arg) is not MultiType:
            raise TypeError(f"plain arrow needs a plain source: {self.arg!r}")
        if not isinstance(self.res, (Star, DCArrow)):
            raise TypeError(f"plain arrow needs a plain target: {self.res!r}")


def type_key(a) -> tuple:
    """Total order on types of either grammar, for canonical sorting."""
    if type(a) is Star:
        return (0,)
    if type(a) is Arrow:
        return (1, a.arg.index, tuple(type_key(b) for b in a.arg.elems), type_key(a.res))
    if type(a) is DCArrow:
        return (2, tuple(type_key(b) for b in a.arg.elems), type_key(a.res))
    raise TypeError(f"not a type: {a!r}")


# ---------------------------------------------------------------------------
# contexts

@dataclass(frozen=True)
class TypeContext:
    """Variables to multis, entries sorted by name, names distinct."""

    entries: tuple = ()

    def __post_init__(self):
        ent = self.entries
        if isinstance(ent, dict):
            ent = tuple(ent.items())
        ent = tuple(sorted(ent, key=lambda p: p[0]))
        names = [x for x, _ in ent]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate context entries: {names}")
        object.__setattr__(self, "entries", ent)

    def get(self, x: str):
        for y, m in self.entries:
            if y == x:
                return m
        return None

    def domain(self) -> frozenset[str]:
        return frozenset(x for x, _ in self.entries)

    def minus(self, x: str) -> "TypeContext":
        return TypeContext(tuple(p for p in self.entries if p[0] != x))

    def put(self, x: str, m) -> "TypeContext":
        # x must not already be present
        return TypeContext(self.entries + ((x, m),))

    def is_empty(self) -> bool:
        return not self.entries


EMPTY_CONTEXT = TypeContext()


# ---------------------------------------------------------------------------
# sizes

def size_linear(a) -> int:
    """|star| = 0, |M^k -> A| = k + |A|."""
    n = 0
    while type(a) is Arrow:
        n += a.arg.index
        a = a.res
    if type(a) is not Star:
        raise TypeError(f"size is only defined for indexed linear types: {a!r}")
    return n


def size_context(g: TypeContext) -> int:
    """Sum of the indices; the multisets do not contribute."""
    n = 0
    for _, m in g.entries:
        if type(m) is not ClosureMulti:
            raise TypeError(f"size is only defined for indexed contexts: {m!r}")
        n += m.index
    return n


def is_dry(g: TypeContext) -> bool:
    """Every image an empty multi (the indices are unconstrained)."""
    return all(type(m) is ClosureMulti and not m.elems for _, m in g.entries)


# ---------------------------------------------------------------------------
# unions and splits

def summable(g: TypeContext, d: TypeContext) -> bool:
    """Indices agree wherever the domains meet."""
    for x, m in g.entries:
        if type(m) is not ClosureMulti:
            raise TypeError(f"summability is about indexed contexts: {m!r}")
        other = d.get(x)
        if other is not None and other.index != m.index:
            return False
    for _, m in d.entries:
        if type(m) is not ClosureMulti:
            raise TypeError(f"summability is about indexed contexts: {m!r}")
    return True


def multi_union(a: ClosureMulti, b: ClosureMulti) -> ClosureMulti:
    if a.index != b.index:
        raise NotSummable(f"indices disagree: {a.index} vs {b.index}")
    return ClosureMulti(a.elems + b.elems, a.index)


def context_union(g: TypeContext, d: TypeContext) -> TypeContext:
    out = dict(g.entries)
    for x, m in d.entries:
        if x in out:
            try:
                out[x] = multi_union(out[x], m)
            except NotSummable:
                raise NotSummable(
                    f"contexts disagree on the index of {x}: "
                    f"{out[x].index} vs {m.index}"
                )
        else:
            out[x] = m
    return TypeContext(tuple(out.items()))


def dc_multi_union(a: MultiType, b: MultiType) -> MultiType:
    return MultiType(a.elems + b.elems)


def dc_context_union(g: TypeContext, d: TypeContext) -> TypeContext:
    out = dict(g.entries)
    for x, m in d.entries:
        out[x] = dc_multi_union(out[x], m) if x in out else m
    return TypeContext(tuple(out.items()))


def split_multi(whole: ClosureMulti, left: ClosureMulti, right: ClosureMulti) -> tuple:
    """Witness that whole = left + right as multisets at one index.

    The witness tags each element of whole, in canonical order, with the
    part it came from.  Equal elements are interchangeable, so a greedy
    match over the sorted tuples is complete.
    """
    if left.index != whole.index or right.index != whole.index:
        raise BadSplit(
            f"indices disagree: whole {whole.index}, "
            f"left {left.index}, right {right.index}"
        )
    li = ri = 0
    witness = []
    for a in whole.elems:
        if li < len(left.elems) and left.elems[li] == a:
            witness.append("L")
            li += 1
        elif ri < len(right.elems) and right.elems[ri] == a:
            witness.append("R")
            ri += 1
        else:
            raise BadSplit(f"element {format_linear(a)} of the whole is in neither part")
    if li != len(left.elems) or ri != len(right.elems):
        raise BadSplit("parts have elements beyond the whole")
    return tuple(witness)


# ---------------------------------------------------------------------------
# JSON and pretty forms

def linear_to_json(a):
    if type(a) is Star:
        return "*"
    if type(a) is Arrow:
        return {"arg": multi_to_json(a.arg), "res": linear_to_json(a.res)}
    if type(a) is DCArrow:
        return {"arg": multi_to_json(a.arg), "res": linear_to_json(a.res)}
    raise TypeError(f"not a type: {a!r}")


def multi_to_json(m):
    if type(m) is ClosureMulti:
        return {"elems": [linear_to_json(a) for a in m.elems], "k": m.index}
    if type(m) is MultiType:
        return {"elems": [linear_to_json(a) for a in m.elems]}
    raise TypeError(f"not a multi type: {m!r}")


def linear_from_json(obj):
    if obj == "*":
        return STAR
    if isinstance(obj, dict) and set(obj) == {"arg", "res"}:
        arg = multi_from_json(obj["arg"])
        res = linear_from_json(obj["res"])
        return Arrow(arg, res) if type(arg) is ClosureMulti else DCArrow(arg, res)
    raise ValueError(f"not a linear type: {obj!r}")


def multi_from_json(obj):
    if not isinstance(obj, dict) or "elems" not in obj:
        raise ValueError(f"not a multi type: {obj!r}")
    elems = tuple(linear_from_json(a) for a in obj["elems"])
    if "k" in obj:
        if set(obj) != {"elems", "k"}:
            raise ValueError(f"not a multi type: {obj!r}")
        k = obj["k"]
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise ValueError(f"multi type index must be a positive integer: {k!r}")
        return ClosureMulti(elems, k)
    if set(obj) != {"elems"}:
        raise ValueError(f"not a multi type: {obj!r}")
    return MultiType(elems)


def context_to_json(g: TypeContext) -> dict:
    return {x: multi_to_json(m) for x, m in g.entries}


def context_from_json(obj) -> TypeContext:
    if not isinstance(obj, dict):
        raise ValueError(f"not a context: {obj!r}")
    return TypeContext(tuple((x, multi_from_json(m)) for x, m in obj.items()))


def format_linear(a) -> str:
    if type(a) is Star:
        return "*"
    if type(a) is Arrow or type(a) is DCArrow:
        return f"{format_multi(a.arg)} -> {format_linear(a.res)}"
    raise TypeError(f"not a type: {a!r}")


def format_multi(m) -> str:
    inner = ",".join(format_linear(a) for a in m.elems)
    if type(m) is ClosureMulti:
        return f"[{inner}]^{m.index}"
    return f"[{inner}]"


def format_context(g: TypeContext) -> str:
    return ", ".join(f"{x}:{format_multi(m)}" for x, m in g.entries)
