import pytest
from hypothesis import given, settings, strategies as st

from spacekam.types import (
    EMPTY_CONTEXT,
    STAR,
    Arrow,
    BadSplit,
    ClosureMulti,
    DCArrow,
    MultiType,
    NotSummable,
    TypeContext,
    context_from_json,
    context_to_json,
    context_union,
    dc_context_union,
    dc_multi_union,
    format_context,
    format_linear,
    format_multi,
    is_dry,
    linear_from_json,
    linear_to_json,
    multi_from_json,
    multi_to_json,
    multi_union,
    size_context,
    size_linear,
    split_multi,
    summable,
)

M_STAR1 = ClosureMulti((STAR,), 1)
M_EMPTY1 = ClosureMulti((), 1)
ARR = Arrow(M_STAR1, STAR)


# ---------------------------------------------------------------- construction

def test_multiset_order_is_canonical():
    a = ClosureMulti((STAR, ARR), 2)
    b = ClosureMulti((ARR, STAR), 2)
    assert a == b
    assert a.elems == (STAR, ARR)  # ground type sorts first


def test_index_must_be_positive():
    with pytest.raises(ValueError):
        ClosureMulti((), 0)
    with pytest.raises(ValueError):
        ClosureMulti((STAR,), -3)


def test_grammars_do_not_mix():
    with pytest.raises(TypeError):
        ClosureMulti((DCArrow(MultiType(()), STAR),), 1)
    with pytest.raises(TypeError):
        MultiType((ARR,))
    with pytest.raises(TypeError):
        Arrow(MultiType(()), STAR)
    with pytest.raises(TypeError):
        DCArrow(M_EMPTY1, STAR)
    with pytest.raises(TypeError):
        Arrow(M_EMPTY1, MultiType(()))


def test_context_entries_sorted_and_distinct():
    g = TypeContext((("y", M_EMPTY1), ("x", M_STAR1)))
    assert [x for x, _ in g.entries] == ["x", "y"]
    with pytest.raises(ValueError):
        TypeContext((("x", M_EMPTY1), ("x", M_STAR1)))


def test_context_accessors():
    g = TypeContext((("x", M_STAR1),))
    assert g.get("x") == M_STAR1
    assert g.get("q") is None
    assert g.domain() == frozenset({"x"})
    assert g.minus("x") == EMPTY_CONTEXT
    assert g.put("y", M_EMPTY1).domain() == frozenset({"x", "y"})
    assert EMPTY_CONTEXT.is_empty() and not g.is_empty()


# ---------------------------------------------------------------- sizes

def test_size_linear():
    assert size_linear(STAR) == 0
    assert size_linear(ARR) == 1
    assert size_linear(Arrow(ClosureMulti((), 3), STAR)) == 3
    chained = Arrow(M_EMPTY1, Arrow(ClosureMulti((), 2), STAR))
    assert size_linear(chained) == 3


def test_size_linear_rejects_plain_types():
    with pytest.raises(TypeError):
        size_linear(DCArrow(MultiType(()), STAR))


def test_size_context_sums_indices_only():
    g = TypeContext((("x", ClosureMulti((STAR, STAR), 2)), ("y", ClosureMulti((), 5))))
    assert size_context(g) == 7
    assert size_context(EMPTY_CONTEXT) == 0


def test_size_context_rejects_plain_images():
    with pytest.raises(TypeError):
        size_context(TypeContext((("x", MultiType(())),)))


def test_is_dry():
    assert is_dry(EMPTY_CONTEXT)
    assert is_dry(TypeContext((("x", ClosureMulti((), 9)),)))
    assert not is_dry(TypeContext((("x", M_STAR1),)))


# ---------------------------------------------------------------- unions

def test_multi_union_joins_multisets_at_one_index():
    got = multi_union(ClosureMulti((STAR,), 2), ClosureMulti((ARR,), 2))
    assert got == ClosureMulti((STAR, ARR), 2)


def test_multi_union_rejects_disagreeing_indices():
    with pytest.raises(NotSummable):
        multi_union(M_STAR1, ClosureMulti((STAR,), 2))


def test_context_union_disjoint_and_shared():
    g = TypeContext((("x", M_STAR1),))
    d = TypeContext((("x", ClosureMulti((ARR,), 1)), ("y", M_EMPTY1)))
    got = context_union(g, d)
    assert got.get("x") == ClosureMulti((STAR, ARR), 1)
    assert got.get("y") == M_EMPTY1


def test_context_union_names_the_offending_variable():
    g = TypeContext((("x", M_STAR1),))
    d = TypeContext((("x", ClosureMulti((), 4)),))
    with pytest.raises(NotSummable, match="x"):
        context_union(g, d)


def test_summable_predicate_matches_union():
    g = TypeContext((("x", M_STAR1),))
    assert summable(g, TypeContext((("x", M_EMPTY1),)))
    assert not summable(g, TypeContext((("x", ClosureMulti((), 2)),)))
    assert summable(g, EMPTY_CONTEXT)


def test_dc_unions_have_no_index_constraint():
    a = MultiType((STAR,))
    b = MultiType((STAR, DCArrow(MultiType(()), STAR)))
    assert dc_multi_union(a, b) == MultiType(
        (STAR, STAR, DCArrow(MultiType(()), STAR))
    )
    g = dc_context_union(
        TypeContext((("x", a),)), TypeContext((("x", b), ("y", a)))
    )
    assert g.get("x") == dc_multi_union(a, b) and g.get("y") == a


# ---------------------------------------------------------------- splits

def test_split_multi_witness():
    whole = ClosureMulti((STAR, STAR, ARR), 2)
    left = ClosureMulti((STAR, ARR), 2)
    right = ClosureMulti((STAR,), 2)
    w = split_multi(whole, left, right)
    assert len(w) == 3 and w.count("L") == 2 and w.count("R") == 1


def test_split_multi_rejects_wrong_parts():
    whole = ClosureMulti((STAR,), 1)
    with pytest.raises(BadSplit):
        split_multi(whole, ClosureMulti((ARR,), 1), M_EMPTY1)
    with pytest.raises(BadSplit):
        split_multi(whole, ClosureMulti((STAR,), 1), ClosureMulti((STAR,), 1))
    with pytest.raises(BadSplit):
        split_multi(whole, ClosureMulti((STAR,), 2), M_EMPTY1)


# ---------------------------------------------------------------- json

def test_linear_json_roundtrip():
    for a in (STAR, ARR, Arrow(ClosureMulti((ARR, STAR), 4), Arrow(M_EMPTY1, STAR))):
        assert linear_from_json(linear_to_json(a)) == a


def test_dc_json_roundtrip():
    a = DCArrow(MultiType((STAR,)), DCArrow(MultiType(()), STAR))
    assert linear_from_json(linear_to_json(a)) == a


def test_multi_json_distinguishes_grammars():
    assert multi_to_json(M_STAR1) == {"elems": ["*"], "k": 1}
    assert multi_to_json(MultiType((STAR,))) == {"elems": ["*"]}
    assert multi_from_json({"elems": ["*"], "k": 1}) == M_STAR1
    assert multi_from_json({"elems": ["*"]}) == MultiType((STAR,))


def test_multi_from_json_rejects_bad_indices():
    with pytest.raises(ValueError):
        multi_from_json({"elems": [], "k": 0})
    with pytest.raises(ValueError):
        multi_from_json({"elems": [], "k": True})
    with pytest.raises(ValueError):
        multi_from_json({"elems": [], "k": "2"})
    with pytest.raises(ValueError):
        multi_from_json({"elems": [], "k": 2, "extra": 1})


def test_context_json_roundtrip():
    g = TypeContext((("x", M_STAR1), ("y", ClosureMulti((), 3))))
    assert context_from_json(context_to_json(g)) == g
    assert context_from_json({}) == EMPTY_CONTEXT


# ---------------------------------------------------------------- formatting

def test_format_forms():
    assert format_linear(Arrow(ClosureMulti((), 3), STAR)) == "[]^3 -> *"
    assert format_multi(MultiType((STAR,))) == "[*]"
    g = TypeContext((("x", M_STAR1),))
    assert format_context(g) == "x:[*]^1"


# ---------------------------------------------------------------- properties

def linears():
    return st.recursive(
        st.just(STAR),
        lambda sub: st.builds(
            Arrow,
            st.builds(ClosureMulti, st.lists(sub, max_size=3).map(tuple),
                      st.integers(1, 4)),
            sub,
        ),
        max_leaves=8,
    )


def multis(k):
    return st.builds(ClosureMulti, st.lists(linears(), max_size=4).map(tuple), st.just(k))


@given(multis(2), multis(2))
@settings(max_examples=150)
def test_multi_union_commutative(a, b):
    assert multi_union(a, b) == multi_union(b, a)


@given(multis(3), multis(3), multis(3))
@settings(max_examples=150)
def test_multi_union_associative(a, b, c):
    assert multi_union(multi_union(a, b), c) == multi_union(a, multi_union(b, c))


@given(multis(2), multis(2))
@settings(max_examples=150)
def test_split_roundtrips_union(a, b):
    whole = multi_union(a, b)
    w = split_multi(whole, a, b)
    assert w.count("L") == len(a.elems) and w.count("R") == len(b.elems)


@given(st.lists(st.tuples(st.sampled_from("xyzw"), multis(1)), max_size=4),
       st.lists(st.tuples(st.sampled_from("xyzw"), multis(1)), max_size=4))
@settings(max_examples=150)
def test_context_union_commutative(ga, gb):
    try:
        g = TypeContext(tuple(ga))
        d = TypeContext(tuple(gb))
    except ValueError:
        return  # duplicate names in the raw lists
    assert context_union(g, d) == context_union(d, g)
    assert size_context(context_union(g, d)) >= max(size_context(g), size_context(d))
