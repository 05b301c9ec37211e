"""Shared fixtures: the running example term, its machine runs, and its
derivations built by hand, node for node, with independently computed
weights.  The extractor must reproduce these trees exactly."""

import pytest

import spacekam as sk
from spacekam.checker import (
    Derivation,
    Judgment,
    R_APP1,
    R_APP2,
    R_DC_APP,
    R_DC_LAM,
    R_DC_LAM_STAR,
    R_DC_VAR,
    R_LAM1,
    R_LAM2,
    R_LAM_STAR,
    R_MANY,
    R_NONE,
    R_VAR,
)
from spacekam.types import (
    STAR,
    Arrow,
    ClosureMulti,
    DCArrow,
    MultiType,
    TypeContext,
)

# one sub after three betas: (\x.(\y.(\z.x) (x y)) x) (\a.a)
EXAMPLE_SRC = r"(\x.(\y.(\z.x) (x y)) x) (\a.a)"


@pytest.fixture(scope="session")
def example_term():
    return sk.parse_term(EXAMPLE_SRC)


@pytest.fixture(scope="session")
def example_kam(example_term):
    return sk.kam_run(sk.compile(example_term), 100)


@pytest.fixture(scope="session")
def example_skam(example_term):
    return sk.skam_run(sk.compile(example_term), 100)


def _term_node(rule, subject, ctx_pairs, assigned, weight, premises=()):
    return Derivation(
        rule,
        Judgment("term", subject, TypeContext(tuple(ctx_pairs)), assigned, weight),
        tuple(premises),
    )


def build_example_space_derivation(t, weights):
    """The example's derivation with the given per-node weights.

    Weight sets for both modes (space / time) come from working the rules
    by hand, leaves up:

      node                         space   time
      x : *                        1       1    (k + |A| = 1 + 0)
      \\z.x : []^3 -> *             4       5    (time: 1 + |G| 1 + |A| 3)
      x y : []^3                   0       0
      (\\z.x) (x y) : *             4       7    (5 + 0 + |G| 2 + 0)
      \\y... : []^1 -> *            4       9    (7 + 1 + 1)
      (\\y...) x : *                4       10   (9 + 1 + 0)
      \\x... : [*]^1 -> *           4       11   (10 + 0 + 1)
      \\a.a : * and [*]^1           0       0
      whole application : *        4       11
    """
    lam_x = t.fun
    i_term = t.arg
    app_yx = lam_x.body
    lam_y = app_yx.fun
    x_var = app_yx.arg
    app_in = lam_y.body
    lam_z = app_in.fun
    xy = app_in.arg

    m_star1 = ClosureMulti((STAR,), 1)
    m_empty1 = ClosureMulti((), 1)
    m_empty3 = ClosureMulti((), 3)
    w = weights

    tvar = _term_node(R_VAR, lam_z.body, [("x", m_star1)], STAR, w["tvar"])
    tlam2 = _term_node(
        R_LAM2, lam_z, [("x", m_star1)], Arrow(m_empty3, STAR), w["tlam2"], [tvar]
    )
    tnone = _term_node(R_NONE, xy, [("x", m_empty1), ("y", m_empty1)], m_empty3, 0)
    tapp1_inner = _term_node(
        R_APP1,
        app_in,
        [("x", m_star1), ("y", m_empty1)],
        STAR,
        w["tapp1_inner"],
        [tlam2, tnone],
    )
    tlam1_y = _term_node(
        R_LAM1, lam_y, [("x", m_star1)], Arrow(m_empty1, STAR), w["tlam1_y"], [tapp1_inner]
    )
    tapp2 = _term_node(R_APP2, app_yx, [("x", m_star1)], STAR, w["tapp2"], [tlam1_y])
    tlam1_x = _term_node(R_LAM1, lam_x, [], Arrow(m_star1, STAR), w["tlam1_x"], [tapp2])
    tlamstar = _term_node(R_LAM_STAR, i_term, [], STAR, 0)
    tmany = _term_node(R_MANY, i_term, [], m_star1, 0, [tlamstar])
    return _term_node(R_APP1, t, [], STAR, w["root"], [tlam1_x, tmany])


SPACE_WEIGHTS = {
    "tvar": 1, "tlam2": 4, "tapp1_inner": 4, "tlam1_y": 4,
    "tapp2": 4, "tlam1_x": 4, "root": 4,
}

TIME_WEIGHTS = {
    "tvar": 1, "tlam2": 5, "tapp1_inner": 7, "tlam1_y": 9,
    "tapp2": 10, "tlam1_x": 11, "root": 11,
}


@pytest.fixture(scope="session")
def example_space_derivation(example_term):
    return build_example_space_derivation(example_term, SPACE_WEIGHTS)


@pytest.fixture(scope="session")
def example_time_derivation(example_term):
    return build_example_space_derivation(example_term, TIME_WEIGHTS)


def build_example_dc_derivation(t):
    """The plain-flavor derivation: a chain weighted 7,6,..,1 with the
    identity argument typed once at the top application and the inner
    applications taking no argument premises at all."""
    lam_x = t.fun
    i_term = t.arg
    app_yx = lam_x.body
    lam_y = app_yx.fun
    app_in = lam_y.body
    lam_z = app_in.fun

    m_star = MultiType((STAR,))
    m_empty = MultiType(())
    ctx_x = [("x", m_star)]

    dc_var = _term_node(R_DC_VAR, lam_z.body, ctx_x, STAR, 1)
    dc_lam_z = _term_node(R_DC_LAM, lam_z, ctx_x, DCArrow(m_empty, STAR), 2, [dc_var])
    dc_app_in = _term_node(R_DC_APP, app_in, ctx_x, STAR, 3, [dc_lam_z])
    dc_lam_y = _term_node(R_DC_LAM, lam_y, ctx_x, DCArrow(m_empty, STAR), 4, [dc_app_in])
    dc_app_yx = _term_node(R_DC_APP, app_yx, ctx_x, STAR, 5, [dc_lam_y])
    dc_lam_x = _term_node(R_DC_LAM, lam_x, [], DCArrow(m_star, STAR), 6, [dc_app_yx])
    dc_i = _term_node(R_DC_LAM_STAR, i_term, [], STAR, 0)
    return _term_node(R_DC_APP, t, [], STAR, 7, [dc_lam_x, dc_i])


@pytest.fixture(scope="session")
def example_dc_derivation(example_term):
    return build_example_dc_derivation(example_term)
