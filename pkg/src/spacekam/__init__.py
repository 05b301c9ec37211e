"""Call-by-name lambda terms, two abstract machines, and a weighted
intersection type system whose derivations measure machine runs.

The package has three layers:

  terms      syntax, parsing, substitution, weak head reduction
  kam        the Krivine machine; space_kam adds eager garbage
             collection and environment unchaining, plus space and
             time measures over the run
  types      indexed multi types and their algebra; checker validates
             weighted derivations in three modes; extractor rebuilds a
             derivation from a recorded machine run, one transition at
             a time, so that its weight equals the run's measure

harness ties the layers together (cross checks, fuzzing) and cli is a
small click front end.
"""

import sys

# Derivations extracted from long runs nest one premise per transition,
# and several traversals over them recurse.  The CPython default of 1000
# is far too small; 15000 stays well below the segfault point for this
# interpreter (an 8 MiB C stack dies around 18000 trivial frames).
if sys.getrecursionlimit() < 15000:
    sys.setrecursionlimit(15000)

from .terms import (
    Var,
    Abs,
    App,
    Term,
    ParseError,
    parse_term,
    print_term,
    free_vars,
    subst,
    whnf_step,
    whnf_eval,
    alpha_eq,
)
from .kam import (
    Closure,
    MachState,
    Run,
    OpenTerm,
    StuckState,
    compile,
    kam_step,
    kam_run,
    decode,
)
from .space_kam import (
    SpaceRun,
    InvariantViolation,
    env_restrict,
    skam_step,
    skam_run,
    state_size,
    check_env_domain_invariant,
)
from .types import (
    Star,
    STAR,
    Arrow,
    ClosureMulti,
    MultiType,
    DCArrow,
    TypeContext,
    EMPTY_CONTEXT,
    NotSummable,
    BadSplit,
    size_linear,
    size_context,
    is_dry,
    summable,
    context_union,
    split_multi,
)
from .checker import (
    Judgment,
    Derivation,
    CheckResult,
    InvalidDerivation,
    check,
    weight_of,
    reweight,
    size_of,
    check_rule_transition_correspondence,
    derivation_to_json,
    derivation_from_json,
    render_derivation,
)
from .extractor import (
    NotFinal,
    IncompleteRun,
    ShapeMismatch,
    dry_type_closure,
    dry_type_env,
    type_final_state,
    expand,
    extract,
    extract_kam,
)
from .harness import (
    VerificationReport,
    random_closed_term,
    verify,
    fuzz,
)

__version__ = "0.1.0"
