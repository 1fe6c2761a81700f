"""Set cover with ordered replacement: LP relaxations, rounding algorithms
and instance families."""

from .model import (
    Cover,
    CoverSet,
    InfeasibleError,
    InputError,
    Instance,
    ItemType,
    OrderRelation,
    PrefixViolation,
    SetSystem,
    check_prefix,
    chain_decompose,
    dominates,
    leq,
    member,
    realize_cover,
    validate,
)
from .lp import FractionalSolution, enumerate_patterns, residual, solve_instance, solve_lp, take_floors
from .sizes import alpha_bound, compute_sizes, cover_chain, discard_tiny, pseudo_sizes
from .rounding import GapReport, additive_round, gap_bound, group_round
from .approx import dp_two_approx, exact_opt, first_fit, rand_mult_round

__version__ = "0.1.0"
