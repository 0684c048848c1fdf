"""Quantum algorithms for black-box semigroups, simulated classically.

Index/period finding, discrete and shifted discrete logarithms, and
constructive membership, with query accounting on a metered handle.
"""

from .dlog import RhoStructure, find_rho, semigroup_dlog
from .errors import (
    CapExceeded,
    InconsistentRho,
    InsufficientSamples,
    MalformedSpec,
    ModeUnavailable,
    NoSolution,
    NotAPower,
    NotInGroup,
    NotMember,
    SgdlogError,
    SubroutineFailure,
    TokenBudgetExhausted,
)
from .membership import (
    BoundedTupleSpace,
    ExponentVector,
    LowerBoundSemigroupSpec,
    build_lower_bound_semigroup,
    constructive_membership,
    lex_first_decomposition_oracle,
    permutation_inversion_experiment,
)
from .oracles import SimMode
from .semigroup import (
    MatrixSemigroupSpec,
    QueryMeter,
    RhoSemigroupSpec,
    SemigroupHandle,
    TransformationSemigroupSpec,
    load_spec,
    make_handle,
    parse_word,
)
from .shifted import ShiftedRho, find_shifted_rho, shifted_dlog

__version__ = "0.1.0"
