"""Session-typed processes with secrecy levels.

Typecheck processes against a secrecy lattice, run them, and test whether
two processes can be told apart by an observer at a given level.
"""

from .canon import Binder, canonical_key
from .checker import (
    Derivation,
    IllTyped,
    Judgment,
    TypeIssue,
    check,
    check_closed,
    expand_forwarder,
    forwarder_context,
    typechecks,
)
from .lattice import LatticeError, SecrecyLattice, UnknownLevel, two_point
from .security import (
    ContextSpec,
    RelationVerdict,
    RelevanceResult,
    dsni_equivalent,
    fundamental_check,
    observably_equivalent,
    quasi_running_secrecy,
    relevant,
    term_related,
    value_related,
)
from .semantics import (
    Network,
    NormalForm,
    active_context_output_names,
    active_interface_names,
    canonical_print,
    enumerate_redexes,
    exhaust_unobservable,
    normal_form,
    plug,
    reachable_states,
    reduce_all,
    split,
    struct_congruent,
    unobservable_step,
)
from .session_types import (
    Bot,
    One,
    ParT,
    Plus,
    SessionType,
    Tensor,
    TypingContext,
    With,
    context_weight,
    dual,
    project,
    weight,
)
from .surface import ParseError, parse, parse_file, parse_process, parse_type, pretty, print_process, print_type
from .syntax import (
    Branch,
    Close,
    Hole,
    Inaction,
    Par,
    Process,
    Recv,
    Res,
    Select,
    Send,
    Wait,
    alpha_equivalent,
    fn,
    fcn,
    aon,
    free_names,
    rename,
    substitute,
)

__version__ = "0.1.0"
