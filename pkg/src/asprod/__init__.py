"""Almost-sure-productivity analysis for probabilistic stream and tree
definitions: syntactic drift measure, exact small-step semantics, pushdown
translation, pop-probability equation systems, and a three-tier decision
procedure with Monte Carlo evidence."""

from .terms import (
    Choice,
    Cons,
    Definition,
    InvalidDefinition,
    Kind,
    Left,
    Mk,
    RecVar,
    Right,
    Tail,
    Term,
    subterms,
)
from .syntax import ParseError, format_term, parse_definition, parse_file, pretty_print
from .measure import Tier1, measure, tier1_verdict
from .semantics import (
    DepthLimitError,
    McHint,
    McReport,
    Out,
    OutNode,
    PeriodicWord,
    Trace,
    UNIFORM,
    Unfold,
    monte_carlo,
    parse_policy,
    prefix_distribution,
    sample_run,
    step,
)
from .ppda import (
    Config,
    CrossValidation,
    Move,
    Ppda,
    cross_validate,
    export,
    is_outputting,
    observable_distribution,
    ppda_step,
    sample_ppda_run,
    translate,
)
from .eqsys import (
    AlmostSureReturn,
    EqSystem,
    Equation,
    Monomial,
    SubReturn,
    Unknown,
    build_system,
    certify_subreturn,
    classify_heads,
    clean,
    kleene_solve,
    newton_solve,
    smt_export,
    spectral_le_one,
    subreturn_candidate,
)
from .decide import (
    AnalyzerConfig,
    AspResult,
    BuchiResult,
    GroundChain,
    InternalInconsistencyError,
    Tier,
    Verdict,
    buchi_verdict,
    decide_asp,
    exact_analysis,
    ground_chain,
)

__version__ = "0.1.0"
