"""An executable workbench for a While language under four operational
semanticses — small-step, big-step, pretty-big-step, and a flag-based
big-step with exceptions and input — plus certified divergence proofs,
a rule-notation toolkit, and a differential-testing harness.

The semanticses share one abstract syntax (`whilesem.syntax`) and one
concrete syntax (`whilesem.parser`).  Divergence is established by finite,
independently checkable certificates (`whilesem.coinduction`): either a
lasso of small-step configurations or a self-justifying derivation graph
for one of the three coinductive rule systems.  `whilesem.rule_dsl` parses
the textual rule notation shipped under `whilesem/rules/`, mechanizes the
implicit-to-explicit flag-plumbing transformation, and counts rules and
premises.  `whilesem.harness` cross-checks all evaluators on generated
programs.  The `whilesem` command line (see `whilesem.cli`) exposes all of
this.
"""

from .syntax import (
    Alloc,
    ANY_NAT,
    AnyNat,
    Assign,
    Assign2,
    Bop,
    Catch,
    Cmd,
    Converged,
    ConvO,
    DivergesProven,
    DivO,
    DOWN,
    Down,
    EMPTY_STORE,
    EMPTY_STREAM,
    Exc,
    ExceptionV,
    Expr,
    If,
    If2,
    Input,
    InputStream,
    Lit,
    Nat,
    NULL,
    Null,
    Plain,
    SemCmd,
    Seq,
    Seq2,
    Skip,
    Store,
    Stuck,
    Throw,
    Unknown,
    UP,
    Up,
    Val,
    Var,
    Verdict,
    While,
    While2,
    While3,
    fac_program,
    format_store,
    format_val,
    format_verdict,
)
from .parser import ParseError, parse_cmd, parse_expr, parse_stream, pretty_cmd, pretty_expr
from .small_step import SmallConfig, Trace, run_star, step
from .big_step import Done, OutOfFuel, StuckB, eval_big, fuel_used
from .pretty_big import DoneP, OutOfFuelP, StuckP, eval_pretty
from .flag_based import FlagResult, OutOfFuelF, StuckF, eval_flag, flag_fuel_used
from .coinduction import (
    Abstraction,
    AbstractionUnsound,
    DerivationGraph,
    GraphNode,
    Lasso,
    SYSTEMS,
    certificate_from_json,
    certificate_to_json,
    check_certificate,
    detect_lasso,
    graph_error,
    graph_from_tree,
    graph_to_json,
    lasso_error,
    lasso_to_json,
    prove_divergence,
)
from .derivation import DerivTree, Recorder, tree_to_json
from .rule_dsl import (
    Metrics,
    MixedFlagUsage,
    RuleParseError,
    RuleSet,
    alpha_equal,
    count_metrics,
    load_ruleset,
    parse_rules,
    pretty_rules,
    thread_flags,
)
from .harness import CompareReport, GenConfig, compare_all, fuzz_campaign, generate_program

__version__ = "0.1.0"

__all__ = [
    "ANY_NAT",
    "Abstraction",
    "AbstractionUnsound",
    "Alloc",
    "AnyNat",
    "Assign",
    "Assign2",
    "Bop",
    "Catch",
    "Cmd",
    "CompareReport",
    "ConvO",
    "Converged",
    "DOWN",
    "DerivTree",
    "DerivationGraph",
    "DivO",
    "DivergesProven",
    "Done",
    "DoneP",
    "Down",
    "EMPTY_STORE",
    "EMPTY_STREAM",
    "Exc",
    "ExceptionV",
    "Expr",
    "FlagResult",
    "GenConfig",
    "GraphNode",
    "If",
    "If2",
    "Input",
    "InputStream",
    "Lasso",
    "Lit",
    "Metrics",
    "MixedFlagUsage",
    "NULL",
    "Nat",
    "Null",
    "OutOfFuel",
    "OutOfFuelF",
    "OutOfFuelP",
    "ParseError",
    "Plain",
    "Recorder",
    "RuleParseError",
    "RuleSet",
    "SYSTEMS",
    "SemCmd",
    "Seq",
    "Seq2",
    "Skip",
    "SmallConfig",
    "Store",
    "Stuck",
    "StuckB",
    "StuckF",
    "StuckP",
    "Throw",
    "Trace",
    "UP",
    "Unknown",
    "Up",
    "Val",
    "Var",
    "Verdict",
    "While",
    "While2",
    "While3",
    "alpha_equal",
    "certificate_from_json",
    "certificate_to_json",
    "check_certificate",
    "compare_all",
    "count_metrics",
    "detect_lasso",
    "eval_big",
    "eval_flag",
    "eval_pretty",
    "fac_program",
    "flag_fuel_used",
    "format_store",
    "format_val",
    "format_verdict",
    "fuel_used",
    "fuzz_campaign",
    "generate_program",
    "graph_error",
    "graph_from_tree",
    "graph_to_json",
    "lasso_error",
    "lasso_to_json",
    "load_ruleset",
    "parse_cmd",
    "parse_expr",
    "parse_rules",
    "parse_stream",
    "pretty_cmd",
    "pretty_expr",
    "pretty_rules",
    "prove_divergence",
    "run_star",
    "step",
    "thread_flags",
    "tree_to_json",
]
