#!/usr/bin/env python3
"""The textual rule notation and the flag-threading transformation.

Each evaluator in this package has a companion `.rules` file: the inference
rules written out in a small textual notation that the `whilesem.rule_dsl`
module parses, pretty-prints, compares up to renaming, and measures.

The star of this demo is `thread_flags`.  The flag-based semantics makes
every judgement carry a status flag in and out, which is boilerplate: in
almost every rule the flag enters `down`, flows left to right through the
premises, and leaves through the conclusion.  So the shipped source
`flag_based_implicit.rules` simply omits the flags (the signature marks
where they would go and what the default is), and `thread_flags` inserts
them mechanically.  The result is alpha-equal to the hand-written explicit
rules — the notation, not the author, does the plumbing.
"""

from whilesem import (
    RuleSet,
    alpha_equal,
    count_metrics,
    load_ruleset,
    parse_rules,
    pretty_rules,
    thread_flags,
)
from whilesem.rule_dsl import alpha_diff


def just(rs, *labels):
    """A ruleset containing only the named rules (for printing)."""
    return RuleSet(rs.signatures, [rs.by_label(l) for l in labels])


# --- 1. a ruleset is data ------------------------------------------------
implicit = load_ruleset("flag_based_implicit.rules")
print("two rules as written in the implicit source (no flags in sight):")
print(pretty_rules(just(implicit, "F-Seq", "F-While")))

# --- 2. threading makes the plumbing explicit ----------------------------
threaded = thread_flags(implicit)
print("the same two rules after thread_flags (flags now explicit):")
print(pretty_rules(just(threaded, "F-Seq", "F-While")))

explicit = load_ruleset("flag_based.rules")
print(f"alpha-equal to the hand-written explicit ruleset: "
      f"{alpha_equal(threaded, explicit)}")
print(f"threading twice changes nothing: "
      f"{alpha_equal(thread_flags(threaded), threaded)}")
print()

# --- 3. counting rules and premises --------------------------------------
# The point of the flag-based system is economy: one inductively defined
# relation covers convergence, divergence, and exceptions.  The pretty-
# big-step presentation needs more rules; the big-step presentation needs
# a whole second (coinductive) relation, much of it duplicating the first.
flag = count_metrics(explicit)
pretty = count_metrics(load_ruleset("pretty_big.rules"))
big = load_ruleset("big_step.rules")
both = big.union(load_ruleset("div_pred.rules"))
combined = count_metrics(both, base=big)

print("command-level cost of each presentation:")
print(f"  flag-based                : {flag}")
print(f"  pretty-big-step           : {pretty}")
print(f"  big-step + divergence pred: {combined}")
print()

# --- 4. alpha-comparison is a real diff, not a boolean -------------------
# Renaming metavariables consistently is invisible; changing the structure
# of a rule is reported by name.
seq_a = parse_rules("""
signature (c, sigma) =X=> (sigma')

rule X-Seq:
  (c1, sigma) =X=> (sigma1)
  (c2, sigma1) =X=> (sigma2)
  ---
  (seq c1 c2, sigma) =X=> (sigma2)
""")
seq_renamed = parse_rules("""
signature (c, sigma) =X=> (sigma')

rule X-Seq:
  (a, s) =X=> (t)
  (b, t) =X=> (u)
  ---
  (seq a b, s) =X=> (u)
""")
seq_swapped = parse_rules("""
signature (c, sigma) =X=> (sigma')

rule X-Seq:
  (c2, sigma1) =X=> (sigma2)
  (c1, sigma) =X=> (sigma1)
  ---
  (seq c1 c2, sigma) =X=> (sigma2)
""")
print(f"consistent renaming is invisible: {alpha_equal(seq_a, seq_renamed)}")
print(f"reordering premises is not      : {alpha_equal(seq_a, seq_swapped)}")
for line in alpha_diff(seq_a, seq_swapped):
    print(f"  {line}")
