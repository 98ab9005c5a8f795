#!/usr/bin/env python3
"""Cross-checking the four evaluators on thousands of random programs.

The semantics are supposed to be equivalent: same final store when a
program converges, consistent stuckness, and — via the divergence provers —
consistent non-termination.  `whilesem.harness` turns that into a test:
generate programs, run every evaluator, and demand that the verdicts line
up.  A disagreement would be a bug in one of the five rule systems (or in
the claim that they coincide).
"""

from whilesem import (
    GenConfig,
    compare_all,
    format_verdict,
    fuzz_campaign,
    generate_program,
    parse_cmd,
    pretty_cmd,
)

# --- 1. the generator ----------------------------------------------------
# Programs are drawn over a fixed variable pool with a bias toward
# well-formedness (variables allocated before use), so that a healthy share
# converges rather than sticking on the first command.
cfg = GenConfig(seed=2026, max_depth=4)
print("five random programs:")
for i in range(5):
    print(f"  {pretty_cmd(generate_program(cfg, seed=i))}")
print()

# --- 2. one program, every semantics -------------------------------------
report = compare_all(parse_cmd("alloc x; x := 2; while x { x := x - 1 }"))
comparison = report.comparisons[0]
print("verdicts for a terminating loop:")
for name, verdict in comparison.verdicts.items():
    print(f"  {name:6s}: {format_verdict(verdict)}")
print(f"agreement: {report.agreement}")
print()

# --- 3. a campaign -------------------------------------------------------
summary = fuzz_campaign(GenConfig(seed=0), n=2_000, fuel=500)
print(f"campaign: {summary.total} programs in {summary.elapsed:.1f}s")
for verdict, count in sorted(summary.verdict_counts.items()):
    print(f"  {verdict:16s}: {count}")
print(f"disagreements: {len(summary.disagreements)}")
print()

# --- 4. input makes programs reactive ------------------------------------
# With `input` enabled each program runs once per input stream (all 0/1
# streams up to length 3), and the evaluators must also agree on how much
# of the stream was consumed.
summary = fuzz_campaign(GenConfig(seed=1, allow_input=True), n=300, fuel=500)
print(f"input campaign: {summary.total} programs x 15 streams, "
      f"{summary.elapsed:.1f}s, disagreements: {len(summary.disagreements)}")
print()

# --- 5. exceptions: abortion is not stuckness ----------------------------
# The flag-based evaluator is the only one that speaks `throw`/`try`, so
# these programs are checked for a different property: if every variable is
# allocated before use and there are no loops, the evaluator never gets
# stuck — an uncaught exception aborts cleanly with a value, it does not
# wedge the machine.
summary = fuzz_campaign(
    GenConfig(seed=2, allow_throw=True, wellformed=1.0,
              weights={"skip": 1, "alloc": 3, "assign": 4, "seq": 4,
                       "if": 2, "while": 0, "throw": 2, "catch": 2}),
    n=1_000,
    fuel=500,
)
print(f"throw campaign: {summary.total} programs, "
      f"exceptions surfacing: {summary.verdict_counts.get('exception', 0)}, "
      f"stuck: {summary.flag_stuck}")
