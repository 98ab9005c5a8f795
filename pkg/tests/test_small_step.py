"""The transition relation: single steps, runs, traces, stuck reasons."""

from whilesem.parser import parse_cmd
from whilesem.small_step import SmallConfig, run_star, step, stuck_reason
from whilesem.syntax import (
    Converged,
    EMPTY_STORE,
    EMPTY_STREAM,
    InputStream,
    Nat,
    NULL,
    Seq,
    Skip,
    Store,
    Stuck,
    Unknown,
    fac_program,
)


def _cfg(src, store=EMPTY_STORE, stream=EMPTY_STREAM):
    return SmallConfig(parse_cmd(src), store, stream)


def test_skip_is_terminal():
    assert step(_cfg("skip")) is None


def test_alloc_binds_null():
    nxt = step(_cfg("alloc x"))
    assert nxt.cmd == Skip()
    assert nxt.store.get("x") == NULL


def test_alloc_twice_is_stuck():
    cfg = _cfg("alloc x", Store({"x": Nat(0)}))
    assert step(cfg) is None
    assert "already-allocated" in stuck_reason(cfg)


def test_assign_requires_allocation():
    cfg = _cfg("x := 1")
    assert step(cfg) is None
    assert "unallocated" in stuck_reason(cfg)
    nxt = step(_cfg("x := 1", Store({"x": NULL})))
    assert nxt.store.get("x") == Nat(1)


def test_monus_truncates_at_zero():
    nxt = step(_cfg("x := 1 - 2", Store({"x": NULL})))
    assert nxt.store.get("x") == Nat(0)


def test_null_operand_is_stuck():
    cfg = _cfg("x := x + 1", Store({"x": NULL}))
    assert step(cfg) is None
    assert "null" in stuck_reason(cfg)


def test_guard_nonzero_takes_then_branch():
    nxt = step(_cfg("if 2 { alloc y } else { skip }"))
    assert nxt.cmd == parse_cmd("alloc y")


def test_guard_null_counts_as_nonzero():
    nxt = step(_cfg("if x { alloc y } else { skip }", Store({"x": NULL})))
    assert nxt.cmd == parse_cmd("alloc y")


def test_guard_zero_takes_else_branch():
    nxt = step(_cfg("if 0 { alloc y } else { skip }"))
    assert nxt.cmd == Skip()


def test_while_unfolds_to_body_then_loop():
    w = parse_cmd("while 1 { skip }")
    nxt = step(SmallConfig(w, EMPTY_STORE, EMPTY_STREAM))
    assert nxt.cmd == Seq(Skip(), w)
    # and the unfolding steps back to the loop itself: a two-step cycle
    again = step(nxt)
    assert again.cmd == w


def test_seq_steps_in_first_component():
    nxt = step(_cfg("alloc x; skip"))
    assert nxt.cmd == parse_cmd("skip; skip")


def test_input_consumes_stream_in_order():
    cfg = _cfg("x := input; y := input",
               Store({"x": NULL, "y": NULL}),
               InputStream.of(3, 5))
    verdict, _ = run_star(cfg, 100)
    assert verdict == Converged(Store({"x": Nat(3), "y": Nat(5)}))


def test_exhausted_stream_is_stuck():
    cfg = _cfg("x := input", Store({"x": NULL}))
    assert step(cfg) is None
    assert "input" in stuck_reason(cfg)


def test_throw_has_no_rule():
    cfg = _cfg("throw 1")
    assert step(cfg) is None
    assert "throw" in stuck_reason(cfg)
    cfg = _cfg("try { skip } catch { skip }")
    assert step(cfg) is None


def test_run_star_factorial():
    verdict, trace = run_star(SmallConfig(fac_program(4), EMPTY_STORE, EMPTY_STREAM), 10_000)
    assert verdict == Converged(Store({"c": Nat(0), "r": Nat(24)}))
    assert trace.configs[0].cmd == fac_program(4)
    # every adjacent pair in the trace is one transition
    for a, b in zip(trace.configs, trace.configs[1:]):
        assert step(a) == b


def test_run_star_out_of_fuel():
    verdict, trace = run_star(_cfg("while 1 { skip }"), 7)
    assert verdict == Unknown(7)
    assert len(trace.configs) == 8  # initial config plus seven steps


def test_run_star_stuck_reports_reason():
    verdict, _ = run_star(_cfg("alloc x; x := y"), 100)
    assert isinstance(verdict, Stuck)
    assert "y" in verdict.reason
