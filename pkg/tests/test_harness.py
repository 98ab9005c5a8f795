"""Program generation and the differential comparison driver."""

import json

from whilesem.harness import (
    DEFAULT_WEIGHTS,
    GenConfig,
    binary_streams,
    compare_all,
    default_streams,
    fuzz_campaign,
    generate_program,
)
from whilesem.parser import parse_cmd
from whilesem.syntax import (
    Alloc,
    Assign,
    Bop,
    Converged,
    DivergesProven,
    EMPTY_STREAM,
    InputStream,
    Skip,
    Stuck,
    Throw,
    While,
    cmd_has_exceptions,
    cmd_has_input,
)


def test_generation_is_deterministic():
    cfg = GenConfig(seed=123, allow_input=True, allow_throw=True)
    for i in (0, 5, 99):
        assert generate_program(cfg, i) == generate_program(cfg, i)
    # the config seed alone decides the default program
    assert generate_program(GenConfig(seed=7)) == generate_program(GenConfig(seed=7))


def test_depth_one_yields_only_leaf_commands():
    cfg = GenConfig(seed=1, max_depth=1, allow_throw=True)
    for i in range(300):
        c = generate_program(cfg, i)
        assert isinstance(c, (Skip, Alloc, Assign, Throw)), c


def test_feature_toggles_control_output():
    plain_cfg = GenConfig(seed=0)
    for i in range(300):
        c = generate_program(plain_cfg, i)
        assert not cmd_has_input(c) and not cmd_has_exceptions(c)

    throw_cfg = GenConfig(seed=0, allow_throw=True)
    assert sum(cmd_has_exceptions(generate_program(throw_cfg, i)) for i in range(1000)) > 100

    input_cfg = GenConfig(seed=0, allow_input=True)
    assert sum(cmd_has_input(generate_program(input_cfg, i)) for i in range(1000)) > 100


def test_loop_bodies_never_multiply():
    # iterated self-multiplication would grow values beyond any memory
    # budget long before fuel runs out, so loop bodies stick to + and -
    def mul_inside_loop(c, inside=False):
        if isinstance(c, While):
            return mul_inside_loop(c.body, True)
        if isinstance(c, Assign) and inside:
            return _has_mul(c.expr)
        for name in ("first", "second", "then", "orelse", "body", "handler"):
            sub = getattr(c, name, None)
            if sub is not None and mul_inside_loop(sub, inside):
                return True
        return False

    def _has_mul(e):
        if isinstance(e, Bop):
            return e.op == "*" or _has_mul(e.left) or _has_mul(e.right)
        return False

    cfg = GenConfig(seed=3)
    for i in range(500):
        assert not mul_inside_loop(generate_program(cfg, i))


def test_binary_streams_enumeration():
    streams = binary_streams(3)
    assert len(streams) == 15  # 1 + 2 + 4 + 8
    assert streams[0] == EMPTY_STREAM
    assert len({s.values for s in streams}) == 15


def test_default_streams_depend_on_input_use():
    assert default_streams(parse_cmd("skip")) == [EMPTY_STREAM]
    assert len(default_streams(parse_cmd("x := input"))) == 15


def test_factorial_agreement(fac4):
    report = compare_all(fac4, fuel=10_000)
    assert report.agreement
    [comp] = report.comparisons
    assert all(isinstance(v, Converged) for v in comp.verdicts.values())


def test_input_decides_between_stuck_and_divergence(input_gate):
    report = compare_all(input_gate, [InputStream.of(1), InputStream.of(0)], fuel=200)
    assert report.agreement
    one, zero = report.comparisons
    assert isinstance(one.verdicts["small"], Stuck)
    assert isinstance(zero.verdicts["small"], DivergesProven)
    assert zero.provers == {"div-pred": True, "pretty-co": True, "flag-co": True}


def test_divergence_detection_upgrades_verdict(spin):
    report = compare_all(spin, fuel=100)
    [comp] = report.comparisons
    assert isinstance(comp.verdicts["small"], DivergesProven)
    assert all(comp.provers.values())
    assert report.agreement


def test_exception_programs_judged_on_flag_side_only():
    report = compare_all(parse_cmd("try { throw 1 } catch { skip }"), fuel=100)
    assert report.flag_only
    assert report.agreement
    [comp] = report.comparisons
    # the other evaluators are still run and recorded, but not cross-checked
    assert isinstance(comp.verdicts["small"], Stuck)
    assert isinstance(comp.verdicts["flag"], Converged)


def test_campaign_counts_and_agreement():
    summary = fuzz_campaign(GenConfig(seed=0), 300, fuel=400)
    assert summary.ok()
    assert summary.total == 300
    assert sum(summary.verdict_counts.values()) == 300
    assert summary.verdict_counts["converged"] > 0
    assert summary.verdict_counts["diverges-proven"] > 0


def test_campaign_empty():
    summary = fuzz_campaign(GenConfig(seed=0), 0, fuel=10)
    assert summary.ok()
    assert summary.total == 0
    assert not summary.verdict_counts


def test_campaign_json_shape():
    summary = fuzz_campaign(GenConfig(seed=0), 20, fuel=200)
    data = summary.to_json()
    assert data["total"] == 20
    assert data["disagreements"] == []
    assert isinstance(data["elapsed_seconds"], float)


def test_wellformed_throw_corpus_never_sticks_in_flag_semantics():
    cfg = GenConfig(
        seed=77,
        allow_throw=True,
        wellformed=1.0,
        weights={**DEFAULT_WEIGHTS, "while": 0.0},
    )
    summary = fuzz_campaign(cfg, 300, fuel=500)
    assert summary.ok()
    assert summary.flag_stuck == 0
    assert summary.verdict_counts["exception"] > 0


def test_counterexamples_written_to_disk(tmp_path, monkeypatch):
    # force a fake disagreement to exercise the writer
    import whilesem.harness as hmod

    real = hmod.compare_all

    def sabotage(c, streams=None, fuel=500):
        report = real(c, streams, fuel)
        report.comparisons[0].failures.append("synthetic failure for testing")
        return report

    monkeypatch.setattr(hmod, "compare_all", sabotage)
    out = tmp_path / "ce"
    summary = fuzz_campaign(GenConfig(seed=0), 2, fuel=100, out_dir=str(out))
    assert not summary.ok()
    programs = sorted(out.glob("*.whl"))
    metas = sorted(out.glob("*.json"))
    assert len(programs) == 2 and len(metas) == 2
    # the program file replays and the metadata records the failure
    parse_cmd(programs[0].read_text())
    meta = json.loads(metas[0].read_text())
    assert meta["comparisons"][0]["failures"] == ["synthetic failure for testing"]
    assert meta["fuel"] == 100
