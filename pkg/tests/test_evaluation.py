import pytest

from convkg.evaluation import (
    BenchmarkError,
    coref_link_prf,
    format_report,
    load_benchmark,
    prf,
)


# -- prf -------------------------------------------------------------------------


def test_prf_exact_match():
    assert prf({"b"}, {"b"}) == (1.0, 1.0, 1.0)


def test_prf_half_overlap():
    p, r, f1 = prf({"a", "b"}, {"b", "c"})
    assert (p, r, f1) == (0.5, 0.5, 0.5)


def test_prf_empty_system_nonempty_gold():
    assert prf(set(), {"x"}) == (0.0, 0.0, 0.0)


def test_prf_nonempty_system_empty_gold():
    assert prf({"x"}, set()) == (0.0, 0.0, 0.0)


def test_prf_both_empty_is_perfect():
    assert prf(set(), set()) == (1.0, 1.0, 1.0)


def test_prf_case_and_diacritic_insensitive():
    assert prf({"MADRID"}, {"madrid"}) == (1.0, 1.0, 1.0)
    assert prf({"Péninsule"}, {"peninsule"}) == (1.0, 1.0, 1.0)


def test_prf_role_swap_swaps_p_and_r():
    p1, r1, _ = prf({"a", "b", "c"}, {"b"})
    p2, r2, _ = prf({"b"}, {"a", "b", "c"})
    assert (p1, r1) == (r2, p2)


def test_prf_bounds_and_f1_le_max():
    cases = [({"a"}, {"a", "b"}), ({"a", "b", "c"}, {"c"}), ({"x"}, {"y"})]
    for sys, gold in cases:
        p, r, f1 = prf(sys, gold)
        assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0 and 0.0 <= f1 <= 1.0
        assert f1 <= max(p, r) + 1e-12


# -- MUC -------------------------------------------------------------------------


def test_muc_identical_chains():
    assert coref_link_prf([{"a", "b", "c"}], [{"a", "b", "c"}]) == (1.0, 1.0, 1.0)


def test_muc_split_chain_hand_computed():
    # gold {a,b,c}; system {a,b} + {c}: R = (3-2)/(3-1) = 0.5, P = 1.0
    p, r, f1 = coref_link_prf([{"a", "b"}, {"c"}], [{"a", "b", "c"}])
    assert p == pytest.approx(1.0, abs=1e-12)
    assert r == pytest.approx(0.5, abs=1e-12)
    assert f1 == pytest.approx(2 / 3, abs=1e-12)


def test_muc_all_singletons_is_zero():
    p, r, f1 = coref_link_prf([{"a"}, {"b"}, {"c"}], [{"a", "b", "c"}])
    assert (p, r, f1) == (0.0, 0.0, 0.0)


def test_muc_overlapping_chains_rejected():
    with pytest.raises(BenchmarkError, match="overlap"):
        coref_link_prf([{"a", "b"}, {"b", "c"}], [{"a", "b", "c"}])


def test_muc_partial_merge():
    # system merges two gold chains: P = (4-2)/(4-1), R = 1.0
    p, r, f1 = coref_link_prf([{"a", "b", "c", "d"}], [{"a", "b"}, {"c", "d"}])
    assert r == pytest.approx(1.0, abs=1e-12)
    assert p == pytest.approx(2 / 3, abs=1e-12)


# -- benchmark files ----------------------------------------------------------------


def test_load_benchmark_fixture():
    from convkg.engine import fixture_dir

    items = load_benchmark(f"{fixture_dir()}/benchmark.jsonl")
    assert len(items) == 20
    assert items[0].question == "Who is Michael Jackson?"
    assert any(it.context for it in items)


def test_empty_benchmark_rejected(tmp_path):
    path = tmp_path / "b.jsonl"
    path.write_text("\n")
    with pytest.raises(BenchmarkError):
        load_benchmark(str(path))


def test_malformed_benchmark_record(tmp_path):
    path = tmp_path / "b.jsonl"
    path.write_text('{"id": "x"}\n')
    with pytest.raises(BenchmarkError, match="gold"):
        load_benchmark(str(path))


def test_unanswerable_item_scored_perfect_on_clarification(tmp_path, engine):
    from convkg.evaluation import run_benchmark

    path = tmp_path / "b.jsonl"
    path.write_text('{"id": "u1", "question": "flurble grumph zixt?", "gold": []}\n')
    report = run_benchmark(str(path), engine.bench_system())
    assert report.items[0].clarification
    assert (report.items[0].precision, report.items[0].recall, report.items[0].f1) == (1.0, 1.0, 1.0)


def test_item_failure_never_aborts_run(tmp_path):
    from convkg.arbiter import Answer
    from convkg.evaluation import run_benchmark

    path = tmp_path / "b.jsonl"
    path.write_text(
        '{"id": "a", "question": "boom", "gold": ["x"]}\n'
        '{"id": "b", "question": "ok", "gold": ["fine"]}\n'
    )

    def system(question, context):
        if question == "boom":
            raise RuntimeError("backend exploded")
        return Answer(values=[], confidence=1.0, source="REASONING", value_labels=["fine"])

    report = run_benchmark(str(path), system)
    assert len(report.items) == 2
    assert report.items[0].f1 == 0.0
    assert report.items[1].f1 == 1.0


def test_report_format_stable():
    from convkg.evaluation import EvalReport, ItemResult

    report = EvalReport(
        items=[ItemResult("q01", 1.0, 1.0, 1.0, {"Madrid"}, {"Madrid"}, False)],
        macro_precision=1.0,
        macro_recall=1.0,
        macro_f1=1.0,
        n_clarifications=0,
        runtime_s=0.123,
    )
    text = format_report(report)
    assert "macro F1: 1.0000" in text
    assert "q01" in text
    # identical reports modulo the runtime line
    report.runtime_s = 9.9
    text2 = format_report(report)
    stripped = [ln for ln in text.splitlines() if not ln.startswith("runtime_s")]
    stripped2 = [ln for ln in text2.splitlines() if not ln.startswith("runtime_s")]
    assert stripped == stripped2
