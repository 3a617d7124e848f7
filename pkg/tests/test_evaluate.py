"""Dimension scores, weighted selection, and grid search."""

from __future__ import annotations

import itertools
import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from focusmed import evaluate as ev
from focusmed.errors import DataError, GatewayError
from focusmed.gateway import Gateway

from conftest import FnBackend


class FakeJudge:
    """Judge backend: scripted decompositions, substring entailment by default."""

    def __init__(self, facts_map=None, entail_fn=None, decompose_raw=None):
        self.facts_map = facts_map or {}
        self.entail_fn = entail_fn or (lambda fact, src: fact.lower() in src.lower())
        self.decompose_raw = decompose_raw
        self.verdicts: list[bool] = []
        self.calls = 0

    def chat(self, request):
        self.calls += 1
        if request.system == ev.DECOMPOSE_SYSTEM_PROMPT:
            if self.decompose_raw is not None:
                return self.decompose_raw, "stop"
            facts = self.facts_map.get(request.user)
            if facts is None:
                facts = [s.strip() for s in request.user.split(".") if s.strip()]
            return json.dumps(facts), "stop"
        source, fact = request.user.split("\n\nStatement:\n")
        source = source.removeprefix("Source text:\n")
        verdict = self.entail_fn(fact.strip(), source)
        self.verdicts.append(verdict)
        return ("YES" if verdict else "NO"), "stop"

    def embed(self, model_id, texts):
        return [[1.0] for _ in texts]


def judge_gateway(tmp_path, **kwargs) -> tuple[Gateway, FakeJudge]:
    judge = FakeJudge(**kwargs)
    return Gateway(tmp_path / "cache", judge), judge


# -- decomposition --


def test_decompose_fixture_contract(tmp_path):
    gw, _ = judge_gateway(
        tmp_path,
        facts_map={
            "Drug X causes rash and headache": [
                "Drug X causes rash",
                "Drug X causes headache",
            ]
        },
    )
    facts = ev.decompose_atomic_facts("Drug X causes rash and headache", gw)
    assert [f.text for f in facts] == ["Drug X causes rash", "Drug X causes headache"]


def test_decompose_empty_array(tmp_path):
    gw, _ = judge_gateway(tmp_path, facts_map={"hmm": []})
    assert ev.decompose_atomic_facts("hmm", gw) == []


def test_decompose_dedupes(tmp_path):
    gw, _ = judge_gateway(tmp_path, facts_map={"text": ["a fact", "A fact", "other"]})
    facts = ev.decompose_atomic_facts("text", gw)
    assert [f.text for f in facts] == ["a fact", "other"]


def test_decompose_unparseable_after_retries_raises_with_raw(tmp_path):
    gw, judge = judge_gateway(tmp_path, decompose_raw="not a list at all")
    with pytest.raises(ev.JudgeError, match="not a list at all"):
        ev.decompose_atomic_facts("text", gw, ev.EvalConfig(max_retries=2))
    assert judge.calls == 3  # fresh seed per retry


def test_decompose_empty_text_rejected(tmp_path):
    gw, _ = judge_gateway(tmp_path)
    with pytest.raises(ValueError):
        ev.decompose_atomic_facts("  ", gw)


# -- entailment --


def test_entailment_contained_fact_true(tmp_path):
    gw, _ = judge_gateway(tmp_path)
    assert ev.judge_entailment("the rash", "I noticed the rash yesterday", gw) is True


def test_entailment_contradicting_fact_false(tmp_path):
    gw, _ = judge_gateway(tmp_path)
    assert ev.judge_entailment("no symptoms at all", "severe rash and fever", gw) is False


def test_entailment_unparseable_defaults_to_false(tmp_path):
    backend = FnBackend(lambda r: "cannot decide, perhaps")
    gw = Gateway(tmp_path, backend)
    assert ev.judge_entailment("fact", "source", gw, ev.EvalConfig(max_retries=1)) is False
    assert backend.calls == 2


def test_verdict_parsing():
    assert ev._parse_verdict("YES") is True
    assert ev._parse_verdict("Answer: no.") is False
    assert ev._parse_verdict("maybe") is None


# -- dimension scores --


def test_faithfulness_three_of_four(tmp_path):
    facts = ["f one", "f two", "f three", "f four"]
    gw, _ = judge_gateway(
        tmp_path,
        facts_map={"summary": facts},
        entail_fn=lambda fact, src: fact != "f four",
    )
    score = ev.faithfulness_score("summary", "the source", gw)
    assert score.value == 0.75
    assert (score.n_match, score.n_total) == (3, 4)


def test_faithfulness_all_entailed(tmp_path):
    gw, _ = judge_gateway(tmp_path, facts_map={"s": ["a", "b"]}, entail_fn=lambda f, s: True)
    assert ev.faithfulness_score("s", "src", gw).value == 1.0


def test_faithfulness_zero_facts_degenerate(tmp_path):
    gw, _ = judge_gateway(tmp_path, facts_map={"s": []})
    score = ev.faithfulness_score("s", "src", gw)
    assert score.value == 0.0 and score.degenerate


def test_faithfulness_matches_raw_verdict_recount(tmp_path):
    rng = random.Random(7)
    for case in range(10):
        facts = [f"fact {case} {i}" for i in range(rng.randint(1, 6))]
        truth = {f: rng.random() < 0.5 for f in facts}
        gw, judge = judge_gateway(
            tmp_path / str(case),
            facts_map={"summary": facts},
            entail_fn=lambda fact, src: truth[fact],
        )
        score = ev.faithfulness_score("summary", "src", gw)
        assert score.value == sum(judge.verdicts) / len(judge.verdicts)


def test_conciseness_half_covered():
    # six tokens, key phrase span covers three
    score = ev.conciseness_score("skin rash cream is very good")
    assert score.n_total == 6
    assert score.value == score.n_match / 6


def test_conciseness_no_content_tokens():
    assert ev.conciseness_score("is it the of an").value == 0.0


def test_conciseness_fully_covered():
    from focusmed.textgraph import TextRankParams

    score = ev.conciseness_score("methotrexate rash", TextRankParams(top_fraction=1.0))
    assert score.value == 1.0


def test_conciseness_empty_summary_degenerate():
    score = ev.conciseness_score("")
    assert score.value == 0.0 and score.degenerate


def test_coverage_two_of_five(tmp_path):
    facts = [f"s{i}" for i in range(5)]
    gw, _ = judge_gateway(
        tmp_path,
        facts_map={"the chq": facts},
        entail_fn=lambda fact, src: fact in ("s0", "s3"),
    )
    score = ev.coverage_score("the chq", "summary", gw)
    assert score.value == 0.4
    assert (score.n_match, score.n_total) == (2, 5)


def test_coverage_identity_summary(tmp_path):
    gw, _ = judge_gateway(tmp_path, entail_fn=lambda f, s: True)
    assert ev.coverage_score("one fact. two fact", "one fact. two fact", gw).value == 1.0


def test_coverage_zero_facts_degenerate(tmp_path):
    gw, _ = judge_gateway(tmp_path, facts_map={"chq": []})
    score = ev.coverage_score("chq", "summary", gw)
    assert score.value == 0.0 and score.degenerate


# -- weighted scoring --


def test_weighted_mediqa_preset():
    weights = ev.WeightTriple.preset("mediqa")
    assert (weights.alpha, weights.beta, weights.gamma) == (0.6, 0.1, 0.3)
    assert ev.weighted_score(1.0, 0.0, 0.0, weights) == pytest.approx(0.6)


def test_weighted_meqsum_preset():
    weights = ev.WeightTriple.preset("meqsum")
    assert (weights.alpha, weights.beta, weights.gamma) == (0.3, 0.4, 0.3)
    assert ev.weighted_score(0.5, 0.5, 0.5, weights) == pytest.approx(0.5)


def test_weight_triple_validation():
    with pytest.raises(ValueError):
        ev.WeightTriple(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        ev.WeightTriple(-0.1, 0.6, 0.5)
    with pytest.raises(DataError):
        ev.WeightTriple.preset("nope")


unit = st.floats(min_value=0.0, max_value=1.0)


@given(unit, unit, unit, unit, unit)
def test_weighted_score_convex_bounds(f, c, cov, w1, w2):
    lo, hi = sorted((w1, w2))
    weights = ev.WeightTriple(lo, hi - lo, 1.0 - hi)
    score = ev.weighted_score(f, c, cov, weights)
    assert min(f, c, cov) - 1e-12 <= score <= max(f, c, cov) + 1e-12


@given(unit)
def test_weighted_score_of_equal_dimensions_is_identity(s):
    assert ev.weighted_score(s, s, s, ev.WeightTriple.preset("mediqa")) == pytest.approx(s)


# -- selection --


def candidates_2():
    return [
        ev.CandidateSummary("combo_a", "drug x causes the rash"),
        ev.CandidateSummary("combo_b", "totally unrelated words here"),
    ]


def select_gateway(tmp_path):
    # decompose by sentence; entailment by substring in the CHQ
    return judge_gateway(tmp_path)[0]


def test_select_single_candidate(tmp_path):
    gw = select_gateway(tmp_path)
    only = [ev.CandidateSummary("combo", "drug x rash")]
    chosen, scored = ev.select_best(only, "drug x rash", ev.WeightTriple.preset("mediqa"), gw)
    assert chosen is only[0]
    assert len(scored) == 1


def test_select_argmax_beats_position(tmp_path):
    gw = select_gateway(tmp_path)
    source = "drug x causes the rash on my arm"
    chosen, scored = ev.select_best(
        candidates_2()[::-1], source, ev.WeightTriple.preset("mediqa"), gw
    )
    assert chosen.combo_id == "combo_a"
    weighted = {s.combo_id: s.weighted for s in scored}
    assert weighted["combo_a"] > weighted["combo_b"]


def test_select_exact_tie_keeps_earlier_candidate(tmp_path):
    gw = select_gateway(tmp_path)
    twins = [
        ev.CandidateSummary("first", "drug x rash"),
        ev.CandidateSummary("second", "drug x rash"),
    ]
    chosen, _ = ev.select_best(twins, "drug x rash", ev.WeightTriple.preset("mediqa"), gw)
    assert chosen.combo_id == "first"


def test_select_duplicate_combo_ids_rejected(tmp_path):
    gw = select_gateway(tmp_path)
    twins = [ev.CandidateSummary("x", "a"), ev.CandidateSummary("x", "b")]
    with pytest.raises(DataError, match="duplicate combo_id"):
        ev.select_best(twins, "src", ev.WeightTriple.preset("mediqa"), gw)


def test_select_empty_candidates_rejected(tmp_path):
    gw = select_gateway(tmp_path)
    with pytest.raises(DataError):
        ev.select_best([], "src", ev.WeightTriple.preset("mediqa"), gw)


def test_select_permutation_stable_outside_ties(tmp_path):
    gw = select_gateway(tmp_path)
    source = "drug x causes the rash on my arm"
    forward, _ = ev.select_best(candidates_2(), source, ev.WeightTriple.preset("mediqa"), gw)
    backward, _ = ev.select_best(
        candidates_2()[::-1], source, ev.WeightTriple.preset("mediqa"), gw
    )
    assert forward.text == backward.text


def test_select_gateway_error_names_combo(tmp_path):
    gw = Gateway(tmp_path, backend=None)  # replay, no fixtures
    with pytest.raises(GatewayError, match="'combo_a'"):
        ev.select_best(candidates_2(), "src", ev.WeightTriple.preset("mediqa"), gw)


# -- grid search --


def stars_and_bars_oracle(n):
    return [
        (i, j, n - i - j) for i, j in itertools.product(range(n + 1), repeat=2) if i + j <= n
    ]


def test_enumeration_step_01_is_66():
    triples = ev.enumerate_weight_triples(0.1)
    assert len(triples) == len(stars_and_bars_oracle(10)) == 66


def test_enumeration_step_05_is_6():
    triples = ev.enumerate_weight_triples(0.5)
    assert len(triples) == len(stars_and_bars_oracle(2)) == 6


@pytest.mark.parametrize("step", [1.0, 0.5, 0.25, 0.2, 0.1, 0.05])
def test_enumeration_matches_oracle(step):
    n = round(1 / step)
    got = {(round(w.alpha * n), round(w.beta * n), round(w.gamma * n))
           for w in ev.enumerate_weight_triples(step)}
    assert got == set(stars_and_bars_oracle(n))


def test_enumeration_rejects_non_integral_step():
    with pytest.raises(ValueError):
        ev.enumerate_weight_triples(0.3)


def dev_records_dominant():
    # one candidate per record strictly dominates on every dimension
    return [
        ev.DevRecord(
            id=str(i),
            gold="the best summary text",
            candidates=(
                ev.ScoredCandidate("good", "the best summary text", 0.9, 0.8, 0.9),
                ev.ScoredCandidate("bad", "unrelated words entirely", 0.1, 0.2, 0.1),
            ),
        )
        for i in range(3)
    ]


def test_grid_search_dominance_constant_objective():
    result = ev.grid_search_weights(dev_records_dominant(), step=0.1)
    values = {v for _, v in result.evaluated}
    assert values == {1.0}
    assert len(result.evaluated) == 66


def test_grid_search_tie_breaks_lexicographically_smallest():
    result = ev.grid_search_weights(dev_records_dominant(), step=0.5)
    assert (result.best.alpha, result.best.beta, result.best.gamma) == (0.0, 0.0, 1.0)


def test_grid_search_prefers_discriminating_weights():
    # only alpha > beta selects the rouge-perfect candidate ("bad" is
    # listed first, so ties go against it)
    dev = [
        ev.DevRecord(
            id="0",
            gold="alpha beta gamma",
            candidates=(
                ev.ScoredCandidate("bad", "delta epsilon", 0.1, 0.9, 0.5),
                ev.ScoredCandidate("good", "alpha beta gamma", 0.9, 0.1, 0.5),
            ),
        )
    ]
    result = ev.grid_search_weights(dev, step=0.5)
    assert result.objective_value == 1.0
    assert result.best.alpha > result.best.beta
    assert (result.best.alpha, result.best.beta, result.best.gamma) == (0.5, 0.0, 0.5)


def test_grid_search_deterministic_across_runs():
    first = ev.grid_search_weights(dev_records_dominant(), step=0.1)
    second = ev.grid_search_weights(dev_records_dominant(), step=0.1)
    assert first == second


def test_grid_search_empty_dev_rejected():
    with pytest.raises(DataError):
        ev.grid_search_weights([], step=0.1)


def test_grid_search_callable_objective():
    dev = dev_records_dominant()
    result = ev.grid_search_weights(dev, step=0.5, objective=lambda pairs: 0.25)
    assert result.objective_value == 0.25


def test_grid_search_unknown_objective_rejected():
    with pytest.raises(DataError):
        ev.grid_search_weights(dev_records_dominant(), step=0.5, objective="bleu")
