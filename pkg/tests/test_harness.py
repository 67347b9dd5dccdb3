import random
from datetime import datetime, timedelta

import pytest

from tsforge import harness, mcq, signal_forge as sf
from tsforge.gateway import OfflineGateway
from tsforge.pipeline import QAItem, QAPipeline
from tsforge.scoring import AnswerField, AnswerNode, Atom

from test_tsq import build_seed


@pytest.fixture(scope="module")
def batch():
    p = QAPipeline(OfflineGateway(), rng_seed=3)
    items = p.generate(25, verify=False)
    mcq.attach_mcq(items, rng_seed=3, gateway=p.gateway)
    seeds = {p.seed_for(i).seed_id: p.seed_for(i) for i in range(25)}
    return items, seeds, p.gateway


class TestSerialization:
    def test_short_series_keeps_all_points(self):
        seed = build_seed([float(i) for i in range(40)])
        text = harness.serialize_series(seed)
        assert text.count("\t") == 40

    def test_long_series_subsampled_with_even_stride(self):
        assert harness.subsample_indices(512, 256) == list(range(0, 512, 2))
        assert len(harness.subsample_indices(1000, 256)) == 256

    def test_header_mentions_shape(self):
        seed = build_seed([1.0] * 10)
        seed.metadata = {
            "n_samples": 10, "sampling_interval_s": 60,
            "start": "a", "end": "b", "channels": [],
        }
        text = harness.serialize_series(seed)
        assert "10 samples" in text and "every 60s" in text

    def test_envelope_and_stop_tokens(self):
        prompt = harness.wrap_finetuned("Q?", "data")
        assert prompt.startswith("<QUE>") and prompt.endswith("<ANS>")
        assert harness.strip_completion("42 </END> junk") == "42"
        assert harness.strip_completion("42 <QUE> next question") == "42"
        assert harness.strip_completion("plain") == "plain"


class TestTools:
    def seed(self):
        return build_seed([10.0, 50.0, 20.0, 80.0, 30.0, 30.0, 5.0, 60.0, 10.0, 10.0])

    def test_value_at_time_nearest_ties_earlier(self):
        s = self.seed()
        r = harness.tool_value_at_time(s, "2021-06-16 03:02:30")
        assert r["time"] == "2021-06-16 03:02:00"  # tie -> earlier sample
        r2 = harness.tool_value_at_time(s, "2021-06-16 03:03:10")
        assert r2["value"] == 80.0

    def test_values_in_range_decimated(self):
        s = build_seed([float(i) for i in range(100)])
        out = harness.tool_values_in_range(
            s, "2021-06-16 03:00:00", "2021-06-16 05:00:00", max_points=10
        )
        assert len(out) == 10

    def test_peaks_strictly_greater_than_neighbors(self):
        s = self.seed()
        peaks = harness.tool_top_k_peaks(s, k=5)
        values = [p["value"] for p in peaks]
        assert 80.0 in values and 50.0 in values
        assert 30.0 not in values  # plateau, not a strict peak

    def test_troughs(self):
        troughs = harness.tool_top_k_troughs(self.seed(), k=2)
        assert troughs[0]["value"] == 5.0

    def test_trend_slope_sign(self):
        up = build_seed([float(i) for i in range(30)])
        assert harness.tool_trend_slope(up)["slope_per_sample"] > 0

    def test_first_last_n(self):
        r = harness.tool_first_last_n(self.seed(), n=2)
        assert [p["value"] for p in r["first"]] == [10.0, 50.0]
        assert [p["value"] for p in r["last"]] == [10.0, 10.0]

    def test_unknown_tool_is_reported(self):
        with pytest.raises(harness.ToolError, match="unknown tool"):
            harness.run_tool(self.seed(), "fetch_weather", {})

    def test_bad_args_reported(self):
        with pytest.raises(harness.ToolError, match="bad arguments"):
            harness.run_tool(self.seed(), "summary_stats", {"bogus": 1})


class TestToolAgent:
    def test_scripted_session(self):
        seed = build_seed([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        agent = harness.ToolAgent(OfflineGateway())
        script = [
            {"tool": "summary_stats", "args": {}},
            {"tool": "made_up_tool", "args": {}},
            {"final": "the mean is 3.5"},
        ]
        final, transcript = agent.answer(seed, "what is the mean?", context={"script": script})
        assert final == "the mean is 3.5"
        assert transcript[0]["result"]["mean"] == 3.5
        assert "unknown tool" in transcript[1]["result"]["error"]

    def test_budget_enforced(self):
        seed = build_seed([1.0] * 8)
        agent = harness.ToolAgent(OfflineGateway(), budget=3)
        script = [{"tool": "summary_stats", "args": {}}] * 10
        final, transcript = agent.answer(seed, "q", context={"script": script})
        assert final == ""
        assert len(transcript) == 3


class TestScoringRuns:
    def test_strong_model_scores_high(self, batch):
        items, seeds, gateway = batch
        results = harness.score_freeform_run(gateway, items, seeds)
        assert len(results) == len(items)
        scored = [r["row_score"] for r in results if r["row_score"] is not None]
        assert sum(scored) / len(scored) >= 0.95

    def test_mcq_oracle_and_guesser(self, batch):
        items, seeds, _ = batch

        class Oracle(OfflineGateway):
            def _do_mcq_answer(self, ctx):
                return ctx["gold_letter"]

        oracle = harness.score_mcq_run(Oracle(), items, seeds)
        assert all(r["correct"] == 1.0 for r in oracle)
        guesser = harness.score_mcq_run(OfflineGateway(), items, seeds)
        assert any(r["correct"] == 0.0 for r in guesser)

    def test_report_shape(self, batch):
        items, seeds, gateway = batch
        ff = harness.score_freeform_run(gateway, items, seeds)
        mc = harness.score_mcq_run(gateway, items, seeds)
        report = harness.skill_report(ff, mc)
        assert report["overall"]["freeform"]["n"] == len(ff)
        assert 0.0 <= report["parser_success"]["freeform"] <= 1.0
        text = harness.format_report(report)
        assert "overall" in text and "parser success" in text


class TestRandomBaselines:
    def fake_items(self, n, options=4):
        rng = random.Random(9)
        items = []
        for i in range(n):
            letters = "ABCD"[:options]
            gold = rng.choice(letters)
            item = QAItem(
                qa_id=f"qa-{i}", seed_id="s", question="q?", fmt="A",
                assignment={"composition": ["SK1"], "subtypes": {}, "depth": "L1"},
                intent={"kind": "t", "params": {}, "format": "A"},
                gold=AnswerNode("leaf", {"v": AnswerField(Atom("integer_count", i % 7))}),
                gold_text=str(i % 7), evidence={},
                mcq={"options": {l: f"o{l}" for l in letters}, "gold_letter": gold},
            )
            items.append(item)
        return items

    def test_uniform_guessing_near_chance(self):
        items = self.fake_items(2000)
        out = harness.random_mcq_baseline(items, rng_seed=1)
        assert out["accuracy"] == pytest.approx(0.25, abs=0.03)
        assert out["n"] == 2000
        assert 0 < out["stderr"] < 0.02

    def test_binary_chance(self):
        items = self.fake_items(2000, options=2)
        out = harness.random_mcq_baseline(items, rng_seed=2)
        assert out["accuracy"] == pytest.approx(0.5, abs=0.04)

    def test_native_baseline_between_zero_and_perfect(self, batch):
        items, _, _ = batch
        out = harness.random_native_baseline(items, rng_seed=4)
        assert out["n"] == len(items)
        assert 0.0 <= out["mean_row_score"] < 0.9
