import json
import random

import pytest

from tsforge import signal_forge as sf
from tsforge import verify
from tsforge.gateway import OfflineGateway
from tsforge.pipeline import (
    QAItem,
    QAPipeline,
    build_intent,
    compute_gold_a,
    read_items,
    run_coder,
    write_items,
)
from tsforge.skill_controller import SkillAssignment


@pytest.fixture(scope="module")
def pool():
    return sf.load_domain_pool(sf.default_pool_path())


def pipeline(rng_seed=0, gateway=None, pool_=None):
    return QAPipeline(gateway or OfflineGateway(), pool=pool_, rng_seed=rng_seed)


class TestIntents:
    def seed(self, pool, s=4):
        return sf.compose_series(sf.sample_seed_plan(pool, s), s)

    def test_counting_routes_to_metadata_path(self, pool):
        seed = self.seed(pool)
        a = SkillAssignment(("SK3",), {"SK3": "counting"})
        intent = build_intent(seed, a, random.Random(0))
        assert intent["kind"] == "count_events"
        assert intent["format"] == "A"

    def test_aggregation_routes_to_program_path(self, pool):
        seed = self.seed(pool)
        a = SkillAssignment(("SK2", "SK3"), {"SK2": "explicit_interval", "SK3": "aggregation"})
        intent = build_intent(seed, a, random.Random(0))
        assert intent["kind"] == "window_mean"
        assert intent["format"] == "B"
        assert intent["params"]["start"] and intent["params"]["end"]

    def test_trend_question_is_metadata_fact(self, pool):
        seed = self.seed(pool)
        a = SkillAssignment(("SK1",), {"SK1": "trend"})
        intent = build_intent(seed, a, random.Random(0))
        assert intent["kind"] == "trend_direction"
        assert intent["format"] == "A"


class TestGoldA:
    def test_count_matches_manual_recount(self, pool):
        for s in range(30):
            seed = sf.compose_series(sf.sample_seed_plan(pool, s), s)
            intent = {"kind": "count_events", "params": {}, "format": "A"}
            node, text, evidence = compute_gold_a(seed, intent)
            assert node.fields["count"].atom.value == len(seed.channel_events())
            assert text == str(len(seed.channel_events()))

    def test_trend_label_from_plan(self, pool):
        seed = sf.compose_series(sf.sample_seed_plan(pool, 4), 4)
        intent = {"kind": "trend_direction", "params": {}, "format": "A"}
        node, _, _ = compute_gold_a(seed, intent)
        expected = {"increase": "increasing", "decrease": "decreasing", "keep_steady": "stable"}
        assert node.fields["trend"].atom.value == expected[seed.channels[0].attributes.trend.type]


class TestCoderLoop:
    class BrokenThenFixed(OfflineGateway):
        def _do_coder(self, ctx):
            if ctx["attempt"] == 1:
                return "value = mean(\nemit(value)"
            return ctx["program"]

    def test_diagnostics_fed_back(self, pool):
        seed = sf.compose_series(sf.sample_seed_plan(pool, 4), 4)
        g = self.BrokenThenFixed()
        intent = {
            "kind": "window_mean",
            "params": {
                "start": sf._iso(seed.timestamps[0]),
                "end": sf._iso(seed.timestamps[-1]),
            },
            "format": "B",
        }
        program, emitted = run_coder(g, seed, "q", intent)
        assert "emit(value)" in program
        coder_calls = [c for c in g.calls if c.kind == "coder"]
        assert len(coder_calls) == 2
        assert "failed" in coder_calls[1].user_prompt
        assert "line 1" in coder_calls[1].user_prompt

    class AlwaysBroken(OfflineGateway):
        def _do_coder(self, ctx):
            return "oops("

    def test_budget_exhausted(self, pool):
        from tsforge.pipeline import PipelineError

        seed = sf.compose_series(sf.sample_seed_plan(pool, 4), 4)
        intent = {
            "kind": "window_mean",
            "params": {"start": sf._iso(seed.timestamps[0]), "end": sf._iso(seed.timestamps[-1])},
            "format": "B",
        }
        with pytest.raises(PipelineError, match="after 5 attempts"):
            run_coder(self.AlwaysBroken(), seed, "q", intent)


class TestGeneration:
    def test_batch_has_questions_and_gold(self, pool):
        items = pipeline(pool_=pool).generate(15, verify=False)
        assert len(items) == 15
        for item in items:
            assert item.question.strip().endswith("?")
            assert item.gold.fields
            assert item.fmt in ("A", "B")
            if item.fmt == "B":
                assert item.plan_source and "emit" in item.plan_source
            assert item.status == "passed"

    def test_reproducible(self, pool):
        a = [i.to_dict() for i in pipeline(7, pool_=pool).generate(10, verify=False)]
        b = [i.to_dict() for i in pipeline(7, pool_=pool).generate(10, verify=False)]
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_round_trip_file(self, pool, tmp_path):
        items = pipeline(pool_=pool).generate(5, verify=False)
        path = tmp_path / "items.jsonl"
        write_items(items, path)
        back = read_items(path)
        assert [i.to_dict() for i in back] == [i.to_dict() for i in items]

    def test_skill_mix_tracks_controller(self, pool):
        p = pipeline(pool_=pool)
        p.generate(60, verify=False)
        assert p.controller.total == 60
        assert sum(p.controller.observed.values()) == 60


class TestVerificationGates:
    def make_item(self, pool, rng_seed=0, n=40, want_fmt=None, want_kind=None):
        p = pipeline(rng_seed, pool_=pool)
        for i in range(n):
            item = p.build_item(i, verify=False)
            if want_fmt and item.fmt != want_fmt:
                continue
            if want_kind and item.intent["kind"] != want_kind:
                continue
            return item, p.seed_for(i), p.gateway
        raise AssertionError("no matching item generated")

    def test_clean_item_passes(self, pool):
        item, seed, g = self.make_item(pool)
        verify.verify_item(item, seed, g)
        assert item.status == "passed"
        assert not item.flags

    def test_trend_contradiction_flagged(self, pool):
        item, seed, g = self.make_item(pool, want_kind="trend_direction")
        gold = item.gold.fields["trend"].atom
        gold.value = "decreasing" if gold.value != "decreasing" else "increasing"
        verify.verify_item(item, seed, g)
        assert item.status == "flagged"
        assert any("plot_check" in f for f in item.flags)

    def test_broken_plan_flagged(self, pool):
        item, seed, g = self.make_item(pool, want_fmt="B")
        item.plan_source = "this is not a program ("
        verify.verify_item(item, seed, g)
        assert item.status == "flagged"
        assert any("plan_check" in f for f in item.flags)

    def test_unsupported_gold_number_flagged(self, pool):
        item, seed, g = self.make_item(pool, want_kind="count_events")
        if "SK3" not in item.assignment["composition"]:
            item.assignment["composition"].append("SK3")
        item.gold.fields["count"].atom.value = 999
        verify.verify_item(item, seed, g)
        assert item.status == "flagged"
        assert any("metadata_support" in f for f in item.flags)

    def test_gold_number_missing_from_program_output_flagged(self, pool):
        item, seed, g = self.make_item(pool, want_fmt="B", want_kind="window_mean")
        item.gold.fields["value"].atom.value = 123456.78
        verify.verify_item(item, seed, g)
        assert item.status == "flagged"
        assert any("not present in program output" in f for f in item.flags)

    def test_verified_batch_statuses(self, pool):
        items = pipeline(pool_=pool).generate(12, verify=True)
        assert all(i.status in ("passed", "flagged") for i in items)
        assert sum(i.status == "passed" for i in items) >= 10


class TestPlotRendering:
    def test_deterministic_bytes(self, pool):
        p = pipeline(pool_=pool)
        item = p.build_item(0, verify=False)
        seed = p.seed_for(0)
        a = verify.plot_for_item(item, seed)
        b = verify.plot_for_item(item, seed)
        assert a == b
        assert a[:8] == b"\x89PNG\r\n\x1a\n"
