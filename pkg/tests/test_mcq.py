import random
from datetime import datetime

import pytest

from tsforge import mcq, signal_forge as sf
from tsforge.gateway import OfflineGateway
from tsforge.pipeline import QAItem, QAPipeline
from tsforge.scoring import AnswerField, AnswerNode, Atom, parse_timestamp, score_relative


def leaf_item(subtype, value, gold_text, unit=None, qa_id="qa-x"):
    return QAItem(
        qa_id=qa_id,
        seed_id="s",
        question="q?",
        fmt="A",
        assignment={"composition": ["SK1"], "subtypes": {}, "depth": "L1"},
        intent={"kind": "t", "params": {}, "format": "A"},
        gold=AnswerNode("leaf", {"v": AnswerField(Atom(subtype, value, unit))}),
        gold_text=gold_text,
        evidence={},
    )


class TestDistractors:
    def test_binary_has_two_options(self):
        m = mcq.build_mcq(leaf_item("binary", "yes", "yes"))
        assert set(m["options"]) == {"A", "B"}
        assert sorted(m["options"].values()) == ["no", "yes"]

    def test_count_perturbations(self):
        m = mcq.build_mcq(leaf_item("integer_count", 4, "4"))
        values = {int(v) for v in m["options"].values()}
        assert 4 in values and len(values) == 4
        assert all(v >= 0 for v in values)

    def test_numeric_outside_half_credit_band(self):
        item = leaf_item("numeric_scalar", 100.0, "100 ms", unit="ms")
        m = mcq.build_mcq(item)
        gold_letter = m["gold_letter"]
        for letter, text in m["options"].items():
            if letter == gold_letter:
                continue
            value = float(text.split()[0])
            assert score_relative(value, 100.0) == 0.0, text

    def test_small_gold_numeric_guard(self):
        # |gold| < 1: multiplicative tweaks can land inside the credit band.
        item = leaf_item("numeric_scalar", 0.5, "0.5 %", unit="%")
        m = mcq.build_mcq(item)
        for letter, text in m["options"].items():
            if letter == m["gold_letter"]:
                continue
            value = float(text.split()[0])
            assert score_relative(value, 0.5) == 0.0, text

    def test_timestamp_offsets_in_bands(self):
        t0 = datetime(2023, 5, 1, 12, 0)
        item = leaf_item("timestamp", t0.isoformat(sep=" "), t0.isoformat(sep=" "))
        m = mcq.build_mcq(item)
        for letter, text in m["options"].items():
            if letter == m["gold_letter"]:
                continue
            off = abs((parse_timestamp(text) - t0).total_seconds())
            assert 2 * 3600 <= off <= 10 * 86400

    def test_categorical_family(self):
        m = mcq.build_mcq(leaf_item("categorical", "increasing", "increasing"))
        opts = set(m["options"].values())
        assert "decreasing" in opts and "stable" in opts

    def test_prose_fallback_uses_gateway(self):
        item = leaf_item("categorical", "weird unseen label", "weird unseen label")
        with pytest.raises(mcq.McqError, match="no typed distractor rule"):
            mcq.build_mcq(item)
        m = mcq.build_mcq(item, gateway=OfflineGateway())
        assert len(m["options"]) == 4


class TestAudit:
    def test_gold_substring_rejected(self):
        fails = mcq.audit_failures("42", ["42", "the answer is 42 obviously", "41", "43"])
        assert any("verbatim" in f for f in fails)

    def test_duplicates_rejected(self):
        fails = mcq.audit_failures("a", ["a", "b", "B", "c"])
        assert any("duplicate" in f for f in fails)

    def test_unit_stripped_numeric_duplicate(self):
        fails = mcq.audit_failures("5 ms", ["5 ms", "5 milliseconds", "6 ms", "7 ms"])
        assert any("numerically identical" in f for f in fails)

    def test_length_ratio(self):
        fails = mcq.audit_failures("ab", ["ab", "x" * 50, "cd", "ef"])
        assert any("lengths" in f for f in fails)

    def test_clean_set_passes(self):
        assert mcq.audit_failures("4", ["4", "5", "3", "8"]) == []


class TestPlacement:
    def test_gold_letter_uniformish(self):
        counts = {"A": 0, "B": 0, "C": 0, "D": 0}
        for i in range(200):
            item = leaf_item("integer_count", 4, "4", qa_id=f"qa-{i}")
            counts[mcq.build_mcq(item, rng_seed=1)["gold_letter"]] += 1
        assert all(c > 20 for c in counts.values()), counts

    def test_deterministic(self):
        item = leaf_item("integer_count", 4, "4")
        assert mcq.build_mcq(item, rng_seed=5) == mcq.build_mcq(item, rng_seed=5)


class TestLetterExtraction:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("B", "B"),
            ("The answer is C.", "C"),
            ("b) because ...", "B"),
            ("I think (D)", "D"),
            ("Answer: A is correct, not B", "A"),
            ("no letter here", None),
            ("ABBA", None),
            ("", None),
        ],
    )
    def test_first_standalone_letter(self, text, expected):
        assert mcq.extract_letter(text, "ABCD") == expected

    def test_unparseable_scores_zero(self):
        m = {"options": {"A": "1", "B": "2"}, "gold_letter": "A"}
        assert mcq.mcq_score("hmm", m) == 0.0
        assert mcq.mcq_score("A", m) == 1.0


class TestAggregates:
    def test_macro_f1_perfect(self):
        golds = ["A", "B", "C", "D"] * 5
        assert mcq.macro_f1(golds, golds) == 1.0

    def test_macro_f1_partial(self):
        golds = ["A", "A", "B", "B"]
        preds = ["A", "B", "B", "A"]
        assert 0.0 < mcq.macro_f1(golds, preds) < 1.0

    def test_stderr(self):
        assert mcq.stderr_of_proportion(0.25, 100) == pytest.approx(0.0433, abs=1e-3)
        assert mcq.stderr_of_proportion(0.0, 0) != mcq.stderr_of_proportion(0.0, 0)  # nan


class TestAttachToBatch:
    def test_generated_items_get_options(self):
        p = QAPipeline(OfflineGateway(), rng_seed=2)
        items = p.generate(10, verify=False)
        mcq.attach_mcq(items, rng_seed=2, gateway=p.gateway)
        for item in items:
            assert item.mcq is not None
            assert item.mcq["gold_letter"] in item.mcq["options"]
            assert item.mcq["options"][item.mcq["gold_letter"]] == item.gold_text
            assert not mcq.audit_failures(item.gold_text, list(item.mcq["options"].values()))
