"""Multiple-choice packaging of QA items, plus letter-level scoring.

Distractors are typed perturbations of the gold atom (wrong enough to
score zero under the graders, plausible enough to read naturally), the
gold letter position is seeded-random, and every option set passes a
hygiene audit before it ships.
"""

from __future__ import annotations

import json
import math
import re
import random
from typing import Optional, Sequence

from .gateway import Gateway, GatewayError, ModelRequest, render_prompt
from .pipeline import QAItem, _format_duration
from .scoring import load_hierarchies, parse_timestamp

LETTERS = "ABCDEFGH"
AUDIT_ATTEMPTS = 5
MAX_LENGTH_RATIO = 4.0

TIMESTAMP_OFFSET_BANDS_S = (
    (2 * 3600, 6 * 3600),
    (86400, 3 * 86400),
    (5 * 86400, 10 * 86400),
)

_CATEGORY_FAMILIES = (
    ("increasing", "decreasing", "stable"),
    ("higher", "lower", "equal"),
    (
        "upward spike",
        "downward spike",
        "sudden increase",
        "sudden decrease",
        "level shift",
        "sustained elevation",
    ),
)


class McqError(RuntimeError):
    pass


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().lower())


def _numbers_of(text: str) -> tuple:
    return tuple(re.findall(r"-?\d+(?:\.\d+)?", text))


def audit_failures(gold_text: str, options: Sequence[str]) -> list[str]:
    problems = []
    norm_gold = _normalize(gold_text)
    norms = [_normalize(o) for o in options]
    for i, o in enumerate(norms):
        if o != norm_gold and norm_gold and norm_gold in o:
            problems.append(f"option {i} contains the gold answer verbatim")
    if len(set(norms)) != len(norms):
        problems.append("duplicate options after normalization")
    nums = [_numbers_of(o) for o in norms]
    seen = {}
    for i, tup in enumerate(nums):
        if tup and tup in seen:
            problems.append(f"options {seen[tup]} and {i} are numerically identical")
        seen.setdefault(tup, i)
    lengths = [max(1, len(o)) for o in options]
    if max(lengths) / min(lengths) > MAX_LENGTH_RATIO:
        problems.append("option lengths differ by more than 4x")
    return problems


# ---------------------------------------------------------------------------
# Typed distractors


def _numeric_distractors(gold: float, rng: random.Random, n: int, render) -> list[str]:
    # Keep every distractor clearly outside the half-credit band around gold.
    band = 0.10 * max(abs(gold), 1.0)
    outs = []
    for mult in (0.8, 1.25, 1.6, 0.5, 2.0):
        cand = gold * mult
        if abs(cand - gold) <= band:
            cand = gold + math.copysign(band * rng.uniform(1.3, 2.0), mult - 1.0 or 1.0)
        text = render(cand)
        if text not in outs and text != render(gold):
            outs.append(text)
        if len(outs) == n:
            break
    k = 3
    while len(outs) < n:
        cand = gold + band * k * rng.uniform(1.1, 1.4)
        text = render(cand)
        if text not in outs and text != render(gold):
            outs.append(text)
        k += 1
    return outs


def _count_distractors(gold: int, rng: random.Random, n: int) -> list[str]:
    pool = [gold + 1, gold - 1, gold + 2, gold * 2 if gold >= 3 else gold + 3, gold - 2]
    outs = []
    for c in pool:
        if c >= 0 and c != gold and str(c) not in outs:
            outs.append(str(c))
        if len(outs) == n:
            return outs
    k = 3
    while len(outs) < n:
        c = gold + k
        if str(c) not in outs:
            outs.append(str(c))
        k += 1
    return outs


def _timestamp_distractors(gold, rng: random.Random, n: int) -> list[str]:
    from datetime import timedelta

    t = parse_timestamp(gold)
    outs = []
    bands = list(TIMESTAMP_OFFSET_BANDS_S)
    rng.shuffle(bands)
    while len(outs) < n:
        lo, hi = bands[len(outs) % len(bands)]
        off = rng.uniform(lo, hi) * rng.choice([-1.0, 1.0])
        text = (t + timedelta(seconds=off)).replace(microsecond=0).isoformat(sep=" ")
        if text not in outs and text != str(gold):
            outs.append(text)
    return outs


def _categorical_distractors(gold: str, rng: random.Random, n: int) -> list[str]:
    g = _normalize(gold)
    for family in _CATEGORY_FAMILIES:
        if g in family:
            others = [x for x in family if x != g]
            rng.shuffle(others)
            out = others[:n]
            while len(out) < n:
                out.append("unclear")
            return out
    return []


def _ordinal_distractors(gold: str, rng: random.Random, n: int) -> list[str]:
    for levels in load_hierarchies().values():
        if gold in levels:
            i = levels.index(gold)
            ranked = sorted(
                (x for x in levels if x != gold), key=lambda x: abs(levels.index(x) - i)
            )
            return ranked[:n]
    return []


def distractor_texts(item: QAItem, rng: random.Random, n: int, gateway: Optional[Gateway]) -> list[str]:
    name, fld = next(iter(item.gold.fields.items()))
    atom = fld.atom
    if atom is None:
        return _prose_distractors(item, rng, n, gateway)
    unit = f" {atom.unit}" if atom.unit and atom.subtype == "numeric_scalar" else ""

    if atom.subtype == "binary":
        return ["no" if _normalize(str(atom.value)) == "yes" else "yes"][:n]
    if atom.subtype == "integer_count":
        return _count_distractors(int(atom.value), rng, n)
    if atom.subtype == "numeric_scalar":
        return _numeric_distractors(float(atom.value), rng, n, lambda v: f"{v:g}{unit}")
    if atom.subtype == "duration":
        return _numeric_distractors(
            float(atom.value), rng, n, lambda v: _format_duration(round(v))
        )
    if atom.subtype == "timestamp":
        return _timestamp_distractors(atom.value, rng, n)
    if atom.subtype == "categorical":
        out = _categorical_distractors(str(atom.value), rng, n)
        if out:
            return out
    if atom.subtype == "ordinal":
        out = _ordinal_distractors(str(atom.value), rng, n)
        if out:
            return out
    return _prose_distractors(item, rng, n, gateway)


def _prose_distractors(item: QAItem, rng: random.Random, n: int, gateway: Optional[Gateway]) -> list[str]:
    if gateway is None:
        raise McqError(f"{item.qa_id}: no typed distractor rule and no gateway for prose options")
    resp = gateway.complete(
        ModelRequest(
            kind="distractor",
            role_prompt="You write plausibly wrong answer options.",
            user_prompt=render_prompt("distractor", n=n, question=item.question, gold_text=item.gold_text),
            expected_form="structured_record",
            required_fields=("options",),
            temperature=0.7,
            context={"gold_text": item.gold_text, "n": n, "qa_id": item.qa_id},
        )
    )
    options = [str(o) for o in resp.record["options"]]
    if len(options) < n:
        raise McqError(f"{item.qa_id}: gateway returned {len(options)} options, wanted {n}")
    return options[:n]


# ---------------------------------------------------------------------------
# Assembly


def build_mcq(item: QAItem, rng_seed: int = 0, gateway: Optional[Gateway] = None) -> dict:
    name, fld = next(iter(item.gold.fields.items()))
    is_binary = fld.atom is not None and fld.atom.subtype == "binary"
    n_options = 2 if is_binary else 4

    last_problems: list[str] = []
    for attempt in range(AUDIT_ATTEMPTS):
        rng = random.Random((rng_seed, item.qa_id, attempt).__str__())
        distractors = distractor_texts(item, rng, n_options - 1, gateway)
        options = [item.gold_text] + distractors
        last_problems = audit_failures(item.gold_text, options)
        if not last_problems:
            order = list(range(n_options))
            rng.shuffle(order)
            letters = LETTERS[:n_options]
            lettered = {letters[i]: options[j] for i, j in enumerate(order)}
            gold_letter = letters[order.index(0)]
            return {"options": lettered, "gold_letter": gold_letter}
    raise McqError(f"{item.qa_id}: options failed audit: {'; '.join(last_problems)}")


def attach_mcq(items: list[QAItem], rng_seed: int = 0, gateway: Optional[Gateway] = None) -> None:
    for item in items:
        item.mcq = build_mcq(item, rng_seed=rng_seed, gateway=gateway)


# ---------------------------------------------------------------------------
# Response scoring


def extract_letter(text: str, letters: Sequence[str] = "ABCD") -> Optional[str]:
    """First standalone token that is a valid option letter, else None."""
    valid = {l.upper() for l in letters}
    for tok in re.findall(r"[A-Za-z]+|\S", text):
        if tok.upper() in valid and len(tok) == 1:
            return tok.upper()
    return None


def mcq_score(response_text: str, mcq: dict) -> float:
    letter = extract_letter(response_text, list(mcq["options"]))
    if letter is None:
        return 0.0
    return 1.0 if letter == mcq["gold_letter"] else 0.0


def macro_f1(golds: Sequence[str], preds: Sequence[Optional[str]], letters: Sequence[str] = "ABCD") -> float:
    f1s = []
    for cls in letters:
        tp = sum(1 for g, p in zip(golds, preds) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(golds, preds) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(golds, preds) if g == cls and p != cls)
        if tp == fp == fn == 0:
            continue
        f1s.append(2 * tp / (2 * tp + fp + fn))
    return sum(f1s) / len(f1s) if f1s else 0.0


def stderr_of_proportion(p: float, n: int) -> float:
    if n <= 0:
        return float("nan")
    return math.sqrt(p * (1.0 - p) / n)
