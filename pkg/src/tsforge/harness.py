"""Evaluation harness: feed items to a candidate model and score the results.

Supports three presentation modes (serialized text, rendered plot bytes,
and a tool-calling loop over the raw series), random baselines, and a
report aggregated per skill composition.
"""

from __future__ import annotations

import json
import math
import random
from collections import defaultdict
from typing import Optional

import numpy as np

from . import mcq as mcq_mod
from .gateway import Gateway, GatewayError, ModelRequest
from .parsing import judge_rationales, parse_response
from .pipeline import QAItem
from .plotting import render_plot  # noqa: F401  (re-exported for callers)
from .scoring import map_likert, score_atom, score_row
from .signal_forge import Seed, _iso, _parse_dt

MAX_SERIALIZED_POINTS = 256
TOOL_ROUND_BUDGET = 8

# Envelope used by fine-tuned completion models.
QUE_OPEN = "<QUE>"
ANS_OPEN = "<ANS>"
STOP_TOKENS = ("</END>", "<END>", "<QUE>")


def subsample_indices(n: int, max_points: int = MAX_SERIALIZED_POINTS) -> list[int]:
    if n <= max_points:
        return list(range(n))
    return sorted({i * n // max_points for i in range(max_points)})


def serialize_series(seed: Seed, max_points: int = MAX_SERIALIZED_POINTS) -> str:
    lines = []
    n = len(seed.timestamps)
    lines.append(
        f"# {len(seed.channels)} channel(s), {n} samples, "
        f"every {seed.sampling_interval_s}s, "
        f"{_iso(seed.timestamps[0])} .. {_iso(seed.timestamps[-1])}"
    )
    idx = subsample_indices(len(seed.timestamps), max_points)
    for ch in seed.channels:
        lines.append(f"## {ch.variable.variable} ({ch.variable.unit})")
        for i in idx:
            lines.append(f"{_iso(seed.timestamps[i])}\t{ch.values[i]:.4f}")
    return "\n".join(lines)


def wrap_finetuned(question: str, series_text: str) -> str:
    return f"{QUE_OPEN}{series_text}\n\n{question}{ANS_OPEN}"


def strip_completion(text: str) -> str:
    for tok in STOP_TOKENS:
        cut = text.find(tok)
        if cut != -1:
            text = text[:cut]
    return text.strip()


# ---------------------------------------------------------------------------
# Tools over the raw series


class ToolError(ValueError):
    pass


def _values(seed: Seed, channel: Optional[str]) -> tuple[list, list[float]]:
    try:
        return seed.timestamps, seed.channel_values(channel)
    except KeyError as e:
        raise ToolError(str(e.args[0]))


def tool_summary_stats(seed: Seed, channel: Optional[str] = None) -> dict:
    _, v = _values(seed, channel)
    arr = np.asarray(v)
    return {
        "count": len(v),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "mean": float(arr.mean()),
    }


def tool_value_at_time(seed: Seed, time: str, channel: Optional[str] = None) -> dict:
    ts, v = _values(seed, channel)
    t = _parse_dt(time)
    best = min(range(len(ts)), key=lambda i: (abs((ts[i] - t).total_seconds()), i))
    return {"time": _iso(ts[best]), "value": v[best]}


def tool_values_in_range(
    seed: Seed, start: str, end: str, max_points: int = 32, channel: Optional[str] = None
) -> list:
    ts, v = _values(seed, channel)
    t0, t1 = _parse_dt(start), _parse_dt(end)
    if t0 > t1:
        t0, t1 = t1, t0
    pairs = [(t, x) for t, x in zip(ts, v) if t0 <= t <= t1]
    idx = subsample_indices(len(pairs), int(max_points))
    return [{"time": _iso(pairs[i][0]), "value": pairs[i][1]} for i in idx]


def _local_extrema(v: list[float], sign: int) -> list[int]:
    out = []
    for i in range(1, len(v) - 1):
        if sign * v[i] > sign * v[i - 1] and sign * v[i] > sign * v[i + 1]:
            out.append(i)
    return out


def tool_top_k_peaks(seed: Seed, k: int = 3, channel: Optional[str] = None) -> list:
    ts, v = _values(seed, channel)
    peaks = sorted(_local_extrema(v, +1), key=lambda i: -v[i])[: int(k)]
    return [{"time": _iso(ts[i]), "value": v[i]} for i in peaks]


def tool_top_k_troughs(seed: Seed, k: int = 3, channel: Optional[str] = None) -> list:
    ts, v = _values(seed, channel)
    troughs = sorted(_local_extrema(v, -1), key=lambda i: v[i])[: int(k)]
    return [{"time": _iso(ts[i]), "value": v[i]} for i in troughs]


def tool_trend_slope(seed: Seed, channel: Optional[str] = None) -> dict:
    _, v = _values(seed, channel)
    x = np.arange(len(v), dtype=float)
    slope = float(np.polyfit(x, np.asarray(v), 1)[0])
    return {"slope_per_sample": slope}


def tool_first_last_n(seed: Seed, n: int = 5, channel: Optional[str] = None) -> dict:
    ts, v = _values(seed, channel)
    n = int(n)
    head = [{"time": _iso(t), "value": x} for t, x in zip(ts[:n], v[:n])]
    tail = [{"time": _iso(t), "value": x} for t, x in zip(ts[-n:], v[-n:])]
    return {"first": head, "last": tail}


TOOLS = {
    "summary_stats": tool_summary_stats,
    "value_at_time": tool_value_at_time,
    "values_in_range": tool_values_in_range,
    "top_k_peaks": tool_top_k_peaks,
    "top_k_troughs": tool_top_k_troughs,
    "trend_slope": tool_trend_slope,
    "first_last_n": tool_first_last_n,
}


def run_tool(seed: Seed, name: str, args: dict):
    fn = TOOLS.get(name)
    if fn is None:
        raise ToolError(f"unknown tool {name!r}; available: {', '.join(sorted(TOOLS))}")
    try:
        return fn(seed, **args)
    except TypeError as e:
        raise ToolError(f"bad arguments for {name}: {e}")


class ToolAgent:
    """Round-limited tool loop: the model either calls a tool or answers."""

    def __init__(self, gateway: Gateway, budget: int = TOOL_ROUND_BUDGET):
        self.gateway = gateway
        self.budget = budget

    def answer(self, seed: Seed, question: str, context: Optional[dict] = None) -> tuple[str, list]:
        transcript: list[dict] = []
        for step in range(self.budget):
            resp = self.gateway.complete(
                ModelRequest(
                    kind="tool_agent",
                    role_prompt="You analyze time series with tools.",
                    user_prompt=json.dumps(
                        {"question": question, "tools": sorted(TOOLS), "history": transcript},
                        default=str,
                    ),
                    expected_form="structured_record",
                    context={**(context or {}), "step": step, "history": transcript},
                )
            )
            move = resp.record
            if "final" in move:
                transcript.append({"final": move["final"]})
                return str(move["final"]), transcript
            name = move.get("tool", "")
            args = move.get("args", {}) or {}
            try:
                result = run_tool(seed, name, args)
            except ToolError as e:
                result = {"error": str(e)}
            transcript.append({"tool": name, "args": args, "result": result})
        return "", transcript


# ---------------------------------------------------------------------------
# Candidate model runners


def ask_freeform(gateway: Gateway, item: QAItem, seed: Seed) -> str:
    prompt = f"{serialize_series(seed)}\n\nQuestion: {item.question}\nAnswer concisely."
    resp = gateway.complete(
        ModelRequest(
            kind="answer",
            role_prompt="You answer questions about time series.",
            user_prompt=prompt,
            context={"question": item.question, "reference": item.gold_text},
        )
    )
    return strip_completion(resp.text)


def ask_mcq(gateway: Gateway, item: QAItem, seed: Seed) -> str:
    letters = sorted(item.mcq["options"])
    options = "\n".join(f"{l}. {item.mcq['options'][l]}" for l in letters)
    prompt = (
        f"{serialize_series(seed)}\n\nQuestion: {item.question}\n{options}\n"
        "Reply with the letter only."
    )
    resp = gateway.complete(
        ModelRequest(
            kind="mcq_answer",
            role_prompt="You answer multiple-choice questions.",
            user_prompt=prompt,
            expected_form="single_letter",
            context={
                "letters": letters,
                "question": item.question,
                "gold_letter": item.mcq["gold_letter"],
            },
        )
    )
    return resp.text


# ---------------------------------------------------------------------------
# Scoring runs


def score_freeform_run(
    gateway: Gateway, items: list[QAItem], seeds: dict[str, Seed]
) -> list[dict]:
    results = []
    for item in items:
        response = ask_freeform(gateway, item, seeds[item.seed_id])
        pred, provenance = parse_response(gateway, response, item.gold)
        rationale_scores = None
        flags: list[str] = []
        if any(f.rationale is not None for f in item.gold.fields.values()):
            likert, flags = judge_rationales(gateway, response, item.gold)
            rationale_scores = {k: map_likert(v) for k, v in likert.items()}
        record = score_row(pred, item.gold, provenance, rationale_scores=rationale_scores)
        results.append(
            {
                "qa_id": item.qa_id,
                "response": response,
                "provenance": provenance,
                "row_score": None if record is None else record.row_score,
                "flags": flags + (record.flags if record else []),
                "composition": tuple(item.assignment["composition"]),
            }
        )
    return results


def score_mcq_run(gateway: Gateway, items: list[QAItem], seeds: dict[str, Seed]) -> list[dict]:
    results = []
    for item in items:
        if not item.mcq:
            continue
        text = ask_mcq(gateway, item, seeds[item.seed_id])
        letters = sorted(item.mcq["options"])
        letter = mcq_mod.extract_letter(text, letters)
        results.append(
            {
                "qa_id": item.qa_id,
                "letter": letter,
                "gold_letter": item.mcq["gold_letter"],
                "correct": 1.0 if letter == item.mcq["gold_letter"] else 0.0,
                "parsed": letter is not None,
                "composition": tuple(item.assignment["composition"]),
            }
        )
    return results


# ---------------------------------------------------------------------------
# Random baselines


def random_mcq_baseline(items: list[QAItem], rng_seed: int = 0) -> dict:
    rng = random.Random(rng_seed)
    golds, preds = [], []
    for item in items:
        if not item.mcq:
            continue
        letters = sorted(item.mcq["options"])
        golds.append(item.mcq["gold_letter"])
        preds.append(rng.choice(letters))
    n = len(golds)
    acc = sum(g == p for g, p in zip(golds, preds)) / n if n else float("nan")
    return {
        "n": n,
        "accuracy": acc,
        "stderr": mcq_mod.stderr_of_proportion(acc, n) if n else float("nan"),
        "macro_f1": mcq_mod.macro_f1(golds, preds),
    }


def random_native_baseline(items: list[QAItem], rng_seed: int = 0) -> dict:
    """Answer each item with a gold atom drawn from another item of the
    same field subtype — random but type-plausible."""
    rng = random.Random(rng_seed)
    by_subtype = defaultdict(list)
    for item in items:
        for f in item.gold.fields.values():
            if f.atom is not None:
                by_subtype[f.atom.subtype].append(f.atom)
    scores = []
    for item in items:
        field_scores = []
        for f in item.gold.fields.values():
            if f.atom is None:
                continue
            candidates = by_subtype[f.atom.subtype]
            pick = rng.choice(candidates)
            s, _ = score_atom(pick, f.atom)
            field_scores.append(s)
        if field_scores:
            scores.append(sum(field_scores) / len(field_scores))
    n = len(scores)
    mean = sum(scores) / n if n else float("nan")
    return {"n": n, "mean_row_score": mean}


# ---------------------------------------------------------------------------
# Reporting


def _cell(scores: list[float]) -> dict:
    n = len(scores)
    if not n:
        return {"n": 0, "mean": float("nan"), "stderr": float("nan")}
    mean = sum(scores) / n
    var = sum((s - mean) ** 2 for s in scores) / n
    return {"n": n, "mean": mean, "stderr": math.sqrt(var / n) if n else float("nan")}


def skill_report(freeform_results: list[dict], mcq_results: list[dict]) -> dict:
    comps = defaultdict(lambda: {"freeform": [], "mcq": []})
    for r in freeform_results:
        if r["row_score"] is not None:
            comps["+".join(r["composition"])]["freeform"].append(r["row_score"])
    for r in mcq_results:
        comps["+".join(r["composition"])]["mcq"].append(r["correct"])
    cells = {
        label: {"freeform": _cell(v["freeform"]), "mcq": _cell(v["mcq"])}
        for label, v in sorted(comps.items())
    }
    ff_all = [r["row_score"] for r in freeform_results if r["row_score"] is not None]
    mc_all = [r["correct"] for r in mcq_results]
    parser_ok = [r["provenance"] != "all_failed" for r in freeform_results]
    letters_ok = [r["parsed"] for r in mcq_results]
    return {
        "cells": cells,
        "overall": {"freeform": _cell(ff_all), "mcq": _cell(mc_all)},
        "parser_success": {
            "freeform": sum(parser_ok) / len(parser_ok) if parser_ok else float("nan"),
            "mcq": sum(letters_ok) / len(letters_ok) if letters_ok else float("nan"),
        },
    }


def format_report(report: dict) -> str:
    lines = ["composition        n(ff)  freeform   n(mcq)  mcq"]
    for label, cell in report["cells"].items():
        ff, mc = cell["freeform"], cell["mcq"]
        lines.append(
            f"{label:<18} {ff['n']:>5}  {ff['mean']:.3f}±{ff['stderr']:.3f}"
            f"  {mc['n']:>5}  {mc['mean']:.3f}±{mc['stderr']:.3f}"
        )
    ov = report["overall"]
    lines.append(
        f"{'overall':<18} {ov['freeform']['n']:>5}  "
        f"{ov['freeform']['mean']:.3f}±{ov['freeform']['stderr']:.3f}"
        f"  {ov['mcq']['n']:>5}  {ov['mcq']['mean']:.3f}±{ov['mcq']['stderr']:.3f}"
    )
    ps = report["parser_success"]
    lines.append(f"parser success: freeform {ps['freeform']:.2%}, mcq {ps['mcq']:.2%}")
    return "\n".join(lines)
