"""Two-stage parsing of free-text model answers into scoreable rows.

Stage A fills a masked template (types only — gold values never reach the
parser, so it cannot leak them back). Stage B is one batched rationale
judging call. Failures degrade gracefully: unparsed fields score zero,
an unparseable judge response falls back to the lowest rating and flags
the row.
"""

from __future__ import annotations

import json
from typing import Optional

from .gateway import Gateway, GatewayError, ModelRequest, render_prompt
from .scoring import AnswerField, AnswerNode, Atom


def mask_template(gold: AnswerNode) -> dict:
    """Template with field names and types only; no gold values."""
    fields = {}
    for name, f in gold.fields.items():
        spec: dict = {"type": f.atom.subtype if f.atom else "text"}
        if f.rationale is not None:
            spec["rationale"] = "required"
        fields[name] = spec
    return {"kind": gold.kind, "fields": fields}


def _shape_ok(value, ftype: str) -> bool:
    if ftype in ("integer_count", "numeric_scalar", "duration"):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if ftype in ("binary", "categorical", "ordinal", "timestamp", "text"):
        return isinstance(value, str) and bool(value.strip())
    return True


def parse_response(
    gateway: Gateway, response_text: str, gold: AnswerNode
) -> tuple[Optional[AnswerNode], str]:
    """Return (prediction, provenance) where provenance is ok|partial|all_failed."""
    template = mask_template(gold)
    try:
        resp = gateway.complete(
            ModelRequest(
                kind="stage_a_parse",
                role_prompt="You fill answer templates from model responses.",
                user_prompt=render_prompt(
                    "stage_a_parser",
                    template=json.dumps(template, sort_keys=True),
                    response=response_text,
                ),
                expected_form="structured_record",
                required_fields=("fields", "status"),
                context={"response": response_text, "field_specs": template["fields"]},
            )
        )
    except GatewayError:
        return None, "all_failed"

    raw_fields = resp.record["fields"]
    pred_fields: dict[str, AnswerField] = {}
    filled = 0
    for name, spec in template["fields"].items():
        value = raw_fields.get(name)
        if value is None or not _shape_ok(value, spec["type"]):
            pred_fields[name] = AnswerField()
            continue
        pred_fields[name] = AnswerField(atom=Atom(spec["type"], value))
        filled += 1
    if filled == 0:
        return None, "all_failed"
    provenance = "ok" if filled == len(template["fields"]) else "partial"
    return AnswerNode(kind=gold.kind, fields=pred_fields), provenance


def judge_rationales(
    gateway: Gateway, response_text: str, gold: AnswerNode
) -> tuple[dict[str, int], list[str]]:
    """Batched Likert judgment of per-field rationales."""
    pairs = {
        name: {"pred": response_text, "gold": f.rationale}
        for name, f in gold.fields.items()
        if f.rationale is not None
    }
    if not pairs:
        return {}, []
    try:
        resp = gateway.complete(
            ModelRequest(
                kind="rationale_judge",
                role_prompt="You grade reasoning quality.",
                user_prompt=render_prompt("rationale_judge", pairs=json.dumps(pairs, sort_keys=True)),
                expected_form="structured_record",
                required_fields=("scores",),
                context={"pairs": pairs},
            )
        )
    except GatewayError:
        return {name: 1 for name in pairs}, ["rationale_judge:unparseable"]
    scores = {}
    flags = []
    for name in pairs:
        raw = resp.record["scores"].get(name)
        if isinstance(raw, (int, float)) and 1 <= raw <= 5:
            scores[name] = int(raw)
        else:
            scores[name] = 1
            flags.append(f"rationale_judge:bad_score:{name}")
    return scores, flags
