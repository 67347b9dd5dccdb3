"""Automatic verification gates for drafted QA items.

Path-A items are checked against generation metadata and against a blind
reading of the rendered plot; path-B items get structural checks on the
query program plus the same plot-consistency call. Any severe finding
flags the item for human review instead of discarding it.
"""

from __future__ import annotations

import json
from typing import Optional

from . import signal_forge as sf
from . import tsq
from .gateway import Gateway, GatewayError, ModelRequest, render_prompt
from .pipeline import QAItem, TREND_LABELS, _window_events
from .plotting import render_plot


def _channel_index(seed: sf.Seed, item: QAItem) -> int:
    name = item.intent["params"].get("channel")
    for i, ch in enumerate(seed.channels):
        if ch.variable.variable == name:
            return i
    return 0


def blind_reading(seed: sf.Seed, channel_idx: int = 0) -> dict:
    """What a faithful reader should report from the plot alone.

    Used as context for the offline verifier; a live multimodal backend
    ignores it and reads the attached image instead.
    """
    meta = seed.metadata["channels"][channel_idx]
    events = meta["events"]
    reading = {
        "trend": TREND_LABELS[meta["trend"]["type"]],
        "n_events": len(events),
        "event_kinds": sorted({e["type"] for e in events}),
        "seasonal": meta["seasonal"] is not None,
    }
    if events:
        reading["event_time"] = events[0]["start_time"]
    return reading


def gold_claims(item: QAItem) -> dict:
    """Project the gold answer onto plot-checkable claims."""
    kind = item.intent["kind"]
    fields = item.gold.fields
    if kind == "trend_direction":
        return {"trend": fields["trend"].atom.value}
    if kind == "count_events":
        params = item.intent["params"]
        if not params.get("start") and not params.get("event_type"):
            return {"n_events": fields["count"].atom.value}
        return {}
    if kind == "event_time":
        return {"event_time": str(fields["when"].atom.value)}
    if kind == "event_type":
        return {"event_kind": str(fields["event_kind"].atom.value).replace(" ", "_")}
    return {}


def metadata_numbers(seed: sf.Seed, item: QAItem) -> set[float]:
    nums: set[float] = set()
    for meta in seed.metadata["channels"]:
        nums.add(meta["baseline"])
        nums.add(meta["trend"]["amplitude"])
        nums.add(meta["noise_sigma"])
        if meta["seasonal"]:
            nums.update((meta["seasonal"]["period_s"], meta["seasonal"]["amplitude"]))
        for st in meta["stats"].values():
            nums.add(st)
        for ev in meta["events"]:
            nums.add(ev["amplitude"])
            dur = (sf._parse_dt(ev["end_time"]) - sf._parse_dt(ev["start_time"])).total_seconds()
            nums.add(dur)
    nums.add(float(len(_window_events(seed, item.intent["params"]))))
    return nums


def metadata_support_failures(item: QAItem, seed: sf.Seed) -> list[str]:
    """Every numeric literal in a metadata-derived gold must round-match
    a number that actually appears in (or is recomputable from) metadata."""
    allowed = {round(x, 2) for x in metadata_numbers(seed, item)}
    failures = []
    for name, f in item.gold.fields.items():
        if f.atom is None:
            continue
        if f.atom.subtype in ("integer_count", "numeric_scalar", "duration"):
            v = round(float(f.atom.value), 2)
            if v not in allowed:
                failures.append(f"gold field {name!r} value {f.atom.value} not supported by metadata")
    return failures


def plan_check_failures(item: QAItem) -> list[str]:
    failures = []
    if not item.plan_source or not item.plan_source.strip():
        return ["plan_source is empty"]
    try:
        tsq.parse(item.plan_source)
    except tsq.TsqError as e:
        return [f"plan_source does not parse: {e}"]
    emitted = item.evidence.get("emitted", {})
    for name, f in item.gold.fields.items():
        if f.atom is None:
            continue
        v = f.atom.value
        if f.atom.subtype in ("numeric_scalar", "duration", "integer_count"):
            if not any(
                isinstance(e, (int, float)) and abs(float(e) - float(v)) <= 1e-9
                for e in emitted.values()
            ):
                failures.append(f"gold field {name!r} value {v} not present in program output")
        elif f.atom.subtype == "timestamp":
            if str(v) not in {str(e) for e in emitted.values()}:
                failures.append(f"gold field {name!r} timestamp not present in program output")
    return failures


def plot_for_item(item: QAItem, seed: sf.Seed) -> bytes:
    ci = _channel_index(seed, item)
    meta = seed.metadata["channels"][ci]
    granularity = "raw"
    if "SK1" in item.assignment["composition"]:
        granularity = meta["best_view"].get("trend", "raw")
    values, timestamps = sf.downsample(seed.channels[ci].values, seed.timestamps, granularity)
    return render_plot(
        values,
        timestamps,
        title=meta["variable"],
        ylabel=meta["unit"],
    )


def _consistency_verdict(
    gateway: Gateway, item: QAItem, seed: sf.Seed, image: bytes
) -> tuple[str, str]:
    ci = _channel_index(seed, item)
    reading = blind_reading(seed, ci)
    try:
        vlm = gateway.complete(
            ModelRequest(
                kind="vlm_verify",
                role_prompt="You describe plots.",
                user_prompt=render_prompt("vlm_verifier"),
                image=image,
                expected_form="structured_record",
                required_fields=("observations",),
                context={"plot_reading": reading},
            )
        )
        observations = vlm.record["observations"]
        check = gateway.complete(
            ModelRequest(
                kind="contradiction_check",
                role_prompt="You audit answers against plots.",
                user_prompt=render_prompt(
                    "contradiction_check",
                    gold_claims=json.dumps(gold_claims(item), sort_keys=True, default=str),
                    observations=json.dumps(observations, sort_keys=True, default=str),
                ),
                expected_form="structured_record",
                required_fields=("verdict", "reason"),
                context={"gold_claims": gold_claims(item), "observations": observations},
            )
        )
        return check.record["verdict"], check.record["reason"]
    except GatewayError as e:
        return "severe_mismatch", f"verification call failed: {e}"


def verify_item(item: QAItem, seed: sf.Seed, gateway: Gateway) -> QAItem:
    if item.fmt == "A":
        if "SK3" in item.assignment["composition"]:
            for msg in metadata_support_failures(item, seed):
                item.flags.append(f"metadata_support:{msg}")
    else:
        failures = plan_check_failures(item)
        if failures:
            # Structural failure: flag immediately, no model call needed.
            item.flags.extend(f"plan_check:{msg}" for msg in failures)
            item.status = "flagged"
            return item

    image = plot_for_item(item, seed)
    verdict, reason = _consistency_verdict(gateway, item, seed, image)
    if verdict != "consistent":
        item.flags.append(f"plot_check:{reason}")

    item.status = "flagged" if item.flags else "passed"
    return item
