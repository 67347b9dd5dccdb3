"""End-to-end QA item construction.

For each item: sample a seed, pick a skill assignment, derive a concrete
question intent, have the gateway phrase it, compute the gold answer
(path A reads generation metadata directly; path B asks the coder for a
query program and executes it), then verify and package.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import timedelta
from typing import Optional

from . import signal_forge as sf
from . import tsq
from .gateway import Gateway, GatewayError, ModelRequest, render_prompt
from .scoring import AnswerField, AnswerNode, Atom
from .skill_controller import SkillAssignment, SkillController, seed_features

CODER_MAX_ATTEMPTS = 5

TREND_LABELS = {"increase": "increasing", "decrease": "decreasing", "keep_steady": "stable"}

# Intent kinds whose gold comes straight from generation metadata (path A)
# vs. computed from raw values by an executed query program (path B).
FORMAT_A_KINDS = {
    "trend_direction",
    "seasonal_period",
    "noise_presence",
    "event_type",
    "event_time",
    "event_duration",
    "count_events",
}
FORMAT_B_KINDS = {"window_mean", "window_extremum", "extremum_time", "compare_windows"}


class PipelineError(RuntimeError):
    pass


@dataclass
class QAItem:
    qa_id: str
    seed_id: str
    question: str
    fmt: str  # "A" or "B"
    assignment: dict
    intent: dict
    gold: AnswerNode
    gold_text: str
    evidence: dict
    plan_source: Optional[str] = None
    status: str = "draft"
    flags: list = field(default_factory=list)
    mcq: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "qa_id": self.qa_id,
            "seed_id": self.seed_id,
            "question": self.question,
            "fmt": self.fmt,
            "assignment": self.assignment,
            "intent": self.intent,
            "gold": self.gold.to_dict(),
            "gold_text": self.gold_text,
            "evidence": self.evidence,
            "plan_source": self.plan_source,
            "status": self.status,
            "flags": list(self.flags),
            "mcq": self.mcq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QAItem":
        return cls(
            qa_id=d["qa_id"],
            seed_id=d["seed_id"],
            question=d["question"],
            fmt=d["fmt"],
            assignment=d["assignment"],
            intent=d["intent"],
            gold=AnswerNode.from_dict(d["gold"]),
            gold_text=d["gold_text"],
            evidence=d["evidence"],
            plan_source=d.get("plan_source"),
            status=d.get("status", "draft"),
            flags=list(d.get("flags", [])),
            mcq=d.get("mcq"),
        )


# ---------------------------------------------------------------------------
# Intent construction (pure)


def _pick_window(seed: sf.Seed, rng: random.Random) -> tuple:
    n = len(seed.timestamps)
    span = rng.randint(max(5, n // 4), n - 1)
    i0 = rng.randint(0, n - 1 - span)
    return seed.timestamps[i0], seed.timestamps[i0 + span]


def build_intent(seed: sf.Seed, assignment: SkillAssignment, rng: random.Random) -> dict:
    comp = set(assignment.composition)
    subs = assignment.subtypes
    events = seed.channel_events()
    channel = seed.channels[0].variable.variable
    params: dict = {"channel": channel}

    # SK2 decides the scope.
    if "SK2" in comp:
        style = subs["SK2"]
        if style == "event_anchored" and events:
            ev = rng.choice(events)
            params["event_label"] = ev.ordinal_label
            pad = 4 * seed.sampling_interval_s
            params["start"] = sf._iso(ev.start_time - timedelta(seconds=pad))
            params["end"] = sf._iso(ev.end_time + timedelta(seconds=pad))
        elif style == "cross_channel" and len(seed.channels) > 1:
            params["channel"] = seed.channels[1].variable.variable
            channel = params["channel"]
            events = seed.channels[1].attributes.events
        else:
            t0, t1 = _pick_window(seed, rng)
            params["start"], params["end"] = sf._iso(t0), sf._iso(t1)

    # The deepest skill in the composition decides the question kind.
    if "SK3" in comp:
        style = subs["SK3"]
        if style == "counting":
            kind = "count_events"
            if "SK1" in comp and subs.get("SK1") == "local_event" and events:
                params["event_type"] = rng.choice(events).type
        elif style == "aggregation":
            kind = "window_mean"
        elif style == "extremum":
            kind = rng.choice(["window_extremum", "extremum_time"])
            params["stat"] = rng.choice(["max", "min"])
        else:  # comparison
            kind = "compare_windows"
            n = len(seed.timestamps)
            params["start"] = sf._iso(seed.timestamps[0])
            params["mid"] = sf._iso(seed.timestamps[n // 2])
            params["end"] = sf._iso(seed.timestamps[-1])
    elif comp == {"SK2"}:
        if subs["SK2"] == "event_anchored" and events:
            kind = "event_time"
        else:
            kind = "extremum_time"
            params["stat"] = rng.choice(["max", "min"])
    else:
        attr = subs["SK1"]
        if attr == "seasonality":
            kind = "seasonal_period"
            # The attribute must live on the channel the question targets.
            if seed.channels[_channel_of(seed, params)].attributes.seasonal is None:
                for ch in seed.channels:
                    if ch.attributes.seasonal is not None:
                        params["channel"] = ch.variable.variable
                        break
        elif attr == "noise":
            kind = "noise_presence"
        elif attr == "local_event" and events:
            ev = rng.choice(events)
            kind = rng.choice(["event_type", "event_time", "event_duration"])
            params["event_label"] = ev.ordinal_label
            params["event_idx"] = ev.idx
        else:
            kind = "trend_direction"

    if kind in ("event_time", "event_duration", "event_type") and "event_idx" not in params:
        if not events:
            kind = "trend_direction"
        else:
            ev = rng.choice(events)
            params["event_label"] = ev.ordinal_label
            params["event_idx"] = ev.idx
    fmt = "A" if kind in FORMAT_A_KINDS else "B"
    return {"kind": kind, "params": params, "format": fmt}


# ---------------------------------------------------------------------------
# Gold computation


def _channel_of(seed: sf.Seed, params: dict) -> int:
    name = params.get("channel")
    for i, ch in enumerate(seed.channels):
        if ch.variable.variable == name:
            return i
    return 0


def _event_by_label(seed: sf.Seed, params: dict) -> sf.EventSpec:
    events = seed.channels[_channel_of(seed, params)].attributes.events
    if "event_idx" in params:
        for ev in events:
            if ev.idx == params["event_idx"]:
                return ev
    for ev in events:
        if ev.ordinal_label == params.get("event_label"):
            return ev
    raise PipelineError(f"intent references unknown event {params.get('event_label')!r}")


def _window_events(seed: sf.Seed, params: dict) -> list:
    events = seed.channels[_channel_of(seed, params)].attributes.events
    etype = params.get("event_type")
    if etype:
        events = [e for e in events if e.type == etype]
    if params.get("start") and params.get("end"):
        t0, t1 = sf._parse_dt(params["start"]), sf._parse_dt(params["end"])
        events = [e for e in events if t0 <= e.start_time <= t1]
    return events


def _format_duration(seconds: float) -> str:
    if seconds % 86400 == 0 and seconds:
        d = int(seconds // 86400)
        return f"{d} day" + ("s" if d != 1 else "")
    if seconds % 3600 == 0 and seconds:
        h = int(seconds // 3600)
        return f"{h} hour" + ("s" if h != 1 else "")
    if seconds % 60 == 0 and seconds:
        m = int(seconds // 60)
        return f"{m} minute" + ("s" if m != 1 else "")
    return f"{seconds:g} seconds"


def compute_gold_a(seed: sf.Seed, intent: dict) -> tuple[AnswerNode, str, dict]:
    kind = intent["kind"]
    params = intent["params"]
    ci = _channel_of(seed, params)
    attrs = seed.channels[ci].attributes
    meta = seed.metadata["channels"][ci]

    if kind == "trend_direction":
        label = TREND_LABELS[attrs.trend.type]
        node = AnswerNode("leaf", {"trend": AnswerField(Atom("categorical", label))})
        return node, label, {"trend": meta["trend"]}

    if kind == "seasonal_period":
        if attrs.seasonal is None:
            raise PipelineError("seasonal question on a non-seasonal seed")
        secs = attrs.seasonal.period_s
        node = AnswerNode("leaf", {"period": AnswerField(Atom("duration", secs, "s"))})
        return node, _format_duration(secs), {"seasonal": meta["seasonal"]}

    if kind == "noise_presence":
        label = "yes" if attrs.noise_sigma > 0 else "no"
        node = AnswerNode("leaf", {"noisy": AnswerField(Atom("binary", label))})
        return node, label, {"noise_sigma": meta["noise_sigma"]}

    ev = None
    if kind in ("event_type", "event_time", "event_duration"):
        ev = _event_by_label(seed, params)
        evidence = {"event": ev.to_dict()}
    if kind == "event_type":
        label = ev.type.replace("_", " ")
        return (
            AnswerNode("leaf", {"event_kind": AnswerField(Atom("categorical", label))}),
            label,
            evidence,
        )
    if kind == "event_time":
        node = AnswerNode("leaf", {"when": AnswerField(Atom("timestamp", ev.start_time))})
        return node, sf._iso(ev.start_time), evidence
    if kind == "event_duration":
        secs = (ev.end_time - ev.start_time).total_seconds()
        node = AnswerNode("leaf", {"duration": AnswerField(Atom("duration", secs, "s"))})
        return node, _format_duration(secs), evidence

    if kind == "count_events":
        hits = _window_events(seed, params)
        node = AnswerNode("leaf", {"count": AnswerField(Atom("integer_count", len(hits)))})
        return node, str(len(hits)), {"events": [e.to_dict() for e in hits]}

    raise PipelineError(f"no metadata gold rule for intent kind {kind!r}")


def reference_program(seed: sf.Seed, intent: dict) -> str:
    """The program a competent coder should produce for this intent."""
    params = intent["params"]
    kind = intent["kind"]
    t0 = params.get("start") or sf._iso(seed.timestamps[0])
    t1 = params.get("end") or sf._iso(seed.timestamps[-1])
    channel = params.get("channel")
    default_channel = seed.channels[0].variable.variable
    if channel and channel != default_channel:
        window = f'slice("{channel}", ts("{t0}"), ts("{t1}"))'
    else:
        window = f'slice(ts("{t0}"), ts("{t1}"))'
    if kind == "window_mean":
        return f"seg = {window}\nvalue = round(mean(seg), 2)\nemit(value)"
    if kind == "window_extremum":
        fn = params.get("stat", "max")
        return f"seg = {window}\nvalue = round({fn}(seg), 2)\nemit(value)"
    if kind == "extremum_time":
        fn = "argmax_time" if params.get("stat", "max") == "max" else "argmin_time"
        return f"seg = {window}\nwhen = {fn}(seg)\nemit(when)"
    if kind == "compare_windows":
        mid = params["mid"]
        return (
            f'first = slice(ts("{t0}"), ts("{mid}"))\n'
            f'second = slice(ts("{mid}"), ts("{t1}"))\n'
            "a = round(mean(first), 2)\n"
            "b = round(mean(second), 2)\n"
            "emit(a)\nemit(b)"
        )
    raise PipelineError(f"no reference program for intent kind {kind!r}")


LANGUAGE_REFERENCE = (
    "statements: name = expr | emit(name); functions: slice([chan,] t0, t1), "
    "slice_around_event(ref, before_s, after_s), slice_between_events(a, b), "
    "mean/min/max/sum/count(s), count_events([type[, t0, t1]]), duration(ref), "
    "argmax_time(s), argmin_time(s), round(x, nd), ts(\"YYYY-MM-DD HH:MM:SS\"); "
    "event refs look like upward_spike#2"
)


def run_coder(gateway: Gateway, seed: sf.Seed, item_question: str, intent: dict) -> tuple[str, dict]:
    """Coder loop: request a program, execute, feed diagnostics back."""
    diagnostics = ""
    context = {"program": reference_program(seed, intent), "intent": intent}
    last_error = "no attempts"
    for attempt in range(1, CODER_MAX_ATTEMPTS + 1):
        prompt = render_prompt(
            "coder",
            language_reference=LANGUAGE_REFERENCE,
            description=seed.description,
            question=item_question,
            diagnostics=diagnostics,
        )
        resp = gateway.complete(
            ModelRequest(
                kind="coder",
                role_prompt="You write small analysis programs.",
                user_prompt=prompt,
                context={**context, "attempt": attempt},
            )
        )
        program = resp.text.strip()
        try:
            emitted = tsq.evaluate(program, seed)
            return program, emitted
        except tsq.TsqError as e:
            last_error = str(e)
            diagnostics = f"Your previous program failed: {last_error}. Fix it and resend."
    raise PipelineError(f"coder failed after {CODER_MAX_ATTEMPTS} attempts: {last_error}")


def compute_gold_b(
    gateway: Gateway, seed: sf.Seed, question: str, intent: dict
) -> tuple[AnswerNode, str, dict, str]:
    program, emitted = run_coder(gateway, seed, question, intent)
    kind = intent["kind"]
    unit = seed.channels[0].variable.unit
    evidence = {
        "emitted": {k: (sf._iso(v) if hasattr(v, "isoformat") else v) for k, v in emitted.items()}
    }
    if kind in ("window_mean", "window_extremum"):
        value = next(iter(emitted.values()))
        node = AnswerNode("leaf", {"value": AnswerField(Atom("numeric_scalar", value, unit))})
        return node, f"{value:g} {unit}", evidence, program
    if kind == "extremum_time":
        when = next(iter(emitted.values()))
        node = AnswerNode("leaf", {"when": AnswerField(Atom("timestamp", when))})
        return node, sf._iso(when), evidence, program
    if kind == "compare_windows":
        a, b = emitted["a"], emitted["b"]
        label = "higher" if a > b else "lower" if a < b else "equal"
        node = AnswerNode("leaf", {"relation": AnswerField(Atom("categorical", label))})
        return node, label, evidence, program
    raise PipelineError(f"no gold rule for computed intent kind {kind!r}")


# ---------------------------------------------------------------------------
# The pipeline


PROPOSER_TEMPLATE = {"SK3": "sk3_proposer", "SK2": "sk2_proposer", "SK1": "sk1_proposer"}


class QAPipeline:
    def __init__(
        self,
        gateway: Gateway,
        pool: Optional[list] = None,
        rng_seed: int = 0,
        target_counts: Optional[dict] = None,
    ):
        self.gateway = gateway
        self.pool = pool or sf.load_domain_pool(sf.default_pool_path())
        self.rng_seed = rng_seed
        self.controller = SkillController(target_counts=target_counts, rng_seed=rng_seed)
        self._seed_cache: dict[str, sf.Seed] = {}

    def seed_for(self, index: int) -> sf.Seed:
        key = f"seed-{self.rng_seed * 1_000_003 + index:08d}"
        if key not in self._seed_cache:
            s = self.rng_seed * 1_000_003 + index
            seed = sf.compose_series(sf.sample_seed_plan(self.pool, s), s)
            self._seed_cache[key] = seed
        return self._seed_cache[key]

    def propose_question(self, seed: sf.Seed, assignment: SkillAssignment, intent: dict) -> str:
        lead = next(sk for sk in ("SK3", "SK2", "SK1") if sk in assignment.composition)
        prompt = render_prompt(
            PROPOSER_TEMPLATE[lead],
            description=seed.description,
            subtype=assignment.subtypes[lead],
            intent=json.dumps(intent, sort_keys=True, default=str),
        )
        resp = self.gateway.complete(
            ModelRequest(
                kind="propose",
                role_prompt="You write benchmark questions about time series.",
                user_prompt=prompt,
                temperature=0.7,
                context={"intent": intent, "variable": intent["params"].get("channel", "")},
            )
        )
        return resp.text.strip()

    def validate_skills(self, question: str, assignment: SkillAssignment) -> bool:
        prompt = render_prompt(
            "skill_validator",
            question=question,
            target_skills=json.dumps(list(assignment.composition)),
        )
        try:
            resp = self.gateway.complete(
                ModelRequest(
                    kind="skill_validate",
                    role_prompt="You audit benchmark questions.",
                    user_prompt=prompt,
                    expected_form="structured_record",
                    required_fields=("valid", "skills"),
                    context={"target_skills": list(assignment.composition)},
                )
            )
        except GatewayError:
            return False
        return bool(resp.record["valid"]) and set(resp.record["skills"]) == set(
            assignment.composition
        )

    def build_item(self, index: int, verify: bool = True) -> QAItem:
        seed = self.seed_for(index)
        rng = random.Random((self.rng_seed, index, "intent").__str__())
        assignment = self.controller.next_assignment(seed_features(seed))
        intent = build_intent(seed, assignment, rng)
        question = self.propose_question(seed, assignment, intent)

        flags = []
        if not self.validate_skills(question, assignment):
            flags.append("skill_validator:rejected")

        plan_source = None
        if intent["format"] == "A":
            gold, gold_text, evidence = compute_gold_a(seed, intent)
        else:
            gold, gold_text, evidence, plan_source = compute_gold_b(
                self.gateway, seed, question, intent
            )

        item = QAItem(
            qa_id=f"qa-{self.rng_seed:04d}-{index:06d}",
            seed_id=seed.seed_id,
            question=question,
            fmt=intent["format"],
            assignment=assignment.to_dict(),
            intent=intent,
            gold=gold,
            gold_text=gold_text,
            evidence=evidence,
            plan_source=plan_source,
            flags=flags,
        )
        self.controller.record(assignment)

        if verify:
            from .verify import verify_item

            verify_item(item, seed, self.gateway)
        else:
            item.status = "flagged" if item.flags else "passed"
        return item

    def generate(self, n: int, verify: bool = True) -> list[QAItem]:
        return [self.build_item(i, verify=verify) for i in range(n)]


def write_items(items: list[QAItem], path) -> None:
    with open(path, "w") as f:
        for item in items:
            f.write(json.dumps(item.to_dict(), sort_keys=True) + "\n")


def read_items(path) -> list[QAItem]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(QAItem.from_dict(json.loads(line)))
    return out
