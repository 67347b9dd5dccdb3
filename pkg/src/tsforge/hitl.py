"""Human-in-the-loop review service for flagged items.

Decisions are appended to a JSONL log *before* item state changes, so a
crash between the two leaves the log authoritative: rebuilding the store
from the same items file and log replays every decision and yields a
byte-identical export.
"""

from __future__ import annotations

import json
import os
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .pipeline import QAItem, read_items
from .scoring import AnswerNode
from .signal_forge import Seed, _iso, read_seeds

ACTIONS = ("keep", "correct", "discard", "skip")
MAX_SERIES_POINTS = 2000

EXPORT_STATUSES = ("passed", "human_kept", "human_corrected")


class DecisionError(ValueError):
    pass


class ConflictError(DecisionError):
    pass


class ReviewStore:
    def __init__(self, items: list[QAItem], seeds: list[Seed], log_path: str):
        self.items: dict[str, QAItem] = {i.qa_id: i for i in items}
        self.seeds: dict[str, Seed] = {s.seed_id: s for s in seeds}
        self.log_path = log_path
        self._replay()

    @classmethod
    def from_files(cls, items_path: str, seeds_path: str, log_path: str) -> "ReviewStore":
        return cls(read_items(items_path), read_seeds(seeds_path), log_path)

    # -- decision log --------------------------------------------------------

    def _replay(self) -> None:
        if not os.path.exists(self.log_path):
            return
        with open(self.log_path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                try:
                    self._apply(entry)
                except DecisionError:
                    # The log is append-only; a conflicting line (e.g. written
                    # twice around a crash) is ignored rather than fatal.
                    continue

    def _append_log(self, entry: dict) -> None:
        with open(self.log_path, "a") as f:
            f.write(json.dumps(entry, sort_keys=True) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def _apply(self, entry: dict) -> str:
        item = self.items.get(entry["qa_id"])
        if item is None:
            raise DecisionError(f"unknown item {entry['qa_id']!r}")
        action = entry["action"]
        if action not in ACTIONS:
            raise DecisionError(f"unknown action {action!r}")
        if item.status != "flagged":
            raise ConflictError(f"item {item.qa_id} already resolved ({item.status})")
        if action == "skip":
            return item.status
        if action == "keep":
            item.status = "human_kept"
        elif action == "discard":
            item.status = "discarded"
        else:  # correct
            corrected = entry.get("corrected_gold")
            if not corrected:
                raise DecisionError("correct action requires corrected_gold")
            try:
                node = AnswerNode.from_dict(corrected)
            except (KeyError, TypeError) as e:
                raise DecisionError(f"corrected_gold is malformed: {e}")
            if not node.fields:
                raise DecisionError("corrected_gold has no fields")
            item.evidence = {**item.evidence, "original_gold": item.gold.to_dict()}
            item.gold = node
            if entry.get("corrected_text"):
                item.gold_text = entry["corrected_text"]
            item.status = "human_corrected"
        return item.status

    def decide(
        self,
        qa_id: str,
        action: str,
        corrected_gold: Optional[dict] = None,
        corrected_text: Optional[str] = None,
        reviewer: str = "",
    ) -> str:
        entry = {
            "qa_id": qa_id,
            "action": action,
            "corrected_gold": corrected_gold,
            "corrected_text": corrected_text,
            "reviewer": reviewer,
        }
        # Validate against current state first so a rejected decision never
        # lands in the log; then log before mutating.
        item = self.items.get(qa_id)
        if item is None:
            raise DecisionError(f"unknown item {qa_id!r}")
        if action not in ACTIONS:
            raise DecisionError(f"unknown action {action!r}")
        if item.status != "flagged":
            raise ConflictError(f"item {qa_id} already resolved ({item.status})")
        if action == "correct":
            if not corrected_gold:
                raise DecisionError("correct action requires corrected_gold")
            AnswerNode.from_dict(corrected_gold)  # shape check before logging
        self._append_log(entry)
        return self._apply(entry)

    # -- views -----------------------------------------------------------------

    def queue(self) -> list[dict]:
        return [
            {
                "qa_id": i.qa_id,
                "question": i.question,
                "flags": i.flags,
                "fmt": i.fmt,
                "skills": i.assignment["composition"],
            }
            for i in sorted(self.items.values(), key=lambda x: x.qa_id)
            if i.status == "flagged"
        ]

    def review_item(self, qa_id: str) -> dict:
        item = self.items.get(qa_id)
        if item is None:
            raise KeyError(qa_id)
        payload = item.to_dict()
        seed = self.seeds.get(item.seed_id)
        if seed is not None:
            n = len(seed.timestamps)
            step = max(1, -(-n // MAX_SERIES_POINTS))
            payload["series"] = {
                "channels": [
                    {
                        "name": ch.variable.variable,
                        "unit": ch.variable.unit,
                        "timestamps": [_iso(t) for t in seed.timestamps[::step]],
                        "values": list(ch.values[::step]),
                    }
                    for ch in seed.channels
                ],
            }
        return payload

    def export(self) -> list[dict]:
        return [
            i.to_dict()
            for i in sorted(self.items.values(), key=lambda x: x.qa_id)
            if i.status in EXPORT_STATUSES
        ]

    def export_bytes(self) -> bytes:
        return ("\n".join(json.dumps(d, sort_keys=True) for d in self.export()) + "\n").encode()


# ---------------------------------------------------------------------------
# HTTP surface


class DecisionBody(BaseModel):
    action: str
    corrected_gold: Optional[dict] = None
    corrected_text: Optional[str] = None
    reviewer: str = ""


def create_app(store: ReviewStore) -> FastAPI:
    app = FastAPI(title="review service")

    @app.get("/queue")
    def get_queue():
        return {"items": store.queue()}

    @app.get("/items/{qa_id}")
    def get_item(qa_id: str):
        try:
            return store.review_item(qa_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown item {qa_id!r}")

    @app.post("/items/{qa_id}/decision")
    def post_decision(qa_id: str, body: DecisionBody):
        try:
            status = store.decide(
                qa_id,
                body.action,
                corrected_gold=body.corrected_gold,
                corrected_text=body.corrected_text,
                reviewer=body.reviewer,
            )
        except ConflictError as e:
            raise HTTPException(status_code=409, detail=str(e))
        except DecisionError as e:
            code = 404 if "unknown item" in str(e) else 422
            raise HTTPException(status_code=code, detail=str(e))
        return {"qa_id": qa_id, "status": status}

    @app.get("/export")
    def get_export():
        return {"items": store.export()}

    return app
