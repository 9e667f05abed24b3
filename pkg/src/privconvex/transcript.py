"""Query transcripts: what the learner saw versus what an eavesdropper sees."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

# Minimax phase tags. ``trivial`` marks the query at 0 that opens the
# hybrid regime; it is kept in the transcript (the adversary sees it) but
# left out of the reported query count.
MINIMAX_PHASES = ("trivial", "guess", "bisect", "grid", "fill")
BAYES_PHASES = ("p1", "p2", "p3", "p4")


@dataclass
class QueryTranscript:
    queries: list = field(default_factory=list)
    responses: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    seed: int | None = None

    def record(self, q, r, phase):
        self.queries.append(q)
        self.responses.append(r)
        self.phases.append(phase)

    def __len__(self):
        return len(self.queries)

    @property
    def reported_count(self) -> int:
        """Number of queries charged to the strategy (trivial ones excluded)."""
        return sum(1 for p in self.phases if p != "trivial")

    def adversary_view(self) -> tuple:
        """Query locations only, in submission order."""
        return tuple(self.queries)

    def to_jsonl(self) -> str:
        """One JSON object per query; responses go in a trailing private record."""
        lines = [
            json.dumps({"i": i, "q": _jsonable(q), "phase": p})
            for i, (q, p) in enumerate(zip(self.queries, self.phases))
        ]
        lines.append(
            json.dumps(
                {"learner_private": {"seed": self.seed, "responses": _jsonable(self.responses)}}
            )
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "QueryTranscript":
        t = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            if "learner_private" in rec:
                t.seed = rec["learner_private"]["seed"]
                t.responses = list(rec["learner_private"]["responses"])
            else:
                t.queries.append(rec["q"])
                t.phases.append(rec["phase"])
        return t


def _jsonable(x: Any):
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "tolist"):
        return x.tolist()
    return x
