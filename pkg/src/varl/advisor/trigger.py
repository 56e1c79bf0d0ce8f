"""Trigger machinery: at scheduled global steps, the advisor is asked about
the most recent replay transitions and the parsed suggestions are appended to
the guidance buffer."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..buffers import GuidanceBuffer, ReplayBuffer


@dataclass(frozen=True)
class TriggerSchedule:
    steps: tuple[int, ...]
    recent_k: int

    def __post_init__(self):
        if any(s < 1 for s in self.steps):
            raise ValueError("trigger steps must be >= 1")
        if self.recent_k < 1:
            raise ValueError("recent_k must be >= 1")
        object.__setattr__(self, "steps", tuple(sorted(set(int(s) for s in self.steps))))
        object.__setattr__(self, "_step_set", frozenset(self.steps))

    @classmethod
    def from_fractions(
        cls,
        cutoff_step: int,
        recent_k: int,
        fractions: tuple[float, ...] = (0.05, 0.25, 0.5),
    ) -> "TriggerSchedule":
        """Spread trigger steps over the shaping window as fractions of the
        cutoff step, but never earlier than `recent_k` so the first batch can
        be filled from the replay buffer."""
        steps = tuple(max(recent_k, int(round(f * cutoff_step))) for f in fractions)
        return cls(steps=steps, recent_k=recent_k)

    def fires_at(self, t: int) -> bool:
        return t in self._step_set  # type: ignore[attr-defined]


@dataclass
class QueryLedger:
    """Advisor budget accounting: one entry per trigger batch plus cumulative
    query and acceptance counts."""

    batch_sizes: list[int] = field(default_factory=list)
    total_queries: int = 0
    pairs_added: int = 0
    rejected: int = 0

    def record_batch(self, queries: int, added: int) -> None:
        self.batch_sizes.append(queries)
        self.total_queries += queries
        self.pairs_added += added
        self.rejected += queries - added

    def report(self) -> dict:
        return {
            "trigger_batches": len(self.batch_sizes),
            "batch_sizes": list(self.batch_sizes),
            "total_queries": self.total_queries,
            "pairs_added": self.pairs_added,
            "rejected": self.rejected,
        }


def run_trigger(
    schedule: TriggerSchedule,
    t: int,
    replay: ReplayBuffer,
    advisor,
    guidance: GuidanceBuffer,
    ledger: QueryLedger | None = None,
) -> int:
    """If step t is in the schedule, query the advisor once per transition in
    the recent-K window and append every parsed suggestion. Individual
    failures are skipped; nothing here ever raises on advisor errors."""
    if not schedule.fires_at(t):
        return 0
    recent = replay.recent(schedule.recent_k)
    items = [(tr.state, tr.action) for tr in recent]
    if hasattr(advisor, "advise_batch"):
        suggestions = advisor.advise_batch(items)
    else:
        suggestions = [advisor.advise(s, a) for s, a in items]
    added = 0
    for (state, _), suggestion in zip(items, suggestions):
        if suggestion is None:
            continue
        try:
            guidance.push(state, suggestion)
        except ValueError:
            continue
        added += 1
    if ledger is not None:
        ledger.record_batch(queries=len(items), added=added)
    return added
