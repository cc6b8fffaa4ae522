"""Event difficulty and simple-to-complex prediction ordering.

The difficulty of one argument is one minus its (calibrated) probability;
the difficulty of an event is the mean over its predicted arguments. An
event with no predicted arguments gets the sentinel difficulty 2 so it is
scheduled after every event that produced arguments.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

NO_ARGUMENT_DIFFICULTY = 2.0

MODE_FRONT_TO_BACK = "F2B"
MODE_SIMPLE_TO_COMPLEX = "S2C"


def argument_difficulties(probs: Sequence[float]) -> tuple[float, ...]:
    """Elementwise 1 - p over the argument probabilities of one event."""
    for p in probs:
        if not (0.0 < p <= 1.0):
            raise ValueError(f"probability must be in (0, 1], got {p}")
    return tuple(1.0 - p for p in probs)


def event_difficulty(difficulties: Sequence[float]) -> float:
    """Mean argument difficulty, or the rear-placement sentinel 2 when empty."""
    if not difficulties:
        return NO_ARGUMENT_DIFFICULTY
    return sum(difficulties) / len(difficulties)


@dataclass(frozen=True)
class PredictionSchedule:
    """Bijection from appearance index (1-based) to prediction order (1-based)."""

    orders: dict[int, int]
    mode: str

    def __post_init__(self):
        n = len(self.orders)
        if sorted(self.orders) != list(range(1, n + 1)) or sorted(
            self.orders.values()
        ) != list(range(1, n + 1)):
            raise ValueError(f"orders must be a bijection on 1..{n}: {self.orders}")

    def __len__(self) -> int:
        return len(self.orders)

    def order_of(self, appearance_index: int) -> int:
        return self.orders[appearance_index]

    def sequence(self) -> list[int]:
        """Appearance indices sorted by prediction order."""
        return sorted(self.orders, key=self.orders.__getitem__)

    @classmethod
    def front_to_back(cls, n_events: int) -> "PredictionSchedule":
        return cls(orders={i: i for i in range(1, n_events + 1)}, mode=MODE_FRONT_TO_BACK)


def reorder(difficulties: Sequence[float]) -> PredictionSchedule:
    """Schedule events by ascending difficulty.

    `difficulties` is indexed by appearance order. The sort is stable: equal
    difficulties keep appearance order, so an all-equal vector degenerates to
    the front-to-back order.
    """
    by_difficulty = sorted(range(len(difficulties)), key=difficulties.__getitem__)
    orders = {position + 1: rank + 1 for rank, position in enumerate(by_difficulty)}
    return PredictionSchedule(orders=orders, mode=MODE_SIMPLE_TO_COMPLEX)


def schedule_row(
    doc_id: str,
    difficulties: Sequence[float],
    first_pass: PredictionSchedule,
    second_pass: PredictionSchedule,
) -> dict:
    """One document's schedule table for the analysis dump."""
    return {
        "doc_id": doc_id,
        "events": [
            {
                "appearance_index": i,
                "difficulty": difficulties[i - 1],
                "first_pass_order": first_pass.order_of(i),
                "second_pass_order": second_pass.order_of(i),
            }
            for i in range(1, len(difficulties) + 1)
        ],
    }
