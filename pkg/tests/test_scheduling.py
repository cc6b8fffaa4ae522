from __future__ import annotations

import random

import pytest

from argex.scheduling import (
    MODE_FRONT_TO_BACK,
    MODE_SIMPLE_TO_COMPLEX,
    NO_ARGUMENT_DIFFICULTY,
    PredictionSchedule,
    argument_difficulties,
    event_difficulty,
    reorder,
    schedule_row,
)


def stable_sort_oracle(difficulties):
    """Independent scheduler: repeatedly pick the easiest unassigned event,
    earliest appearance index on ties."""
    remaining = list(range(len(difficulties)))
    orders = {}
    rank = 1
    while remaining:
        best = remaining[0]
        for i in remaining[1:]:
            if difficulties[i] < difficulties[best]:
                best = i
        orders[best + 1] = rank
        remaining.remove(best)
        rank += 1
    return orders


class TestArgumentDifficulties:
    def test_certain_argument_has_zero_difficulty(self):
        assert argument_difficulties([1.0]) == (0.0,)

    def test_elementwise_complement(self):
        assert argument_difficulties([0.8, 0.6]) == pytest.approx((0.2, 0.4))

    def test_empty_is_empty(self):
        assert argument_difficulties([]) == ()

    def test_out_of_range_probability_rejected(self):
        with pytest.raises(ValueError):
            argument_difficulties([0.0])
        with pytest.raises(ValueError):
            argument_difficulties([1.2])

    def test_complement_is_an_involution(self):
        rng = random.Random(1)
        for _ in range(100):
            probs = [rng.uniform(1e-9, 1.0) for _ in range(rng.randint(0, 8))]
            diffs = argument_difficulties(probs)
            assert [1.0 - d for d in diffs] == pytest.approx(probs)


class TestEventDifficulty:
    def test_mean_of_argument_difficulties(self):
        assert event_difficulty([0.2, 0.4]) == pytest.approx(0.3)

    def test_no_arguments_gets_sentinel_two(self):
        assert event_difficulty([]) == 2.0
        assert NO_ARGUMENT_DIFFICULTY == 2.0

    def test_singleton_mean(self):
        assert event_difficulty([0.5]) == 0.5


class TestReorder:
    def test_example_ordering(self):
        schedule = reorder([0.5, 0.2, 2.0, 0.2])
        assert schedule.orders == {2: 1, 4: 2, 1: 3, 3: 4}
        assert schedule.mode == MODE_SIMPLE_TO_COMPLEX
        assert schedule.sequence() == [2, 4, 1, 3]

    def test_all_equal_collapses_to_front_to_back_order(self):
        schedule = reorder([0.4, 0.4, 0.4])
        assert schedule.orders == PredictionSchedule.front_to_back(3).orders

    def test_single_event(self):
        assert reorder([0.7]).orders == {1: 1}

    def test_sentinel_events_scheduled_last(self):
        rng = random.Random(2)
        for _ in range(100):
            difficulties = [
                2.0 if rng.random() < 0.3 else rng.uniform(0.0, 1.0)
                for _ in range(rng.randint(1, 12))
            ]
            schedule = reorder(difficulties)
            sentinel_orders = [
                schedule.order_of(i + 1) for i, d in enumerate(difficulties) if d == 2.0
            ]
            real_orders = [
                schedule.order_of(i + 1) for i, d in enumerate(difficulties) if d <= 1.0
            ]
            assert all(s > r for s in sentinel_orders for r in real_orders)

    def test_output_is_always_a_permutation(self):
        rng = random.Random(3)
        for _ in range(200):
            n = rng.randint(1, 20)
            difficulties = [rng.choice([rng.uniform(0, 1), 2.0]) for _ in range(n)]
            schedule = reorder(difficulties)
            assert sorted(schedule.orders) == list(range(1, n + 1))
            assert sorted(schedule.orders.values()) == list(range(1, n + 1))

    def test_matches_bruteforce_stable_sort_on_random_vectors(self):
        rng = random.Random(4)
        for _ in range(1000):
            n = rng.randint(1, 25)
            difficulties = [
                2.0 if rng.random() < 0.2 else round(rng.uniform(0.0, 1.0), rng.randint(1, 3))
                for _ in range(n)
            ]
            assert reorder(difficulties).orders == stable_sort_oracle(difficulties)


class TestScheduleTypes:
    def test_front_to_back_is_identity(self):
        schedule = PredictionSchedule.front_to_back(4)
        assert schedule.orders == {1: 1, 2: 2, 3: 3, 4: 4}
        assert schedule.mode == MODE_FRONT_TO_BACK

    def test_non_bijection_rejected(self):
        with pytest.raises(ValueError):
            PredictionSchedule(orders={1: 1, 2: 1}, mode=MODE_FRONT_TO_BACK)
        with pytest.raises(ValueError):
            PredictionSchedule(orders={1: 1, 3: 2}, mode=MODE_FRONT_TO_BACK)

    def test_schedule_row_shape(self):
        difficulties = [0.5, 0.2]
        row = schedule_row("d1", difficulties, PredictionSchedule.front_to_back(2), reorder(difficulties))
        assert row["doc_id"] == "d1"
        assert row["events"][0] == {
            "appearance_index": 1,
            "difficulty": 0.5,
            "first_pass_order": 1,
            "second_pass_order": 2,
        }
