"""Path work, the offline bound, the greedy scheduler, and the exhaustive oracle."""

from __future__ import annotations

import random

import pytest

from dagexplore.core import (
    CycleError,
    DagInstance,
    Family,
    InvalidInstanceError,
    SizeCapError,
    TableMode,
    completion_time,
    validate_work_table,
)
from dagexplore.generators import disjoint_paths, uniform_sources, worst_case_instance
from dagexplore.offline import (
    brute_force_offline_opt,
    min_path_work,
    offline_lower_bound,
    offline_schedule,
)

from conftest import family_corpus, random_instance


def enumerate_min_path_work(instance: DagInstance) -> dict[int, int]:
    """Independent oracle: list every source-to-vertex path explicitly."""

    def paths_to(vertex: int) -> list[list[int]]:
        parents = instance.parents[vertex]
        if not parents:
            return [[vertex]]
        return [path + [vertex] for parent in parents for path in paths_to(parent)]

    return {
        vertex: min(sum(instance.weight[v] for v in path) for path in paths_to(vertex))
        for vertex, _ in instance.vertices
    }


class TestMinPathWork:
    def test_isolated_vertex(self):
        instance = DagInstance.from_weights("one", [5])
        assert min_path_work(instance).work == {0: 5}

    def test_chain(self):
        chain = disjoint_paths([3], [[2, 3, 4]])
        assert min_path_work(chain).work == {0: 2, 1: 5, 2: 9}

    def test_diamond_takes_cheap_branch(self, diamond_instance):
        path = min_path_work(diamond_instance)
        assert path.work[3] == 3
        assert path.predecessor[3] == 2

    def test_predecessor_tie_break_is_lowest_parent(self):
        instance = DagInstance.from_weights("tie", [1, 1, 1], [(0, 2), (1, 2)])
        assert min_path_work(instance).predecessor[2] == 0

    def test_cycle_rejected(self):
        loop = DagInstance.from_weights("loop", [1, 1], [(0, 1), (1, 0)])
        with pytest.raises(InvalidInstanceError):
            min_path_work(loop)
        with pytest.raises(CycleError):
            loop.topological_order

    def test_matches_exhaustive_enumeration(self):
        rng = random.Random(4242)
        for _ in range(60):
            instance = random_instance(rng)
            assert min_path_work(instance).work == enumerate_min_path_work(instance)


class TestLowerBound:
    def test_two_proc_example(self, two_proc_instance):
        assert offline_lower_bound(two_proc_instance, 2) == 2

    def test_four_proc_example(self, four_proc_instance):
        assert offline_lower_bound(four_proc_instance, 4) == 4

    def test_critical_path_dominates(self):
        chain = disjoint_paths([3], [[2, 3, 4]])
        assert offline_lower_bound(chain, 8) == 9

    def test_single_processor_is_total_weight(self, four_proc_instance):
        assert offline_lower_bound(four_proc_instance, 1) == four_proc_instance.total_weight

    def test_invalid_processor_count(self, two_proc_instance):
        with pytest.raises(ValueError):
            offline_lower_bound(two_proc_instance, 0)

    @pytest.mark.parametrize("scale", [2, 3, 7])
    def test_weight_scaling_in_ceiling_free_case(self, scale):
        base = uniform_sources(4, 3)  # total weight 12, divisible by r=2
        scaled = uniform_sources(4, 3 * scale)
        assert offline_lower_bound(scaled, 2) == scale * offline_lower_bound(base, 2)


class TestGreedySchedule:
    def test_two_proc_example_meets_bound(self, two_proc_instance):
        table = offline_schedule(two_proc_instance, 2)
        assert completion_time(table) == 2
        assert validate_work_table(two_proc_instance, table, TableMode.OFFLINE).valid

    def test_four_proc_example_meets_bound(self, four_proc_instance):
        table = offline_schedule(four_proc_instance, 4)
        assert completion_time(table) == 4

    def test_meets_bound_on_worst_case_family(self):
        for r in (2, 3, 4):
            for scale in (1, 2):
                instance = worst_case_instance(r, r * scale)
                table = offline_schedule(instance, r)
                assert completion_time(table) == offline_lower_bound(instance, r)

    def test_output_is_offline_valid_and_at_least_bound(self):
        rng = random.Random(99)
        for _ in range(40):
            instance = random_instance(rng)
            for r in (1, 2, 3, 4):
                table = offline_schedule(instance, r)
                report = validate_work_table(instance, table, TableMode.OFFLINE)
                assert report.valid, f"{instance.name} r={r}: {report}"
                assert completion_time(table) >= offline_lower_bound(instance, r)

    def test_zero_weight_cascade(self):
        # 0 (w=0) -> 1 (w=2): the child is schedulable from slot 1.
        instance = DagInstance.from_weights("z", [0, 2], [(0, 1)])
        table = offline_schedule(instance, 1)
        assert completion_time(table) == 2
        assert table.slots_of(0) == frozenset()

    def test_family_corpus_sweep_meets_or_reports_gap(self):
        # Every family instance: greedy never beats the bound, and on the
        # balanced worst-case family the gap is exactly zero.
        for instance in family_corpus(seed=808, count=35):
            for r in (2, 3, 4):
                achieved = completion_time(offline_schedule(instance, r))
                bound = offline_lower_bound(instance, r)
                assert achieved >= bound
                tag = instance.family
                if tag is not None and tag.family is Family.WORST_CASE and tag.param("r") == r:
                    assert achieved == bound


class TestBruteForce:
    def test_two_proc_example(self, two_proc_instance):
        assert brute_force_offline_opt(two_proc_instance, 2) == 2

    def test_single_vertex_any_processor_count(self):
        instance = DagInstance.from_weights("w7", [7])
        for r in (1, 2, 3):
            assert brute_force_offline_opt(instance, r) == 7

    def test_diamond_frozen_value(self, diamond_instance):
        # Frozen from the oracle itself; equals the path bound through vertex 1.
        assert brute_force_offline_opt(diamond_instance, 2) == 11

    def test_size_caps_enforced(self, two_proc_instance):
        big = uniform_sources(9, 1)
        with pytest.raises(SizeCapError):
            brute_force_offline_opt(big, 2)
        with pytest.raises(SizeCapError):
            brute_force_offline_opt(two_proc_instance, 4)

    def test_bound_greedy_brute_ordering(self):
        rng = random.Random(31337)
        for _ in range(50):
            instance = random_instance(rng)
            for r in (1, 2, 3):
                bound = offline_lower_bound(instance, r)
                greedy = completion_time(offline_schedule(instance, r))
                brute = brute_force_offline_opt(instance, r)
                assert bound <= greedy <= brute, (instance.name, r, bound, greedy, brute)
