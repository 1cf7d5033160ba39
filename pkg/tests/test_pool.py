import random
import statistics

import pytest
from hypothesis import given, strategies as st

from ponas_pool.controller import EpisodeRecord, Search, make_reward_fn
from ponas_pool.hw import HardwareConstraints
from ponas_pool.oracle import LandscapeParams
from ponas_pool.pool import (
    MANAGER_ID, MinerProfile, NoBackupAvailable, NoContribution, NoStrongMiners, PoolError,
    PoolState, Role, TooFewMiners, UnknownMiner, assign, assign_naive, collect, distribute,
    distribute_contributions, exploit_step, monitor, promote_backup,
)
from ponas_pool.space import FULL_SPACE, Configuration, SearchSpace, is_subset_of_space

from oracles import population_std


def miners(strengths, prefix="m"):
    return [MinerProfile(f"{prefix}{i}", s) for i, s in enumerate(strengths)]


def rec(reward, values=(1,) * 10, episode=1):
    return EpisodeRecord(episode, Configuration(values), reward, reward)


def explorer_state(bests: dict[str, float]) -> PoolState:
    ms = [MinerProfile(mid) for mid in bests]
    state = PoolState({m.id: m for m in ms})
    for mid, b in bests.items():
        state.per_miner_best[mid].append(b)
    return state


class TestMinerProfile:
    def test_strength_bounds(self):
        with pytest.raises(ValueError):
            MinerProfile("x", 0.0)
        with pytest.raises(ValueError):
            MinerProfile("x", 1.5)

    def test_weak_budget_is_exact(self):
        assert MinerProfile("w", 0.1).episodes_per_phase(2000) == 200
        assert MinerProfile("w", 0.3).episodes_per_phase(10) == 3
        assert MinerProfile("s").episodes_per_phase(2000) == 2000


class TestAssign:
    def test_nine_strong(self):
        state = assign(FULL_SPACE, miners([1.0] * 9), random.Random(0))
        assert len(state.assignments) == 9
        assert all(m.role is Role.EXPLORER for m in state.miners.values())
        assert all(is_subset_of_space(s, FULL_SPACE) for s in state.assignments.values())

    def test_one_strong_three_weak(self):
        state = assign(FULL_SPACE, miners([1.0, 0.1, 0.1, 0.1]), random.Random(0))
        assert list(state.assignments) == ["m0"]
        assert [m.role for m in state.miners.values()] == [Role.EXPLORER] + [Role.EXPLOITER] * 3

    def test_no_strong_miners(self):
        with pytest.raises(NoStrongMiners):
            assign(FULL_SPACE, miners([0.1, 0.5]), random.Random(0))
        with pytest.raises(NoStrongMiners):
            assign_naive(FULL_SPACE, miners([0.1]), random.Random(0))

    def test_reserved_backup_gets_no_subspace(self):
        ms = miners([1.0, 1.0])
        ms[1].role = Role.BACKUP
        state = assign(FULL_SPACE, ms, random.Random(0))
        assert list(state.assignments) == ["m0"] and ms[1].role is Role.BACKUP

    def test_deterministic(self):
        a = assign(FULL_SPACE, miners([1.0] * 5), random.Random(7)).assignments
        b = assign(FULL_SPACE, miners([1.0] * 5), random.Random(7)).assignments
        assert a == b

    @given(st.lists(st.sampled_from([1.0, 0.5, 0.1]), min_size=1, max_size=10), st.integers(0, 99))
    def test_weak_never_explore_under_collaboration(self, strengths, seed):
        ms = miners([1.0] + strengths)
        state = assign(FULL_SPACE, ms, random.Random(seed))
        for m in ms:
            assert (m.id in state.assignments) == m.strong
            assert m.role is (Role.EXPLORER if m.strong else Role.EXPLOITER)

    def test_naive_hands_out_in_list_order(self):
        ms = miners([0.1, 1.0, 1.0])
        state = assign_naive(FULL_SPACE, ms, random.Random(0))
        assert list(state.assignments) == ["m0", "m1"]
        assert ms[2].role is Role.BACKUP
        collab = assign(FULL_SPACE, miners([0.1, 1.0, 1.0]), random.Random(0))
        assert list(state.assignments.values()) == list(collab.assignments.values())


class TestExploit:
    def test_boundary_moves_inward(self):
        best = Configuration(tuple(r[0] for r in FULL_SPACE.ranges))
        for seed in range(30):
            nxt = exploit_step(best, FULL_SPACE, random.Random(seed))
            (i,) = [j for j in range(10) if nxt[j] != best[j]]
            assert nxt[i] == FULL_SPACE.ranges[i][1]

    def test_kernel_height_neighbours(self):
        best = Configuration((5, 5, 24, 2, 2, 1, 1, 2, 1, 2))
        moved = set()
        for seed in range(200):
            nxt = exploit_step(best, FULL_SPACE, random.Random(seed))
            if nxt[0] != 5:
                moved.add(nxt[0])
        assert moved == {3, 7}

    def test_single_value_space(self):
        space = SearchSpace.from_ranges({"a": [1], "b": [2]})
        best = Configuration((1, 2))
        assert exploit_step(best, space, random.Random(0)) == best

    @given(st.data())
    def test_exactly_one_adjacent_move(self, data):
        idx = [data.draw(st.integers(0, len(r) - 1)) for r in FULL_SPACE.ranges]
        best = Configuration(tuple(r[i] for r, i in zip(FULL_SPACE.ranges, idx)))
        nxt = exploit_step(best, FULL_SPACE, random.Random(data.draw(st.integers(0, 999))))
        diff = [j for j in range(10) if nxt[j] != best[j]]
        assert len(diff) == 1
        j = diff[0]
        assert abs(FULL_SPACE.ranges[j].index(nxt[j]) - idx[j]) == 1


class TestCollect:
    def setup_method(self):
        ms = miners([1.0, 1.0, 0.1])
        self.state = assign(FULL_SPACE, ms, random.Random(0))

    def test_lower_reward_only_counts(self):
        collect(self.state, rec(0.7), "m0")
        assert collect(self.state, rec(0.5, (3,) * 10), "m1") is None
        assert self.state.best_global[1] == 0.7
        assert self.state.contribution == {"m0": 1, "m1": 1, "m2": 0}

    def test_improvement_broadcasts_to_exploiters(self):
        bc = collect(self.state, rec(0.7), "m0")
        assert bc.recipients == ("m2",) and bc.reward == 0.7 and bc.source == "m0"
        assert self.state.best_miner == "m0"

    @pytest.mark.parametrize("order", [("m0", "m1"), ("m1", "m0")])
    def test_tie_first_writer_wins(self, order):
        first, second = order
        collect(self.state, rec(0.6, (1,) * 10), first)
        assert collect(self.state, rec(0.6, (3,) * 10), second) is None
        assert self.state.best_miner == first

    def test_unknown_miner(self):
        with pytest.raises(UnknownMiner):
            collect(self.state, rec(0.5), "ghost")

    @given(st.lists(st.tuples(st.sampled_from(["m0", "m1", "m2"]), st.floats(0, 1)), max_size=60))
    def test_best_global_is_exact_running_max(self, log):
        state = assign(FULL_SPACE, miners([1.0, 1.0, 0.1]), random.Random(0))
        for k, (mid, r) in enumerate(log):
            collect(state, rec(r, episode=k + 1), mid)
            assert state.best_reward == max(x for _, x in log[: k + 1])
            finals = [s[-1] for s in state.per_miner_best.values() if s]
            assert state.best_reward == max(finals)
        for series in state.per_miner_best.values():
            assert series == sorted(series)


class TestMonitor:
    def test_identical_bests(self):
        state = explorer_state({f"m{i}": 0.8 for i in range(4)})
        assert monitor(state, 900) == []
        assert state.stddev_series == [(900, 0.0)]

    def test_departure_from_frozen_group(self):
        # Seven explorers; the median (0.4) puts {0.4, 0.8, 0.8, 0.8} in the
        # high-reward group. The 0.4 miner then leaves.
        bests = {"a": 0.8, "b": 0.8, "c": 0.8, "d": 0.4, "e": 0.2, "f": 0.2, "g": 0.2}
        state = explorer_state(bests)
        assert monitor(state, 799, threshold=0.2) == []
        assert state.high_reward == ("a", "b", "c", "d")
        assert state.stddev_series[-1][1] == pytest.approx(0.17320508075688773, abs=1e-12)

        state.miners["d"].online = False
        alerts = monitor(state, 800, threshold=0.2)
        # A departed member counts as delivering nothing: pstdev(0.8, 0.8, 0.8, 0).
        assert state.stddev_series[-1][1] == pytest.approx(0.34641016151377546, abs=1e-12)
        assert [(a.kind, a.miner, a.episode) for a in alerts] == [("PrepareBackup", "d", 800)]

    def test_warm_up_suppresses_alerts(self):
        state = explorer_state({"a": 0.9, "b": 0.3, "c": 0.1})
        assert monitor(state, 100) == []
        assert state.stddev_series[-1][1] > 0.05

    def test_alert_is_edge_triggered(self):
        state = explorer_state({"a": 0.9, "b": 0.3, "c": 0.6})
        assert len(monitor(state, 500)) == 1
        assert monitor(state, 501) == []

    def test_too_few(self):
        with pytest.raises(TooFewMiners):
            monitor(explorer_state({"a": 0.5}), 1)

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=12))
    def test_stddev_matches_reference(self, values):
        state = explorer_state({f"m{i:02d}": v for i, v in enumerate(values)})
        monitor(state, 1)
        med = statistics.median(values)
        high = [v for v in values if v >= med]
        assert abs(state.stddev_series[-1][1] - population_std(high)) < 1e-12


class TestPromote:
    def make(self):
        p = LandscapeParams(1)
        ms = miners([1.0, 1.0, 1.0, 1.0])
        ms[2].role = ms[3].role = Role.BACKUP
        state = assign(FULL_SPACE, ms, random.Random(0))
        for mid, sub in state.assignments.items():
            state.searches[mid] = Search.start(sub, make_reward_fn(p, HardwareConstraints(), 30), 0)
        collect(state, rec(0.75), "m0")
        collect(state, rec(0.5), "m1")
        return state, ms

    def test_transfer(self):
        state, ms = self.make()
        sub, search = state.assignments["m0"], state.searches["m0"]
        active = set(map(id, state.assignments.values()))
        ms[0].online = False
        new = promote_backup(state, "m0", [ms[2], ms[3]])
        assert new == "m2"
        assert state.assignments["m2"] is sub and state.searches["m2"] is search
        assert "m0" not in state.assignments
        assert state.current_best("m2") == 0.75
        assert ms[2].role is Role.EXPLORER and ms[0].role is Role.BACKUP
        assert set(map(id, state.assignments.values())) == active

    def test_lowest_best_then_smallest_id(self):
        state, ms = self.make()
        collect(state, rec(0.3), "m3")
        assert promote_backup(state, "m0", [ms[3], ms[2]]) == "m2"
        state, ms = self.make()
        collect(state, rec(0.3), "m2")
        collect(state, rec(0.1), "m3")
        assert promote_backup(state, "m0", [ms[2], ms[3]]) == "m3"

    def test_no_backup(self):
        state, ms = self.make()
        ms[2].online = ms[3].online = False
        with pytest.raises(NoBackupAvailable):
            promote_backup(state, "m0", [ms[2], ms[3]])

    def test_departed_must_be_an_explorer(self):
        state, ms = self.make()
        with pytest.raises(PoolError):
            promote_backup(state, "m2", [ms[3]])
        with pytest.raises(UnknownMiner):
            promote_backup(state, "zz", [ms[3]])


class TestDistribute:
    def test_single_miner(self):
        share = distribute_contributions({"a": 17}, 10.0, 0.02)
        assert share.amounts == {MANAGER_ID: pytest.approx(0.2), "a": pytest.approx(9.8)}

    def test_ten_ten_one(self):
        share = distribute_contributions({"s1": 2000, "s2": 2000, "w": 200}, 1.0, 0.02)
        assert share.amounts["s1"] / share.amounts["w"] == pytest.approx(10.0, rel=1e-12)
        assert share.amounts["w"] == pytest.approx(0.98 / 21, rel=1e-12)
        assert sum(share.fractions.values()) == pytest.approx(1.0, abs=1e-12)

    def test_errors(self):
        with pytest.raises(NoContribution):
            distribute_contributions({"a": 0}, 1.0, 0.1)
        with pytest.raises(ValueError):
            distribute_contributions({"a": 1}, 1.0, 1.0)

    def test_from_state(self):
        state = explorer_state({"a": 0.1, "b": 0.2})
        state.contribution.update(a=3, b=1)
        share = distribute(state, 4.0, 0.0)
        assert share.amounts == {MANAGER_ID: 0.0, "a": 3.0, "b": 1.0}

    @given(st.dictionaries(st.text("abc", min_size=1, max_size=3), st.integers(0, 10**6), min_size=1),
           st.floats(0.01, 1e6), st.floats(0, 0.99))
    def test_conservation(self, contrib, reward, fee):
        if sum(contrib.values()) == 0:
            return
        share = distribute_contributions(contrib, reward, fee)
        assert abs(sum(share.amounts.values()) - reward) <= 1e-9 * reward
        assert all(v >= 0 for v in share.amounts.values())
