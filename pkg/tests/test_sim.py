import csv
import io
import json

import pytest

from ponas_pool import sim
from ponas_pool.chain import Task
from ponas_pool.controller import SearchBudget
from ponas_pool.pool import MinerProfile, Role, UnknownMiner
from ponas_pool.sim import (
    LEADER, EventKind, EventQueue, InvalidScenario, Scenario, inject_departure, inject_join, run,
)
from ponas_pool.space import FULL_SPACE


def strong(n, prefix="m"):
    return [MinerProfile(f"{prefix}{i}") for i in range(n)]


def scenario(miners, episodes=120, **kw):
    return Scenario(miners=miners, seed=kw.pop("seed", 5), budget=SearchBudget(episodes), **kw)


def rows_of(art, miner=None):
    return [r for r in art.episodes if miner is None or r[3] == miner]


def test_event_queue_orders_by_time_then_seq():
    q = EventQueue()
    q.push(3, EventKind.COMMIT, n=0)
    q.push(1, EventKind.COMMIT, n=1)
    q.push(3, EventKind.COMMIT, n=2)
    q.push(1, EventKind.COMMIT, n=3)
    assert [e.payload["n"] for e in q.pop_tick()] == [1, 3]
    assert [e.payload["n"] for e in q.pop_tick()] == [0, 2]
    assert not q


def test_single_strong_miner_wins_one_block():
    art = run(scenario(strong(1)))
    assert len(art.blocks) == 1
    b = art.blocks[0]
    assert b["winner"] == "pool" and b["finder"] == "m0" and b["height"] == 1
    assert b["validated"] >= b["claim"]
    assert len(rows_of(art, "m0")) == 120


def test_nine_fixture_explorers_give_nine_monotone_curves():
    art = run(scenario(strong(9), episodes=200, subspaces="fixture"))
    curves = {}
    for r in art.episodes:
        curves.setdefault(r[4], []).append(r[6])
    assert sorted(curves) == [f"S{i}" for i in range(1, 10)]
    for c in curves.values():
        assert len(c) == 200 and c == sorted(c)
    text = art.render()["episodes.csv"]
    assert {"episode", "miner", "best_so_far"} <= set(text.splitlines()[0].split(","))


def test_weak_miner_budget_and_spacing():
    art = run(scenario([MinerProfile("s"), MinerProfile("w", 0.1)], episodes=2000))
    weak = rows_of(art, "w")
    assert len(weak) == 200
    assert [r[1] for r in weak] == list(range(10, 2001, 10))


def test_leader_departure_hands_over_search():
    miners = strong(4) + [MinerProfile("b0", role=Role.BACKUP)]
    art = run(scenario(miners, episodes=300, subspaces="fixture", departures=[(150, LEADER)]))
    kinds = [a["type"] for a in art.alerts]
    assert "MinerDeparture" in kinds and "PromoteBackup" in kinds
    promo = next(a for a in art.alerts if a["type"] == "PromoteBackup")
    dep = next(a for a in art.alerts if a["type"] == "MinerDeparture")
    assert promo["miner"] == "b0" and promo["departed"] == dep["miner"]
    label = promo["search"]
    rows = [r for r in art.episodes if r[4] == label]
    owners = [r[3] for r in rows]
    assert owners[0] == dep["miner"] and owners[-1] == "b0"
    assert [r[6] for r in rows] == sorted(r[6] for r in rows)
    assert [r[2] for r in rows] == list(range(1, len(rows) + 1))


def test_depart_and_rejoin_preserves_history():
    base = scenario(strong(2), episodes=300)
    inject_departure(base, 100, "m1")
    inject_join(base, 200, "m1")
    art = run(base)
    ticks = [r[1] for r in rows_of(art, "m1")]
    assert ticks[:99] == list(range(1, 100))
    assert not [t for t in ticks if 100 <= t < 200]
    assert ticks[-1] == 300 and len(ticks) == 99 + 100
    share = {r[1]: r[2] for r in art.shares}
    assert share["m1"] / share["m0"] == pytest.approx(199 / 300)


def test_departing_backup_triggers_nothing():
    miners = strong(2) + [MinerProfile("b0", role=Role.BACKUP)]
    art = run(scenario(miners, departures=[(50, "b0")]))
    assert [a["type"] for a in art.alerts if a["type"] != "PrepareBackup"] == ["MinerDeparture"]


def test_all_strong_leave_without_backups():
    miners = strong(2) + [MinerProfile("w", 0.5)]
    art = run(scenario(miners, departures=[(30, "m0"), (40, "m1")]))
    assert sum(a["type"] == "NoBackupAvailable" for a in art.alerts) == 2
    assert max(r[1] for r in rows_of(art, "m0")) < 30
    assert len(art.blocks) == 1  # the best found before the departures still commits


def test_joining_strong_miner_becomes_backup():
    miners = strong(3)
    sc = scenario(miners, episodes=200, departures=[(150, "m0")])
    inject_join(sc, 100, MinerProfile("late"))
    art = run(sc)
    promo = [a for a in art.alerts if a["type"] == "PromoteBackup"]
    assert [p["miner"] for p in promo] == ["late"]


@pytest.mark.parametrize("latency", [1, 4, 40])
def test_exploiters_never_act_before_delivery(latency, monkeypatch):
    delivered: dict = {}
    used = []
    real_push = EventQueue.push

    def push(self, time, kind, **payload):
        if kind is EventKind.BEST_BROADCAST:
            key = (payload["miner"], payload["config"])
            delivered[key] = min(delivered.get(key, time), time)
        return real_push(self, time, kind, **payload)

    real_compute = sim._Run._compute

    def compute(self, job):
        if job.search is None and job.base is not None:
            used.append((job.event.time, job.miner, job.base))
        return real_compute(self, job)

    monkeypatch.setattr(EventQueue, "push", push)
    monkeypatch.setattr(sim._Run, "_compute", compute)
    miners = strong(2) + [MinerProfile("w0", 0.5), MinerProfile("w1", 0.1)]
    run(scenario(miners, episodes=300, latency=latency))
    assert used
    for t, mid, base in used:
        assert delivered[(mid, base)] <= t


def test_determinism_and_worker_independence():
    miners = strong(3) + [MinerProfile("w", 0.1), MinerProfile("b", role=Role.BACKUP)]
    sc = dict(episodes=200, departures=[(90, LEADER)], blocks=2)
    one = run(scenario(list(miners), **sc)).render()
    again = run(scenario([MinerProfile(m.id, m.strength, m.role) for m in miners], **sc)).render()
    threaded = run(scenario([MinerProfile(m.id, m.strength, m.role) for m in miners], **sc),
                   workers=4).render()
    assert one == again == threaded


def test_multiple_blocks_rank_tasks_and_link():
    tasks = [Task("hard", 4.0, 2.0, FULL_SPACE), Task("easy", 1.0, 2.0, FULL_SPACE)]
    art = run(scenario(strong(2), episodes=60, blocks=3, tasks=tasks))
    assert [b["task"] for b in art.blocks] == ["easy", "hard", "easy"]
    assert [b["height"] for b in art.blocks] == [1, 2, 3]
    assert art.blocks[0]["prev"] == "00" * 32
    for prev, nxt in zip(art.blocks, art.blocks[1:]):
        assert nxt["prev"] == prev["digest"]
    assert art.summary["tip"] == art.blocks[-1]["digest"]
    per_block = {}
    for h, _, amount in art.shares:
        per_block[h] = per_block.get(h, 0.0) + amount
    assert all(v == pytest.approx(2.0, rel=1e-12) for v in per_block.values())


def test_inflated_claims_give_empty_rounds():
    art = run(scenario(strong(1), claim_inflation=0.5, blocks=2))
    assert art.blocks == [] and art.summary["height"] == 0
    assert [r["produced"] for r in art.summary["results"]] == [False, False]


def test_commit_arriving_in_validation_is_rejected():
    # The first commit leaves at tick 1; with latency E it lands on the
    # Validation tick E + 1. Every later commit falls beyond the horizon.
    E = 20
    art = run(scenario(strong(1), episodes=E, latency=E))
    rejected = [a for a in art.alerts if a["type"] == "CommitRejected"]
    assert [(a["tick"], a["phase"]) for a in rejected] == [(E + 1, "Validation")]
    assert art.blocks == []
    assert art.summary["results"][0]["evaluator_calls"] == 0


def test_artifacts_written(tmp_path):
    art = run(scenario(strong(2), episodes=30))
    out = art.write(tmp_path / "run")
    assert sorted(p.name for p in out.iterdir()) == sorted(sim.ARTIFACT_FILES)
    rows = list(csv.reader(io.StringIO((out / "stddev.csv").read_text())))
    assert rows[0] == ["block", "episode", "stddev", "high_reward_miners"] and len(rows) == 31
    assert json.loads((out / "blocks.log").read_text().splitlines()[0])["height"] == 1


class TestScenarioValidation:
    @pytest.mark.parametrize("kw", [
        dict(miners=[]),
        dict(miners=[MinerProfile("a"), MinerProfile("a")]),
        dict(miners=[MinerProfile("pool")]),
        dict(miners=[MinerProfile("w", 0.1)]),
        dict(blocks=0),
        dict(latency=0),
        dict(policy="greedy"),
        dict(subspaces="random"),
        dict(fee_rate=1.0),
        dict(noise=0.5),
        dict(departures=[(10_000, "m0")]),
        dict(departures=[(5, "ghost")]),
        dict(miners=strong(10), subspaces="fixture"),
    ])
    def test_invalid(self, kw):
        kw.setdefault("miners", strong(1))
        with pytest.raises(InvalidScenario):
            run(scenario(**kw))

    def test_inject_errors(self):
        sc = scenario(strong(1))
        with pytest.raises(UnknownMiner):
            inject_departure(sc, 5, "ghost")
        with pytest.raises(UnknownMiner):
            inject_join(sc, 5, "ghost")
        with pytest.raises(InvalidScenario):
            inject_departure(sc, -1, "m0")
