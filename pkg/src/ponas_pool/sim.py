"""Deterministic discrete-event harness for a mining pool over several blocks.

Time is measured in integer ticks. Block ``b`` occupies ticks
``T0 .. T0 + E + 1`` with ``T0 = b * (E + 2)`` and ``E`` the episode budget:
Init at ``T0``, Training ticks ``T0 + 1 .. T0 + E`` (strong miners finish one
episode per tick), Validation at ``T0 + E + 1``.

Events are processed in ``(time, seq)`` order. Episode work for one tick may
be computed on worker threads, but each result is applied in its event's
order, so the artifacts never depend on the number of workers.
"""

from __future__ import annotations

import copy
import csv
import enum
import heapq
import io
import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .chain import (
    Chain, Commitment, PhaseEvent, PhaseKind, Submission, Task, rank_tasks,
)
from .controller import DEFAULT_LEARNING_RATE, EpisodeRecord, SearchBudget, Search, make_reward_fn
from .hw import HardwareConstraints
from .oracle import LandscapeParams, derive_seed
from .pool import (
    DEFAULT_MONITOR_THRESHOLD, DEFAULT_MONITOR_WARMUP, MinerProfile, NoBackupAvailable, PoolState,
    Role, TooFewMiners, UnknownMiner, assign, assign_naive, collect, distribute, exploit_step,
    monitor, promote_backup,
)
from .space import FULL_SPACE, Configuration, SearchSpace, load_fixture_subspaces

log = logging.getLogger(__name__)

POOL_ID = "pool"
LEADER = "@leader"
ARTIFACT_FILES = ("episodes.csv", "stddev.csv", "blocks.log", "shares.csv", "alerts.log", "summary.json")


class InvalidScenario(ValueError):
    pass


class EventKind(str, enum.Enum):
    EPISODE_DONE = "EpisodeDone"
    BEST_BROADCAST = "BestBroadcast"
    COMMIT = "Commit"
    SUBMIT = "Submit"
    PHASE_TICK = "PhaseTick"
    MINER_DEPARTURE = "MinerDeparture"
    MINER_JOIN = "MinerJoin"


@dataclass(order=True)
class Event:
    time: int
    seq: int
    kind: EventKind = field(compare=False)
    payload: dict = field(compare=False, default_factory=dict)


class EventQueue:
    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._seq = 0

    def push(self, time: int, kind: EventKind, **payload: Any) -> Event:
        ev = Event(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def pop_tick(self) -> list[Event]:
        """All events sharing the earliest pending time, in seq order."""
        t = self._heap[0].time
        out = []
        while self._heap and self._heap[0].time == t:
            out.append(heapq.heappop(self._heap))
        return out

    def __bool__(self) -> bool:
        return bool(self._heap)


def default_task(space: SearchSpace = FULL_SPACE, hc: HardwareConstraints | None = None) -> Task:
    return Task("nas-cifar10", 1.0, 1.0, space, hc or HardwareConstraints())


@dataclass
class Scenario:
    miners: list[MinerProfile]
    seed: int
    budget: SearchBudget = field(default_factory=SearchBudget)
    blocks: int = 1
    latency: int = 1
    departures: list[tuple[int, str]] = field(default_factory=list)
    joins: list[tuple[int, MinerProfile]] = field(default_factory=list)
    constraints: HardwareConstraints = field(default_factory=HardwareConstraints)
    noise: float = 0.04
    optimum_count: int = 4
    fee_rate: float = 0.02
    monitor_threshold: float = DEFAULT_MONITOR_THRESHOLD
    monitor_warmup: int = DEFAULT_MONITOR_WARMUP
    policy: str = "collaborative"
    subspaces: str = "partition"
    learning_rate: float = DEFAULT_LEARNING_RATE
    claim_inflation: float = 0.0
    tasks: list[Task] | None = None
    space: SearchSpace = FULL_SPACE
    seeds: dict[str, int] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.blocks * self.block_ticks

    @property
    def block_ticks(self) -> int:
        return self.budget.episodes + 2

    def seed_for(self, component: str) -> int:
        if component in self.seeds:
            return self.seeds[component]
        return derive_seed(self.seed, component)

    def task_list(self) -> list[Task]:
        return list(self.tasks) if self.tasks else [default_task(self.space, self.constraints)]

    def validate(self) -> None:
        ids = [m.id for m in self.miners]
        if not self.miners:
            raise InvalidScenario("scenario has no miners")
        if len(set(ids)) != len(ids):
            raise InvalidScenario(f"duplicate miner ids: {ids}")
        if POOL_ID in ids:
            raise InvalidScenario(f"{POOL_ID!r} is reserved for the pool itself")
        if not any(m.strong for m in self.miners):
            raise InvalidScenario("at least one strong miner (strength 1.0) is required")
        if self.blocks < 1:
            raise InvalidScenario("blocks must be >= 1")
        if self.latency < 1:
            raise InvalidScenario("latency must be at least one tick")
        if self.policy not in ("collaborative", "naive"):
            raise InvalidScenario(f"unknown policy {self.policy!r}")
        if self.subspaces not in ("partition", "fixture", "full"):
            raise InvalidScenario(f"unknown subspace mode {self.subspaces!r}")
        if self.subspaces == "fixture":
            n = sum(1 for m in self.miners if m.strong and m.role is not Role.BACKUP)
            if n > 9 or len(self.space) != 10:
                raise InvalidScenario("fixture subspaces need the 10-parameter space and <= 9 explorers")
        if not 0.0 <= self.fee_rate < 1.0:
            raise InvalidScenario("fee_rate must be in [0, 1)")
        known = set(ids) | {p.id for _, p in self.joins}
        for t, mid in self.departures:
            if not 0 <= t < self.horizon:
                raise InvalidScenario(f"departure at tick {t} outside the horizon {self.horizon}")
            if mid != LEADER and mid not in known:
                raise InvalidScenario(f"departure of unknown miner {mid!r}")
        for t, _ in self.joins:
            if not 0 <= t < self.horizon:
                raise InvalidScenario(f"join at tick {t} outside the horizon {self.horizon}")
        try:
            LandscapeParams(0, self.optimum_count, self.noise)
        except ValueError as exc:
            raise InvalidScenario(str(exc)) from exc


@dataclass
class RunArtifacts:
    episodes: list[tuple] = field(default_factory=list)
    stddev: list[tuple] = field(default_factory=list)
    blocks: list[dict] = field(default_factory=list)
    shares: list[tuple] = field(default_factory=list)
    alerts: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    EPISODE_HEADER = ("block", "tick", "episode", "miner", "search", "reward", "best_so_far")
    STDDEV_HEADER = ("block", "episode", "stddev", "high_reward_miners")
    SHARES_HEADER = ("block", "recipient", "amount")

    def render(self) -> dict[str, str]:
        return {
            "episodes.csv": _csv(self.EPISODE_HEADER, self.episodes),
            "stddev.csv": _csv(self.STDDEV_HEADER, self.stddev),
            "blocks.log": "".join(json.dumps(b, sort_keys=True) + "\n" for b in self.blocks),
            "shares.csv": _csv(self.SHARES_HEADER, self.shares),
            "alerts.log": "".join(json.dumps(a, sort_keys=True) + "\n" for a in self.alerts),
            "summary.json": json.dumps(self.summary, sort_keys=True, indent=2) + "\n",
        }

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.render().items():
            (out / name).write_text(text)
        return out

    def best_curve(self, block: int = 1) -> list[float]:
        """Pool-wide best reward after each training tick of ``block``."""
        return list(self.summary["best_curves"][str(block)])


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class _MinerRuntime:
    profile: MinerProfile
    declared_role: Role
    gen: int = 0
    planned: int = 0
    view: tuple[Configuration, float] | None = None
    exploit_rng: random.Random | None = None
    exploit_best: float = 0.0
    exploit_done: int = 0
    no_backup_logged: bool = False
    per_phase: int | None = None


@dataclass
class _Job:
    event: Event
    miner: str
    search: Search | None
    base: Configuration | None


class _Run:
    def __init__(self, scenario: Scenario, workers: int = 1) -> None:
        scenario.validate()
        self.sc = scenario
        self.workers = workers
        self.q = EventQueue()
        self.art = RunArtifacts()
        self.chain = Chain(scenario.budget.episodes)
        self.runtime: dict[str, _MinerRuntime] = {
            m.id: _MinerRuntime(copy.copy(m), m.role) for m in scenario.miners
        }
        self.pending_tasks: list[Task] = []
        self.block = 0
        self.t0 = 0
        self.pool: PoolState | None = None
        self.task: Task | None = None
        self.reward_fn = None
        self.labels: dict[int, str] = {}
        self.committed: list[tuple[Submission, str, int]] = []
        self.accepted: list[tuple[Submission, str, int]] = []
        self.last_committed_reward: float | None = None
        self.best_curve: list[float] = []
        self.best_curves: dict[str, list[float]] = {}
        self.block_results: list[dict] = []
        self.executor = ThreadPoolExecutor(workers) if workers > 1 else None

    # -- scheduling ------------------------------------------------------

    def _episode_tick(self, n: int, k: int) -> int:
        return self.t0 + -(-k * self.sc.budget.episodes // n)

    def _schedule_next(self, mid: str, now: int) -> None:
        rt = self.runtime[mid]
        n = rt.per_phase
        if n is None:
            n = rt.per_phase = rt.profile.episodes_per_phase(self.sc.budget.episodes)
        k = rt.planned + 1
        while k <= n and self._episode_tick(n, k) <= now:
            k += 1
        if k > n:
            return
        rt.planned = k
        base = rt.view[0] if rt.view else None
        self.q.push(self._episode_tick(n, k), EventKind.EPISODE_DONE,
                    miner=mid, gen=rt.gen, block=self.block, base=base)

    def _has_work(self, mid: str) -> bool:
        rt = self.runtime[mid]
        if not rt.profile.online:
            return False
        if rt.profile.role is Role.EXPLORER:
            return mid in self.pool.searches
        return rt.profile.role is Role.EXPLOITER

    # -- block lifecycle -------------------------------------------------

    def _init_block(self, t: int) -> None:
        sc = self.sc
        self.t0 = t
        if not self.pending_tasks:
            self.pending_tasks = rank_tasks(sc.task_list())
        self.task = self.pending_tasks.pop(0)
        params = LandscapeParams(derive_seed(sc.seed_for("landscape"), self.task.id),
                                 sc.optimum_count, sc.noise, self.task.space)
        self.reward_fn = make_reward_fn(params, self.task.constraints, sc.budget.epochs_per_episode)

        profiles = []
        for rt in self.runtime.values():
            rt.profile.role = rt.declared_role
            rt.planned = 0
            rt.view = None
            rt.exploit_best, rt.exploit_done = 0.0, 0
            rt.no_backup_logged = False
            rt.exploit_rng = random.Random(derive_seed(sc.seed_for("exploit"), self.block, rt.profile.id))
            profiles.append(rt.profile)
        online = [p for p in profiles if p.online]
        offline = [p for p in profiles if not p.online]
        fixed = None
        if sc.subspaces == "fixture":
            fixed = load_fixture_subspaces()[0]
        elif sc.subspaces == "full":
            fixed = [self.task.space.as_subspace()] * len(online)
        rng = random.Random(derive_seed(sc.seed_for("partition"), self.block))
        chooser = assign if sc.policy == "collaborative" else assign_naive
        if not any(p.strong for p in online):
            pool = PoolState({p.id: p for p in online})
            for p in online:
                p.role = Role.BACKUP if p.strong else Role.EXPLOITER
        else:
            pool = chooser(self.task.space, online, rng, fixed)
        for p in offline:
            p.role = Role.BACKUP
            pool.add_miner(p)
        self.pool = pool

        self.labels = {}
        ctrl_seed = sc.seed_for("controller")
        for slot, (mid, sub) in enumerate(pool.assignments.items()):
            search = Search.start(sub, self.reward_fn, derive_seed(ctrl_seed, self.block, slot),
                                  sc.learning_rate, keep_records=False)
            pool.searches[mid] = search
            self.labels[id(search)] = f"S{slot + 1}"

        self.committed, self.accepted = [], []
        self.last_committed_reward = None
        self.best_curve = []
        self.chain.fire(PhaseEvent.TASK_SELECTED, t)
        E = sc.budget.episodes
        self.q.push(t + E + 1, EventKind.PHASE_TICK, to=PhaseKind.VALIDATION.value, block=self.block)
        for mid in sorted(self.runtime):
            if self._has_work(mid):
                self._schedule_next(mid, t)
        log.info("block %d: task %s, %d explorers", self.block + 1, self.task.id, len(pool.assignments))

    def _close_block(self, t: int) -> None:
        subs = []
        finder = None
        if self.accepted:
            sub, finder, _ = max(self.accepted, key=lambda a: (a[0].claimed, -a[2]))
            subs.append(sub)
        outcome, block = self.chain.close_round(self.task.id, subs, self.reward_fn, t)
        result = {"block": self.block + 1, "task": self.task.id,
                  "best_global": self.pool.best_reward, "best_miner": self.pool.best_miner,
                  "evaluator_calls": outcome.evaluator_calls, "height": self.chain.height,
                  "produced": block is not None}
        self.block_results.append(result)
        self.best_curves[str(self.block + 1)] = self.best_curve
        if block is None:
            log.info("block interval %d: empty round", self.block + 1)
            return
        commit_tick = next(a[2] for a in self.accepted if a[0] is outcome.winner)
        shares = distribute(self.pool, self.task.task_reward, self.sc.fee_rate)
        self.art.blocks.append({
            "height": block.height, "task": block.task, "winner": block.winner,
            "finder": finder, "config": list(block.winning_config.values),
            "claim": block.claimed, "validated": block.validated_reward,
            "prev": block.prev_digest.hex(), "digest": block.digest.hex(),
            "commit_digest": block.commit_digest.hex(), "commit_tick": commit_tick,
            "commit_phase": PhaseKind.TRAINING.value, "block_reward": self.task.task_reward,
            "interval": self.block + 1,
        })
        for rid, amount in shares.amounts.items():
            self.art.shares.append((block.height, rid, amount))

    # -- event handlers --------------------------------------------------

    def _resolve(self, mid: str) -> str | None:
        if mid != LEADER:
            return mid
        if self.pool is None:
            return None
        explorers = [m for m in self.pool.with_role(Role.EXPLORER) if m.online]
        if not explorers:
            return None
        return min(explorers, key=lambda m: (-self.pool.current_best(m.id), m.id)).id

    def _on_departure(self, ev: Event) -> None:
        mid = self._resolve(ev.payload["miner"])
        if mid is None or mid not in self.runtime:
            return
        rt = self.runtime[mid]
        if not rt.profile.online:
            return
        rt.profile.online = False
        rt.gen += 1
        self.art.alerts.append({"tick": ev.time, "block": self.block + 1, "type": "MinerDeparture",
                                "miner": mid, "role": rt.profile.role.value})

    def _on_join(self, ev: Event) -> None:
        profile: MinerProfile = ev.payload["profile"]
        rt = self.runtime.get(profile.id)
        if rt is None:
            rt = self.runtime[profile.id] = _MinerRuntime(copy.copy(profile), profile.role)
            rt.exploit_rng = random.Random(derive_seed(self.sc.seed_for("exploit"), self.block, profile.id))
            rt.profile.role = Role.BACKUP if rt.profile.strong else Role.EXPLOITER
            if self.sc.policy == "naive" and not rt.profile.strong:
                rt.profile.role = Role.BACKUP
            if self.pool is not None:
                self.pool.add_miner(rt.profile)
        elif rt.profile.online:
            return
        rt.profile.online = True
        rt.gen += 1
        self.art.alerts.append({"tick": ev.time, "block": self.block + 1, "type": "MinerJoin",
                                "miner": profile.id, "role": rt.profile.role.value})
        if self.chain.phase.kind is PhaseKind.TRAINING and self._has_work(profile.id):
            self._schedule_next(profile.id, ev.time)

    def _on_broadcast(self, ev: Event) -> None:
        rt = self.runtime.get(ev.payload["miner"])
        if rt is None or not rt.profile.online or ev.payload["block"] != self.block:
            return
        if rt.view is None or ev.payload["reward"] > rt.view[1]:
            rt.view = (ev.payload["config"], ev.payload["reward"])

    def _on_commit(self, ev: Event) -> None:
        sub: Submission = ev.payload["submission"]
        ok = self.chain.receive_commitment(Commitment(sub.digest, sub.miner))
        if ok:
            self.accepted.append((sub, ev.payload["finder"], ev.payload["sent"]))
        else:
            self.art.alerts.append({"tick": ev.time, "block": self.block + 1, "type": "CommitRejected",
                                    "miner": sub.miner, "phase": self.chain.phase.kind.value})

    def _on_phase(self, ev: Event) -> None:
        if ev.payload["to"] == PhaseKind.VALIDATION.value:
            self.chain.fire(PhaseEvent.BUDGET_ELAPSED, ev.time)
        else:
            self.block = ev.payload["block"]
            self._init_block(ev.time)

    # -- episodes --------------------------------------------------------

    def _make_job(self, ev: Event) -> _Job | None:
        p = ev.payload
        rt = self.runtime.get(p["miner"])
        if rt is None or not rt.profile.online or p["gen"] != rt.gen or p["block"] != self.block:
            return None
        mid = p["miner"]
        if rt.profile.role is Role.EXPLORER and mid in self.pool.searches:
            return _Job(ev, mid, self.pool.searches[mid], None)
        if rt.profile.role is Role.EXPLOITER:
            base = p["base"] or (rt.view[0] if rt.view else None)
            return _Job(ev, mid, None, base)
        return None

    def _compute(self, job: _Job):
        # Jobs of one tick touch disjoint state (their own search or their
        # own exploit stream), so they may run concurrently; everything
        # shared is updated later in _apply, in event order.
        if job.search is not None:
            return job.search.step()
        rng = self.runtime[job.miner].exploit_rng
        if job.base is None:
            cfg = Configuration(tuple(r[rng.randrange(len(r))] for r in self.task.space.ranges))
        else:
            cfg = exploit_step(job.base, self.task.space, rng)
        return cfg, self.reward_fn(cfg)

    def _apply(self, job: _Job, result, t: int) -> None:
        mid = job.miner
        rt = self.runtime[mid]
        if job.search is not None:
            rec = result
            label = self.labels[id(job.search)]
        else:
            cfg, reward = result
            rt.exploit_done += 1
            rt.exploit_best = max(rt.exploit_best, reward) if rt.exploit_done > 1 else reward
            rec = EpisodeRecord(rt.exploit_done, cfg, reward, rt.exploit_best)
            label = "exploit"
        self.art.episodes.append((self.block + 1, t - self.t0, rec.episode, mid, label,
                                  rec.reward, rec.best_so_far))
        bc = collect(self.pool, rec, mid)
        if bc is not None:
            for rid in bc.recipients:
                self.q.push(t + self.sc.latency, EventKind.BEST_BROADCAST, miner=rid,
                            config=bc.config, reward=bc.reward, block=self.block)
        self._schedule_next(mid, t)

    def _run_episodes(self, events: list[Event], t: int) -> None:
        jobs = [j for j in (self._make_job(ev) for ev in events) if j is not None]
        if self.executor is not None and len(jobs) > 1:
            results = list(self.executor.map(self._compute, jobs))
        else:
            results = [self._compute(j) for j in jobs]
        for job, res in zip(jobs, results):
            self._apply(job, res, t)

    # -- end of tick -----------------------------------------------------

    def _end_of_tick(self, t: int) -> None:
        phase = self.chain.phase.kind
        if phase is PhaseKind.TRAINING and self.t0 < t <= self.t0 + self.sc.budget.episodes:
            self._manage(t)
        elif phase is PhaseKind.VALIDATION and t == self.t0 + self.sc.budget.episodes + 1:
            self._close_block(t)
            if self.block + 1 < self.sc.blocks:
                self.q.push(t + 1, EventKind.PHASE_TICK, to=PhaseKind.INIT.value, block=self.block + 1)

    def _manage(self, t: int) -> None:
        pool, sc = self.pool, self.sc
        episode = t - self.t0
        self.best_curve.append(pool.best_reward)
        try:
            alerts = monitor(pool, episode, sc.monitor_threshold, sc.monitor_warmup)
        except TooFewMiners:
            alerts = []
        else:
            self.art.stddev.append((self.block + 1, episode, pool.stddev_series[-1][1],
                                    len(pool.high_reward)))
        for a in alerts:
            self.art.alerts.append({"tick": t, "block": self.block + 1, "episode": a.episode,
                                    "type": a.kind, "miner": a.miner, "stddev": a.value})

        for m in sorted(pool.with_role(Role.EXPLORER), key=lambda m: m.id):
            if m.online or m.id not in pool.searches:
                continue
            backups = [b for b in pool.with_role(Role.BACKUP) if b.online and b.strong]
            try:
                new = promote_backup(pool, m.id, backups)
            except NoBackupAvailable:
                rt = self.runtime[m.id]
                if not rt.no_backup_logged:
                    rt.no_backup_logged = True
                    self.art.alerts.append({"tick": t, "block": self.block + 1, "episode": episode,
                                            "type": "NoBackupAvailable", "miner": m.id})
                continue
            self.art.alerts.append({"tick": t, "block": self.block + 1, "episode": episode,
                                    "type": "PromoteBackup", "miner": new, "departed": m.id,
                                    "search": self.labels[id(pool.searches[new])]})
            self.runtime[new].planned = 0
            self._schedule_next(new, t)

        if pool.best_config is not None and pool.best_reward != self.last_committed_reward:
            claimed = min(1.0, pool.best_reward + sc.claim_inflation)
            sub = Submission(pool.best_config, claimed, POOL_ID)
            self.last_committed_reward = pool.best_reward
            self.q.push(t + sc.latency, EventKind.COMMIT, submission=sub,
                        finder=pool.best_miner, sent=t)

    # -- main loop -------------------------------------------------------

    def run(self) -> RunArtifacts:
        sc = self.sc
        for t, mid in sc.departures:
            self.q.push(t, EventKind.MINER_DEPARTURE, miner=mid)
        for t, profile in sc.joins:
            self.q.push(t, EventKind.MINER_JOIN, profile=profile)
        self.q.push(0, EventKind.PHASE_TICK, to=PhaseKind.INIT.value, block=0)
        handlers = {
            EventKind.MINER_DEPARTURE: self._on_departure,
            EventKind.MINER_JOIN: self._on_join,
            EventKind.BEST_BROADCAST: self._on_broadcast,
            EventKind.COMMIT: self._on_commit,
            EventKind.PHASE_TICK: self._on_phase,
        }
        try:
            while self.q:
                batch = self.q.pop_tick()
                t = batch[0].time
                if t >= sc.horizon:
                    break
                i = 0
                while i < len(batch):
                    if batch[i].kind is EventKind.EPISODE_DONE:
                        j = i
                        while j < len(batch) and batch[j].kind is EventKind.EPISODE_DONE:
                            j += 1
                        self._run_episodes(batch[i:j], t)
                        i = j
                    else:
                        handlers[batch[i].kind](batch[i])
                        i += 1
                self._end_of_tick(t)
        finally:
            if self.executor is not None:
                self.executor.shutdown()
        self._finish()
        return self.art

    def _finish(self) -> None:
        blocks = self.chain.blocks
        self.art.summary = {
            "intervals": self.sc.blocks,
            "episodes": self.sc.budget.episodes,
            "block_ticks": self.sc.block_ticks,
            "height": self.chain.height,
            "tip": self.chain.tip_digest.hex(),
            "results": self.block_results,
            "best_curves": self.best_curves,
            "transitions": [[t, a.value, b.value] for t, a, b in self.chain.transitions],
            "winner": blocks[-1].winner if blocks else None,
            "best_global": self.block_results[-1]["best_global"] if self.block_results else None,
        }


def run(scenario: Scenario, workers: int = 1) -> RunArtifacts:
    """Execute ``scenario`` to its horizon and return the artifacts."""
    return _Run(scenario, workers).run()


def inject_departure(scenario: Scenario, time: int, miner: str) -> None:
    known = {m.id for m in scenario.miners} | {p.id for _, p in scenario.joins} | {LEADER}
    if miner not in known:
        raise UnknownMiner(miner)
    if time < 0:
        raise InvalidScenario("departure time must be >= 0")
    scenario.departures.append((time, miner))


def inject_join(scenario: Scenario, time: int, profile: MinerProfile | str) -> None:
    if isinstance(profile, str):
        match = [m for m in scenario.miners if m.id == profile]
        if not match:
            raise UnknownMiner(profile)
        profile = match[0]
    if time < 0:
        raise InvalidScenario("join time must be >= 0")
    scenario.joins.append((time, profile))
