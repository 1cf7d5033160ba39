"""Pool manager: assignment, result collection, monitoring, backups, payouts.

Strong miners explore one subspace each. Weak miners never hold a subspace
under the collaborative policy; they hill-climb around the best
configuration the pool has confirmed so far. The manager watches the spread
of the high-reward miners' results and hands a departed explorer's search to
an idle backup miner.
"""

from __future__ import annotations

import bisect
import enum
import logging
import math
import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .controller import EpisodeRecord, Search
from .space import Configuration, SearchSpace, Subspace, partition

log = logging.getLogger(__name__)

MANAGER_ID = "pool-manager"
DEFAULT_MONITOR_THRESHOLD = 0.05
DEFAULT_MONITOR_WARMUP = 500


class PoolError(Exception):
    pass


class NoStrongMiners(PoolError):
    pass


class UnknownMiner(PoolError, KeyError):
    pass


class TooFewMiners(PoolError):
    pass


class NoBackupAvailable(PoolError):
    pass


class NoContribution(PoolError):
    pass


class Role(str, enum.Enum):
    EXPLORER = "Explorer"
    EXPLOITER = "Exploiter"
    BACKUP = "Backup"


@dataclass
class MinerProfile:
    id: str
    strength: float = 1.0
    role: Role = Role.EXPLORER
    online: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.strength <= 1.0:
            raise ValueError(f"strength of {self.id!r} must be in (0, 1], got {self.strength}")

    @property
    def strong(self) -> bool:
        return self.strength >= 1.0

    def episodes_per_phase(self, episodes: int) -> int:
        """floor(strength * episodes), computed exactly on the decimal strength."""
        return math.floor(Fraction(str(self.strength)) * episodes)


@dataclass(frozen=True)
class Alert:
    episode: int
    kind: str
    miner: str | None
    value: float


@dataclass(frozen=True)
class Broadcast:
    config: Configuration
    reward: float
    source: str
    recipients: tuple[str, ...]


@dataclass
class PoolState:
    miners: dict[str, MinerProfile]
    assignments: dict[str, Subspace] = field(default_factory=dict)
    searches: dict[str, Search] = field(default_factory=dict)
    best_config: Configuration | None = None
    best_reward: float = 0.0
    best_miner: str | None = None
    per_miner_best: dict[str, list[float]] = field(default_factory=dict)
    contribution: dict[str, int] = field(default_factory=dict)
    stddev_series: list[tuple[int, float]] = field(default_factory=list)
    high_reward: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for mid in self.miners:
            self.per_miner_best.setdefault(mid, [])
            self.contribution.setdefault(mid, 0)

    @property
    def best_global(self) -> tuple[Configuration | None, float]:
        return self.best_config, self.best_reward

    def current_best(self, miner: str) -> float:
        series = self.per_miner_best.get(miner)
        return series[-1] if series else 0.0

    def with_role(self, role: Role) -> list[MinerProfile]:
        return [m for m in self.miners.values() if m.role is role]

    def add_miner(self, profile: MinerProfile) -> None:
        self.miners[profile.id] = profile
        self.per_miner_best.setdefault(profile.id, [])
        self.contribution.setdefault(profile.id, 0)


def assign(
    space: SearchSpace,
    miners: Sequence[MinerProfile],
    rng: random.Random,
    subspaces: Sequence[Subspace] | None = None,
) -> PoolState:
    """Collaborative assignment: subspaces go to strong miners only.

    Strong miners flagged as ``Backup`` are held in reserve. Every other
    strong miner becomes an Explorer of one subspace from
    ``partition(space, n_explorers, rng)`` (or from ``subspaces`` when
    given); weak miners become Exploiters.
    """
    if not any(m.strong for m in miners):
        raise NoStrongMiners("at least one miner with strength 1.0 is required")
    explorers = [m for m in miners if m.strong and m.role is not Role.BACKUP]
    if not explorers:
        raise NoStrongMiners("every strong miner is reserved as a backup")
    subs = _subspaces_for(space, len(explorers), rng, subspaces)
    state = PoolState({m.id: m for m in miners})
    for m in miners:
        if not m.strong:
            m.role = Role.EXPLOITER
    for m, sub in zip(explorers, subs):
        m.role = Role.EXPLORER
        state.assignments[m.id] = sub
    return state


def assign_naive(
    space: SearchSpace,
    miners: Sequence[MinerProfile],
    rng: random.Random,
    subspaces: Sequence[Subspace] | None = None,
) -> PoolState:
    """Strength-blind assignment, the baseline the collaborative policy beats.

    The same subspaces as :func:`assign` are produced (one per non-reserved
    strong miner) but handed out in miner-list order, weak miners included.
    Miners left without a subspace idle as backups.
    """
    if not any(m.strong for m in miners):
        raise NoStrongMiners("at least one miner with strength 1.0 is required")
    n = sum(1 for m in miners if m.strong and m.role is not Role.BACKUP)
    subs = _subspaces_for(space, n, rng, subspaces)
    state = PoolState({m.id: m for m in miners})
    queue = list(subs)
    for m in miners:
        if m.role is not Role.BACKUP and queue:
            m.role = Role.EXPLORER
            state.assignments[m.id] = queue.pop(0)
        else:
            m.role = Role.BACKUP
    return state


def _subspaces_for(space, n, rng, subspaces):
    if subspaces is None:
        return partition(space, n, rng)
    if len(subspaces) < n:
        raise ValueError(f"{n} explorers but only {len(subspaces)} subspaces supplied")
    return list(subspaces[:n])


def _neighbours(values: tuple[int, ...], v: int) -> list[int]:
    i = bisect.bisect_left(values, v)
    out = []
    if i > 0:
        out.append(values[i - 1])
    j = i + 1 if i < len(values) and values[i] == v else i
    if j < len(values):
        out.append(values[j])
    return out


def exploit_step(best: Configuration, full_space: SearchSpace, rng: random.Random) -> Configuration:
    """Move one hyperparameter of ``best`` to an adjacent value of its full range."""
    options = [(i, _neighbours(r, v)) for i, (r, v) in enumerate(zip(full_space.ranges, best.values))]
    options = [(i, nb) for i, nb in options if nb]
    if not options:
        return best
    i, nb = options[rng.randrange(len(options))]
    return best.replace(i, nb[rng.randrange(len(nb))])


def collect(state: PoolState, record: EpisodeRecord, miner: str) -> Broadcast | None:
    """Fold one episode result into the pool state.

    Only a strictly better reward replaces the global best, so among equal
    rewards the first one received wins. An improvement is returned as a
    broadcast addressed to every online Exploiter.
    """
    if miner not in state.miners:
        raise UnknownMiner(miner)
    series = state.per_miner_best[miner]
    series.append(max(series[-1], record.reward) if series else record.reward)
    state.contribution[miner] += 1
    if state.best_config is not None and record.reward <= state.best_reward:
        return None
    state.best_config, state.best_reward, state.best_miner = record.config, record.reward, miner
    recipients = tuple(
        m.id for m in state.miners.values() if m.role is Role.EXPLOITER and m.online
    )
    return Broadcast(record.config, record.reward, miner, recipients)


def _monitor_value(state: PoolState, miner: str) -> float:
    # A departed explorer no longer delivers anything until its search is
    # handed over, so the manager counts its performance as zero.
    return state.current_best(miner) if state.miners[miner].online else 0.0


def monitor(
    state: PoolState,
    episode: int,
    threshold: float = DEFAULT_MONITOR_THRESHOLD,
    warmup: int = DEFAULT_MONITOR_WARMUP,
) -> list[Alert]:
    """Record the spread of the high-reward explorers and alert on a rise.

    High-reward explorers are those whose current best is at least the
    median over all explorers. The group is frozen while one of its members
    is offline, so a departure shows up as a jump in the spread rather than
    as a silent reclassification. ``PrepareBackup`` fires when the
    population standard deviation crosses above ``threshold`` at or after
    ``warmup``.
    """
    explorers = sorted(m.id for m in state.with_role(Role.EXPLORER))
    if len(explorers) < 2:
        raise TooFewMiners(f"need at least 2 explorers to monitor, have {len(explorers)}")
    group_intact = all(
        mid in state.miners and state.miners[mid].online and state.miners[mid].role is Role.EXPLORER
        for mid in state.high_reward
    )
    if not state.high_reward or group_intact:
        values = {mid: _monitor_value(state, mid) for mid in explorers}
        med = statistics.median(values.values())
        state.high_reward = tuple(mid for mid in explorers if values[mid] >= med)
    high = [_monitor_value(state, mid) for mid in state.high_reward]
    sd = statistics.pstdev(high) if len(high) > 1 else 0.0

    prev = state.stddev_series[-1] if state.stddev_series else None
    state.stddev_series.append((episode, sd))
    alerts = []
    if episode >= warmup and sd > threshold:
        rising = prev is None or prev[0] < warmup or prev[1] <= threshold
        if rising:
            departed = [mid for mid in state.high_reward if not state.miners[mid].online]
            for mid in departed or [None]:
                alerts.append(Alert(episode, "PrepareBackup", mid, sd))
                log.info("episode=%d alert=PrepareBackup miner=%s stddev=%.6f", episode, mid, sd)
    return alerts


def promote_backup(state: PoolState, departed: str, backups: Iterable[MinerProfile]) -> str:
    """Hand a departed explorer's subspace, policy and best to a backup.

    The online candidate with the lowest current best takes over, ties going
    to the smaller id. Returns the promoted miner's id.
    """
    if departed not in state.miners:
        raise UnknownMiner(departed)
    if state.miners[departed].role is not Role.EXPLORER:
        raise PoolError(f"{departed!r} is not an explorer")
    candidates = [b for b in backups if b.online and b.id != departed]
    if not candidates:
        raise NoBackupAvailable(f"no online backup to take over from {departed!r}")
    chosen = min(candidates, key=lambda b: (state.current_best(b.id), b.id))
    if chosen.id not in state.miners:
        state.add_miner(chosen)

    state.assignments[chosen.id] = state.assignments.pop(departed)
    if departed in state.searches:
        state.searches[chosen.id] = state.searches.pop(departed)
    inherited = state.current_best(departed)
    series = state.per_miner_best[chosen.id]
    series.append(max(inherited, series[-1]) if series else inherited)

    state.miners[departed].role = Role.BACKUP
    state.miners[chosen.id].role = Role.EXPLORER
    state.high_reward = ()
    log.info("backup %s takes over from %s (best %.6f)", chosen.id, departed, inherited)
    return chosen.id


@dataclass(frozen=True)
class RewardShare:
    amounts: dict[str, float]
    block_reward: float

    @property
    def fractions(self) -> dict[str, float]:
        return {k: v / self.block_reward for k, v in self.amounts.items()}


def distribute(state: PoolState, block_reward: float, fee_rate: float) -> RewardShare:
    """Split a block reward: a fee to the manager, the rest by episodes done."""
    return distribute_contributions(state.contribution, block_reward, fee_rate)


def distribute_contributions(
    contribution: dict[str, int], block_reward: float, fee_rate: float
) -> RewardShare:
    if not 0.0 <= fee_rate < 1.0:
        raise ValueError(f"fee_rate must be in [0, 1), got {fee_rate}")
    total = sum(contribution.values())
    if total <= 0:
        raise NoContribution("no episodes were completed")
    fee = fee_rate * block_reward
    pot = block_reward - fee
    amounts = {MANAGER_ID: fee}
    for mid in sorted(contribution):
        if contribution[mid] > 0:
            amounts[mid] = pot * contribution[mid] / total
    return RewardShare(amounts, block_reward)
