"""Three-phase block interval: task selection, commitments, validation.

Each block interval runs Init -> Training -> Validation. Miners (here, the
pool acting as one miner) must commit to a result during Training. At
Validation the full node drops uncommitted submissions, sorts the rest by
claimed accuracy and re-evaluates them in that order; the first claim that
holds up wins the block.
"""

from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .hw import HardwareConstraints
from .space import Configuration, SearchSpace

DIGEST_SIZE = 32
GENESIS_DIGEST = bytes(DIGEST_SIZE)


class EmptyTaskList(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    id: str
    difficulty: float
    task_reward: float
    space: SearchSpace
    constraints: HardwareConstraints = HardwareConstraints()

    def __post_init__(self) -> None:
        if self.difficulty <= 0 or self.task_reward <= 0:
            raise ValueError(f"task {self.id!r} needs positive difficulty and reward")

    @property
    def ranking_score(self) -> float:
        return self.difficulty / self.task_reward


def rank_tasks(tasks: Sequence[Task]) -> list[Task]:
    """Most attractive first: ascending difficulty / reward, then id."""
    if not tasks:
        raise EmptyTaskList("no tasks to rank")
    return sorted(tasks, key=lambda t: (t.ranking_score, t.id))


def _pack_config(c: Configuration) -> bytes:
    return struct.pack(">I", len(c)) + b"".join(struct.pack(">q", v) for v in c.values)


def format_claim(claimed: float) -> str:
    return f"{claimed:.6f}"


def commitment_digest(config: Configuration, claimed: float, miner: str) -> bytes:
    """SHA-256 over the canonical encoding of a result.

    Encoding: ``b"ponas-commit-v1\\n"``, the value count as a big-endian
    uint32, each value as a big-endian int64, the claim formatted with six
    decimals in ASCII, ``b"\\n"``, then the miner id in UTF-8.
    """
    payload = (
        b"ponas-commit-v1\n"
        + _pack_config(config)
        + format_claim(claimed).encode("ascii")
        + b"\n"
        + miner.encode("utf-8")
    )
    return hashlib.sha256(payload).digest()


class PhaseKind(str, enum.Enum):
    INIT = "Init"
    TRAINING = "Training"
    VALIDATION = "Validation"


class PhaseEvent(str, enum.Enum):
    TASK_SELECTED = "task_selected"
    BUDGET_ELAPSED = "budget_elapsed"
    BLOCK_CONFIRMED = "block_confirmed"
    EMPTY_ROUND = "empty_round"


_TRANSITIONS = {
    (PhaseKind.INIT, PhaseEvent.TASK_SELECTED): PhaseKind.TRAINING,
    (PhaseKind.TRAINING, PhaseEvent.BUDGET_ELAPSED): PhaseKind.VALIDATION,
    (PhaseKind.VALIDATION, PhaseEvent.BLOCK_CONFIRMED): PhaseKind.INIT,
    (PhaseKind.VALIDATION, PhaseEvent.EMPTY_ROUND): PhaseKind.INIT,
}


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind = PhaseKind.INIT
    episode_budget: int = 2000


def advance(phase: Phase, event: PhaseEvent | str) -> Phase:
    """Next phase; events that do not apply to the current phase are ignored."""
    nxt = _TRANSITIONS.get((phase.kind, PhaseEvent(event)))
    return Phase(nxt, phase.episode_budget) if nxt else phase


@dataclass(frozen=True)
class Commitment:
    digest: bytes
    miner: str
    phase_stamp: PhaseKind | None = None

    def __post_init__(self) -> None:
        if len(self.digest) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(self.digest)}")


@dataclass(frozen=True)
class Submission:
    config: Configuration
    claimed: float
    miner: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.claimed <= 1.0:
            raise ValueError(f"claimed accuracy must be in [0, 1], got {self.claimed}")

    @property
    def digest(self) -> bytes:
        return commitment_digest(self.config, self.claimed, self.miner)


class CommitmentBook:
    """Commitments a full node accepted during the current Training phase."""

    def __init__(self) -> None:
        self._accepted: dict[tuple[bytes, str], Commitment] = {}

    def commit(self, c: Commitment, current_phase: PhaseKind) -> bool:
        """Stamp ``c`` with the receiver's phase; keep it only during Training."""
        if current_phase is not PhaseKind.TRAINING:
            return False
        key = (c.digest, c.miner)
        if key not in self._accepted:
            self._accepted[key] = Commitment(c.digest, c.miner, current_phase)
        return True

    def __iter__(self):
        return iter(self._accepted.values())

    def __len__(self) -> int:
        return len(self._accepted)

    def clear(self) -> None:
        self._accepted.clear()


def commit(book: CommitmentBook, c: Commitment, current_phase: PhaseKind) -> bool:
    return book.commit(c, current_phase)


@dataclass
class RoundOutcome:
    winner: Submission | None
    validated_reward: float | None
    evaluator_calls: int
    excluded: list[Submission] = field(default_factory=list)
    evaluated: list[tuple[Submission, float]] = field(default_factory=list)


def validate_round(
    subs: Iterable[Submission],
    commitments: Iterable[Commitment],
    evaluator: Callable[[Configuration], float],
) -> RoundOutcome:
    """Re-evaluate committed submissions in decreasing order of claim.

    The first submission whose re-evaluated reward is at least its claim
    wins. Ties in the claim go to the smaller miner id.
    """
    committed = {(c.digest, c.miner) for c in commitments}
    eligible, excluded = [], []
    for s in subs:
        (eligible if (s.digest, s.miner) in committed else excluded).append(s)
    eligible.sort(key=lambda s: (-s.claimed, s.miner))
    outcome = RoundOutcome(None, None, 0, excluded)
    for s in eligible:
        value = evaluator(s.config)
        outcome.evaluator_calls += 1
        outcome.evaluated.append((s, value))
        if value >= s.claimed:
            outcome.winner, outcome.validated_reward = s, value
            break
    return outcome


@dataclass(frozen=True)
class Block:
    height: int
    task: str
    winner: str
    winning_config: Configuration
    claimed: float
    validated_reward: float
    prev_digest: bytes
    commit_digest: bytes

    @property
    def digest(self) -> bytes:
        payload = (
            b"ponas-block-v1\n"
            + struct.pack(">Q", self.height)
            + self.prev_digest
            + self.task.encode("utf-8") + b"\0"
            + self.winner.encode("utf-8") + b"\0"
            + _pack_config(self.winning_config)
            + format_claim(self.claimed).encode("ascii") + b"\n"
            + format_claim(self.validated_reward).encode("ascii") + b"\n"
            + self.commit_digest
        )
        return hashlib.sha256(payload).digest()


@dataclass
class Chain:
    """Single-owner chain state with its phase clock and transition log."""

    episode_budget: int = 2000
    blocks: list[Block] = field(default_factory=list)
    phase: Phase = field(init=False)
    book: CommitmentBook = field(default_factory=CommitmentBook)
    transitions: list[tuple[int, PhaseKind, PhaseKind]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.phase = Phase(PhaseKind.INIT, self.episode_budget)

    @property
    def height(self) -> int:
        return len(self.blocks)

    @property
    def tip_digest(self) -> bytes:
        return self.blocks[-1].digest if self.blocks else GENESIS_DIGEST

    def fire(self, event: PhaseEvent | str, tick: int) -> Phase:
        before = self.phase
        self.phase = advance(before, event)
        if self.phase.kind is not before.kind:
            self.transitions.append((tick, before.kind, self.phase.kind))
            if self.phase.kind is PhaseKind.TRAINING:
                self.book.clear()
        return self.phase

    def receive_commitment(self, c: Commitment) -> bool:
        return self.book.commit(c, self.phase.kind)

    def close_round(
        self, task: str, subs: Sequence[Submission], evaluator: Callable[[Configuration], float],
        tick: int,
    ) -> tuple[RoundOutcome, Block | None]:
        """Validate the round and, if someone wins, append the block."""
        if self.phase.kind is not PhaseKind.VALIDATION:
            raise RuntimeError(f"cannot validate during {self.phase.kind.value}")
        outcome = validate_round(subs, self.book, evaluator)
        block = None
        if outcome.winner is not None:
            w = outcome.winner
            block = Block(self.height + 1, task, w.miner, w.config, w.claimed,
                          outcome.validated_reward, self.tip_digest, w.digest)
            self.blocks.append(block)
            self.fire(PhaseEvent.BLOCK_CONFIRMED, tick)
        else:
            self.fire(PhaseEvent.EMPTY_ROUND, tick)
        return outcome, block
