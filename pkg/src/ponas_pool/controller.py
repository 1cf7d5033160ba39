"""Per-miner architecture search: a categorical policy trained with REINFORCE.

Each hyperparameter gets an independent softmax over the values of the
miner's subspace. One episode samples a configuration, scores it through the
hardware gate and the reward oracle, nudges the logits along the
log-likelihood gradient scaled by ``reward - baseline``, and records the
running best. Infeasible designs still update the policy, with reward 0.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable

from .hw import HardwareConstraints
from .oracle import LandscapeParams, gated_reward
from .space import Configuration, Subspace

DEFAULT_LEARNING_RATE = 0.1
BASELINE_DECAY = 0.9

RewardFn = Callable[[Configuration], float]


@dataclass(frozen=True)
class SearchBudget:
    episodes: int = 2000
    epochs_per_episode: int = 30

    def __post_init__(self) -> None:
        if self.episodes < 1 or self.epochs_per_episode < 1:
            raise ValueError(f"budget values must be >= 1: {self}")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    config: Configuration
    reward: float
    best_so_far: float


def softmax(logits: list[float]) -> list[float]:
    top = max(logits)
    exps = [math.exp(v - top) for v in logits]
    total = sum(exps)
    return [e / total for e in exps]


@dataclass
class Policy:
    logits: list[list[float]]
    learning_rate: float = DEFAULT_LEARNING_RATE
    baseline: float = 0.0
    baseline_decay: float = BASELINE_DECAY

    @classmethod
    def uniform(cls, sub: Subspace, learning_rate: float = DEFAULT_LEARNING_RATE) -> "Policy":
        return cls([[0.0] * len(r) for r in sub.ranges], learning_rate)

    def probabilities(self) -> list[list[float]]:
        return [softmax(row) for row in self.logits]

    def copy(self) -> "Policy":
        return Policy([list(row) for row in self.logits], self.learning_rate, self.baseline,
                      self.baseline_decay)


def _draw(probs: list[float], u: float) -> int:
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def sample_indices(policy: Policy, rng: random.Random,
                   probs: list[list[float]] | None = None) -> list[int]:
    if probs is None:
        probs = policy.probabilities()
    return [_draw(row, rng.random()) for row in probs]


def sample(policy: Policy, sub: Subspace, rng: random.Random) -> Configuration:
    """Draw one value per hyperparameter from the policy's softmax."""
    if len(policy.logits) != len(sub.ranges):
        raise ValueError("policy arity does not match subspace")
    idx = sample_indices(policy, rng)
    return Configuration(tuple(r[i] for r, i in zip(sub.ranges, idx)))


def log_prob_gradient(policy: Policy, indices: list[int]) -> list[list[float]]:
    """d/dlogits of log pi(indices): one-hot minus softmax, per hyperparameter."""
    grads = []
    for row, chosen in zip(policy.logits, indices):
        probs = softmax(row)
        grads.append([(1.0 if v == chosen else 0.0) - p for v, p in enumerate(probs)])
    return grads


def _ascend(logits: list[list[float]], probs: list[list[float]], indices: list[int],
            step: float) -> None:
    for row, pr, chosen in zip(logits, probs, indices):
        for v, p in enumerate(pr):
            row[v] -= step * p
        row[chosen] += step


def _reinforce(policy: Policy, indices: list[int], reward: float,
               probs: list[list[float]]) -> None:
    advantage = reward - policy.baseline
    if advantage != 0.0:
        _ascend(policy.logits, probs, indices, policy.learning_rate * advantage)
    policy.baseline = policy.baseline_decay * policy.baseline + (1.0 - policy.baseline_decay) * reward


def update_indices(policy: Policy, indices: list[int], reward: float) -> Policy:
    new = policy.copy()
    _reinforce(new, indices, reward, policy.probabilities())
    return new


def update(policy: Policy, sub: Subspace, c: Configuration, reward: float) -> Policy:
    """REINFORCE step for an already gated ``reward``; returns a new policy.

    The chosen value's logit moves by ``lr * A * (1 - p_chosen)`` and every
    other value's by ``-lr * A * p_v``, where ``A = reward - baseline``. The
    baseline then tracks the reward with decay 0.9.
    """
    indices = [r.index(v) for r, v in zip(sub.ranges, c.values)]
    return update_indices(policy, indices, reward)


@dataclass
class Search:
    """Resumable search state for one subspace.

    Owned by exactly one miner at a time; a backup miner takes over the whole
    object (policy, random stream and best) when the owner departs.
    """

    sub: Subspace
    rng: random.Random
    policy: Policy
    reward_fn: RewardFn
    episodes_done: int = 0
    best: float = 0.0
    best_config: Configuration | None = None
    records: list[EpisodeRecord] = field(default_factory=list)
    keep_records: bool = True

    @classmethod
    def start(cls, sub: Subspace, reward_fn: RewardFn, seed: int,
              learning_rate: float = DEFAULT_LEARNING_RATE, keep_records: bool = True) -> "Search":
        return cls(sub, random.Random(seed), Policy.uniform(sub, learning_rate), reward_fn,
                   keep_records=keep_records)

    def step(self) -> EpisodeRecord:
        probs = self.policy.probabilities()
        idx = sample_indices(self.policy, self.rng, probs)
        config = Configuration(tuple(r[i] for r, i in zip(self.sub.ranges, idx)))
        reward = self.reward_fn(config)
        _reinforce(self.policy, idx, reward, probs)
        self.episodes_done += 1
        if self.best_config is None or reward > self.best:
            self.best, self.best_config = reward, config
        rec = EpisodeRecord(self.episodes_done, config, reward, self.best)
        if self.keep_records:
            self.records.append(rec)
        return rec


def make_reward_fn(p: LandscapeParams, hc: HardwareConstraints, epochs: int) -> RewardFn:
    cache: dict[Configuration, float] = {}

    def reward(c: Configuration) -> float:
        r = cache.get(c)
        if r is None:
            r = cache[c] = gated_reward(c, p, hc, epochs)
        return r

    return reward


def run_search(
    sub: Subspace,
    budget: SearchBudget,
    hc: HardwareConstraints,
    p: LandscapeParams,
    rng: random.Random | int,
    learning_rate: float = DEFAULT_LEARNING_RATE,
) -> list[EpisodeRecord]:
    """Run ``budget.episodes`` episodes of search over ``sub``."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    search = Search(sub, rng, Policy.uniform(sub, learning_rate),
                    make_reward_fn(p, hc, budget.epochs_per_episode))
    for _ in range(budget.episodes):
        search.step()
    return search.records
