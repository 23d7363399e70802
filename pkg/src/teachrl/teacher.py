"""Curriculum strategies over a fixed sampled goal set.

The teacher periodically scores every candidate goal with the student's own
value estimates (policy confidence = mean Q of the policy's action over probe
states) and turns those scores into a sampling distribution. The default
strategy weights goals by the variance of their confidence score over a
sliding window of recent evaluations; several baseline strategies reuse the
same plumbing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .neural import AdamState, Mlp, adam_init

METHODS = (
    "uniform",
    "teach",
    "teach-smooth",
    "teach-argmax",
    "vds",
    "space",
    "procurl",
)

# Strategies that pick the single best-scoring goal instead of sampling.
ARGMAX_METHODS = ("teach-argmax", "procurl")

# Strategies whose scores need at least two recorded evaluations per goal.
HISTORY_METHODS = ("teach", "teach-smooth", "teach-argmax", "space")

_ZERO_TOTAL = 1e-12


@dataclass
class TeacherConfig:
    method: str = "teach"
    window: int = 10
    delta: int = 1
    n_goals: int = 1000
    n_probes: int = 64
    ensemble: int = 3

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown teacher method {self.method!r}")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.delta < 1:
            raise ValueError("interplay frequency delta must be >= 1")
        if self.n_goals < 1:
            raise ValueError("goal sample size must be >= 1")
        if self.n_probes < 1:
            raise ValueError("probe count must be >= 1")
        if self.method == "vds" and self.ensemble < 2:
            raise ValueError("vds needs an ensemble of >= 2 critics")


class ConfidenceHistory:
    """Ring buffer of the most recent confidence scores for one goal."""

    def __init__(self, capacity: int):
        if capacity < 2:
            raise ValueError("history capacity must be >= 2")
        self.capacity = capacity
        self._values = np.zeros(capacity)
        self._count = 0
        self._pos = 0

    def push(self, value: float) -> None:
        self._values[self._pos] = value
        self._pos = (self._pos + 1) % self.capacity
        self._count = min(self._count + 1, self.capacity)

    def window(self) -> np.ndarray:
        """Filled entries, oldest to newest."""
        if self._count < self.capacity:
            return self._values[: self._count].copy()
        return np.roll(self._values, -self._pos)[: self._count].copy()

    def __len__(self) -> int:
        return self._count


@dataclass
class CurriculumDistribution:
    goals: np.ndarray  # (N, goal_dim)
    weights: np.ndarray  # (N,)

    def __post_init__(self) -> None:
        if len(self.goals) != len(self.weights):
            raise ValueError("goals and weights must have equal length")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


def temporal_variance(history: ConfidenceHistory | np.ndarray) -> float:
    """Population variance of the filled window; 0 for fewer than two entries."""
    w = history.window() if isinstance(history, ConfidenceHistory) else np.asarray(history, float)
    if w.size < 2:
        return 0.0
    return float(np.mean((w - w.mean()) ** 2))


def learning_progress(deltas: np.ndarray) -> np.ndarray:
    """Normalize per-goal variances into weights; uniform when all are ~zero."""
    d = np.asarray(deltas, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("variances must be nonnegative")
    total = float(d.sum())
    if total <= _ZERO_TOTAL:
        return np.full(d.size, 1.0 / d.size)
    return d / total


def sample_goal_index(weights: np.ndarray, rng: np.random.Generator, argmax: bool = False) -> int:
    """Index drawn proportionally to weights, or the max-weight index (ties -> lowest)."""
    w = np.asarray(weights, dtype=np.float64)
    if argmax:
        return int(np.argmax(w))
    c = np.cumsum(w)
    u = rng.random() * c[-1]
    return min(int(np.searchsorted(c, u, side="right")), w.size - 1)


def sample_goal(
    dist: CurriculumDistribution, rng: np.random.Generator, argmax: bool = False
) -> np.ndarray:
    return dist.goals[sample_goal_index(dist.weights, rng, argmax=argmax)]


def vds_score(per_critic_scores: np.ndarray) -> float:
    """Population standard deviation of one goal's score across an ensemble."""
    s = np.asarray(per_critic_scores, dtype=np.float64)
    if s.size < 2:
        raise ValueError("ensemble disagreement needs >= 2 critic scores")
    return float(np.sqrt(np.mean((s - s.mean()) ** 2)))


def procurl_score(c: float, c_min: float, c_max: float) -> float:
    """Geometric mean of distance-from-worst and distance-from-best confidences."""
    return math.sqrt(max(c - c_min, 0.0) * max(c_max - c, 0.0))


def space_score(history: ConfidenceHistory | np.ndarray) -> float:
    """Absolute one-step change of the confidence score; 0 with fewer than 2 entries."""
    w = history.window() if isinstance(history, ConfidenceHistory) else np.asarray(history, float)
    if w.size < 2:
        return 0.0
    return float(abs(w[-1] - w[-2]))


class Teacher:
    """Goal proposer: periodically re-scores goals and samples episode targets.

    Histories for all N goals are kept in one (N, window) ring; evaluations are
    synchronized across goals so a single fill counter and write position
    serve every row.
    """

    def __init__(
        self,
        cfg: TeacherConfig,
        goals: np.ndarray,
        horizon: int,
        start_state: np.ndarray,
        rng: np.random.Generator,
        critic_factory: Callable[[np.random.Generator], Mlp] | None = None,
        ensemble_lr: float = 1e-3,
    ):
        self.cfg = cfg
        self.goals = np.asarray(goals, dtype=np.float64)
        if len(self.goals) != cfg.n_goals:
            raise ValueError(f"got {len(self.goals)} goals, config says {cfg.n_goals}")
        self.horizon = horizon
        self.start_state = np.asarray(start_state, dtype=np.float64)
        self.rng = rng
        n = len(self.goals)
        self.hist = np.zeros((n, cfg.window))
        self.hist_count = 0
        self.hist_pos = 0
        self.weights = np.full(n, 1.0 / n)
        self.ticks = 0
        self.ensemble_lr = ensemble_lr
        self.ensemble: list[Mlp] = []
        self.ensemble_opts: list[AdamState] = []
        if cfg.method == "vds":
            if critic_factory is None:
                raise ValueError("vds teacher needs a critic factory for its ensemble")
            for _ in range(cfg.ensemble):
                critic = critic_factory(self.rng)
                self.ensemble.append(critic)
                self.ensemble_opts.append(adam_init(critic))

    # -- history access ----------------------------------------------------

    def history(self, goal_index: int) -> ConfidenceHistory:
        """Per-goal view of the shared ring, as a standalone history object."""
        h = ConfidenceHistory(self.cfg.window)
        h._values = self.hist[goal_index].copy()
        h._count = self.hist_count
        h._pos = self.hist_pos
        return h

    def _window_matrix(self) -> np.ndarray:
        """(N, filled) matrix of history entries, oldest to newest."""
        if self.hist_count < self.cfg.window:
            return self.hist[:, : self.hist_count]
        return np.roll(self.hist, -self.hist_pos, axis=1)

    def _push(self, confidences: np.ndarray) -> None:
        self.hist[:, self.hist_pos] = confidences
        self.hist_pos = (self.hist_pos + 1) % self.cfg.window
        self.hist_count = min(self.hist_count + 1, self.cfg.window)

    # -- scoring -----------------------------------------------------------

    def _draw_probes(self, buffer) -> np.ndarray:
        m = self.cfg.n_probes
        if buffer is not None and buffer.n_transitions >= m:
            return buffer.sample_states(m, self.rng)
        return np.tile(self.start_state, (m, 1))

    def _confidences(self, agent, probes: np.ndarray, critic: Mlp | None = None) -> np.ndarray:
        """Mean Q(s, g, pi(s, g)) over probe states, for every goal."""
        n, m = len(self.goals), len(probes)
        states = np.repeat(probes[None, :, :], n, axis=0).reshape(n * m, -1)
        goals = np.repeat(self.goals, m, axis=0)
        use_target = self.cfg.method == "teach-smooth" and critic is None
        out = np.empty(n * m)
        chunk = 16384
        for lo in range(0, n * m, chunk):
            hi = min(lo + chunk, n * m)
            out[lo:hi] = agent.policy_value(
                states[lo:hi], goals[lo:hi], use_target=use_target, critic=critic
            )
        return out.reshape(n, m).mean(axis=1)

    def _recompute_weights(self, agent, probes: np.ndarray, conf: np.ndarray) -> np.ndarray:
        method = self.cfg.method
        n = len(self.goals)
        if method in HISTORY_METHODS and self.hist_count < 2:
            return np.full(n, 1.0 / n)
        if method in ("teach", "teach-smooth", "teach-argmax"):
            w = self._window_matrix()
            deltas = np.mean((w - w.mean(axis=1, keepdims=True)) ** 2, axis=1)
            return learning_progress(deltas)
        if method == "space":
            w = self._window_matrix()
            return learning_progress(np.abs(w[:, -1] - w[:, -2]))
        if method == "procurl":
            c_min, c_max = float(conf.min()), float(conf.max())
            scores = np.sqrt(
                np.maximum(conf - c_min, 0.0) * np.maximum(c_max - conf, 0.0)
            )
            return learning_progress(scores)
        if method == "vds":
            per_critic = np.stack(
                [self._confidences(agent, probes, critic=c) for c in self.ensemble]
            )
            scores = np.sqrt(np.mean((per_critic - per_critic.mean(axis=0)) ** 2, axis=0))
            return learning_progress(scores)
        raise AssertionError(f"unhandled method {method!r}")

    # -- protocol ----------------------------------------------------------

    def tick(self, agent, buffer, t: int) -> np.ndarray:
        """Re-score goals when t hits the interplay boundary; otherwise cached weights."""
        if t % (self.cfg.delta * self.horizon) != 0:
            return self.weights
        self.ticks += 1
        if self.cfg.method == "uniform":
            return self.weights
        probes = self._draw_probes(buffer)
        conf = self._confidences(agent, probes)
        self._push(conf)
        self.weights = self._recompute_weights(agent, probes, conf)
        return self.weights

    def distribution(self) -> CurriculumDistribution:
        return CurriculumDistribution(goals=self.goals, weights=self.weights.copy())

    def sample_goal(self, rng: np.random.Generator | None = None) -> np.ndarray:
        rng = rng if rng is not None else self.rng
        argmax = self.cfg.method in ARGMAX_METHODS
        return self.goals[sample_goal_index(self.weights, rng, argmax=argmax)]

    def observe_batch(self, agent, batch) -> None:
        """Train the disagreement ensemble on the same batch the student used."""
        for critic, opt in zip(self.ensemble, self.ensemble_opts):
            agent.regress_critic(critic, opt, batch, self.ensemble_lr)
