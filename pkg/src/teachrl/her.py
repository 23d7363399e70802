"""Episode-structured replay with hindsight goal relabeling.

Episodes are stored whole (fixed length H, one desired goal each). Sampling
relabels each transition independently with probability k/(k+1), replacing the
desired goal by the achieved goal of a uniformly chosen step at the same or a
later index in the episode, and recomputing the sparse reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .goal_mdp import GoalConditionedTransition, reward_batch


@dataclass
class EpisodeRecord:
    """One rollout: H transitions sharing a single desired goal."""

    states: np.ndarray  # (H, state_dim)
    actions: np.ndarray  # (H, action_dim)
    rewards: np.ndarray  # (H,)
    next_states: np.ndarray  # (H, state_dim)
    achieved: np.ndarray  # (H, goal_dim)
    desired: np.ndarray  # (goal_dim,)

    def __post_init__(self) -> None:
        h = len(self.states)
        for name in ("actions", "rewards", "next_states", "achieved"):
            if len(getattr(self, name)) != h:
                raise ValueError(f"episode field {name} has length != {h}")

    def __len__(self) -> int:
        return len(self.states)

    @classmethod
    def from_transitions(cls, transitions: list[GoalConditionedTransition]) -> "EpisodeRecord":
        if not transitions:
            raise ValueError("empty transition list")
        desired = np.asarray(transitions[0].desired_goal, dtype=np.float64)
        for tr in transitions:
            if not np.array_equal(tr.desired_goal, desired):
                raise ValueError("transitions in an episode must share one desired goal")
        return cls(
            states=np.asarray([t.state for t in transitions], dtype=np.float64),
            actions=np.asarray([t.action for t in transitions], dtype=np.float64),
            rewards=np.asarray([t.reward for t in transitions], dtype=np.float64),
            next_states=np.asarray([t.next_state for t in transitions], dtype=np.float64),
            achieved=np.asarray([t.achieved_goal for t in transitions], dtype=np.float64),
            desired=desired,
        )


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    achieved: np.ndarray
    goals: np.ndarray

    def __len__(self) -> int:
        return len(self.states)


class ReplayBuffer:
    """Ring of episodes with 'future'-strategy hindsight relabeling on sampling."""

    def __init__(
        self,
        capacity: int,
        horizon: int,
        her_k: int,
        epsilon: float,
        rng: np.random.Generator,
    ):
        if capacity < 1:
            raise ValueError("capacity must be >= 1 episodes")
        if her_k < 0:
            raise ValueError("her_k must be >= 0")
        self.capacity = capacity
        self.horizon = horizon
        self.her_k = her_k
        self.epsilon = epsilon
        self.rng = rng
        self._size = 0
        self._pos = 0
        self._states: np.ndarray | None = None
        self._actions: np.ndarray | None = None
        self._rewards: np.ndarray | None = None
        self._next_states: np.ndarray | None = None
        self._achieved: np.ndarray | None = None
        self._desired: np.ndarray | None = None

    def __len__(self) -> int:
        return self._size

    @property
    def n_transitions(self) -> int:
        return self._size * self.horizon

    def _allocate(self, ep: EpisodeRecord) -> None:
        cap, h = self.capacity, self.horizon
        self._states = np.zeros((cap, h, ep.states.shape[1]))
        self._actions = np.zeros((cap, h, ep.actions.shape[1]))
        self._rewards = np.zeros((cap, h))
        self._next_states = np.zeros((cap, h, ep.next_states.shape[1]))
        self._achieved = np.zeros((cap, h, ep.achieved.shape[1]))
        self._desired = np.zeros((cap, ep.desired.shape[0]))

    def store_episode(self, ep: EpisodeRecord) -> None:
        if len(ep) != self.horizon:
            raise ValueError(f"episode length {len(ep)} != horizon {self.horizon}")
        if self._states is None:
            self._allocate(ep)
        i = self._pos
        self._states[i] = ep.states
        self._actions[i] = ep.actions
        self._rewards[i] = ep.rewards
        self._next_states[i] = ep.next_states
        self._achieved[i] = ep.achieved
        self._desired[i] = ep.desired
        self._pos = (self._pos + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def episode(self, i: int) -> EpisodeRecord:
        """The i-th oldest stored episode (copies)."""
        if not 0 <= i < self._size:
            raise IndexError(f"episode index {i} out of range [0, {self._size})")
        j = (self._pos - self._size + i) % self.capacity
        return EpisodeRecord(
            states=self._states[j].copy(),
            actions=self._actions[j].copy(),
            rewards=self._rewards[j].copy(),
            next_states=self._next_states[j].copy(),
            achieved=self._achieved[j].copy(),
            desired=self._desired[j].copy(),
        )

    def sample_batch(self, batch_size: int, rng: np.random.Generator | None = None) -> Batch:
        """Uniform (episode, step) draws; each independently hindsight-relabeled."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        if batch_size < 1:
            raise ValueError("batch size must be >= 1")
        rng = rng if rng is not None else self.rng
        h = self.horizon
        ep = rng.integers(self._size, size=batch_size)
        step = rng.integers(h, size=batch_size)
        relabel = rng.random(batch_size) < self.her_k / (self.her_k + 1.0)
        # Future index uniform in [step, H-1]; drawn for every row to keep the
        # rng consumption independent of the coin outcomes.
        future = step + np.floor(rng.random(batch_size) * (h - step)).astype(np.int64)

        goals = self._desired[ep].copy()
        rewards = self._rewards[ep, step].copy()
        achieved = self._achieved[ep, step]
        if relabel.any():
            rows = np.flatnonzero(relabel)
            goals[rows] = self._achieved[ep[rows], future[rows]]
            rewards[rows] = reward_batch(achieved[rows], goals[rows], self.epsilon)
        return Batch(
            states=self._states[ep, step].copy(),
            actions=self._actions[ep, step].copy(),
            rewards=rewards,
            next_states=self._next_states[ep, step].copy(),
            achieved=achieved.copy(),
            goals=goals,
        )

    def sample_states(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        """n states drawn uniformly over all stored transitions."""
        if self._size == 0:
            raise ValueError("cannot sample states from an empty replay buffer")
        rng = rng if rng is not None else self.rng
        ep = rng.integers(self._size, size=n)
        step = rng.integers(self.horizon, size=n)
        return self._states[ep, step].copy()
