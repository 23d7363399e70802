"""Goal-conditioned DDPG student.

A tanh-bounded deterministic actor pi(s, g) and a scalar critic Q(s, g, a),
each with a Polyak-averaged target copy. Actions live in [-1, 1]^d; the
environment applies its own velocity limit on top. State and goal coordinates
are rescaled by fixed per-dimension factors before entering the networks so
maze coordinates land in [0, 1].
"""

from __future__ import annotations

import numpy as np

from .her import Batch
from .neural import (
    AdamState,
    Mlp,
    NumericsError,
    adam_init,
    adam_step,
    init_mlp,
    mlp_backward,
    mlp_forward,
    polyak_update,
)


class DdpgAgent:
    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        goal_dim: int,
        hidden: int = 256,
        gamma: float = 0.98,
        lr: float = 1e-3,
        noise_scale: float = 0.2,
        random_action_prob: float = 0.3,
        polyak: float = 0.95,
        obs_scale: np.ndarray | None = None,
        goal_scale: np.ndarray | None = None,
        rng: np.random.Generator | None = None,
    ):
        rng = rng if rng is not None else np.random.default_rng()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.goal_dim = goal_dim
        self.gamma = gamma
        self.lr = lr
        self.noise_scale = noise_scale
        self.random_action_prob = random_action_prob
        self.polyak = polyak
        self.obs_scale = (
            np.ones(state_dim) if obs_scale is None else np.asarray(obs_scale, float).copy()
        )
        self.goal_scale = (
            np.ones(goal_dim) if goal_scale is None else np.asarray(goal_scale, float).copy()
        )
        self.actor = init_mlp(
            [state_dim + goal_dim, hidden, hidden, action_dim], "tanh", "tanh", rng
        )
        self.critic = init_mlp(
            [state_dim + goal_dim + action_dim, hidden, hidden, 1], "tanh", "identity", rng
        )
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = adam_init(self.actor)
        self.critic_opt = adam_init(self.critic)

    @property
    def q_min(self) -> float:
        # Lower bound of any return under the {-1, 0} per-step reward.
        return -1.0 / (1.0 - self.gamma)

    def features(self, states: np.ndarray, goals: np.ndarray) -> np.ndarray:
        s = np.asarray(states, float) * self.obs_scale
        g = np.asarray(goals, float) * self.goal_scale
        return np.concatenate([s, g], axis=-1)

    def act(
        self,
        state: np.ndarray,
        goal: np.ndarray,
        explore: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """Policy action in [-1, 1]^d; exploration adds Gaussian and epsilon-random noise."""
        if explore:
            if rng is None:
                raise ValueError("exploration requires an rng")
            if rng.random() < self.random_action_prob:
                return rng.uniform(-1.0, 1.0, self.action_dim)
            a = mlp_forward(self.actor, self.features(state, goal))
            if self.noise_scale > 0.0:
                a = np.clip(a + rng.normal(0.0, self.noise_scale, self.action_dim), -1.0, 1.0)
            return a
        return mlp_forward(self.actor, self.features(state, goal))

    def policy_value(
        self,
        states: np.ndarray,
        goals: np.ndarray,
        use_target: bool = False,
        critic: Mlp | None = None,
    ) -> np.ndarray:
        """Q(s, g, pi(s, g)) per row, using online nets unless told otherwise."""
        actor = self.target_actor if use_target else self.actor
        q_net = critic if critic is not None else (self.target_critic if use_target else self.critic)
        x = self.features(states, goals)
        a = mlp_forward(actor, x)
        q = mlp_forward(q_net, np.concatenate([x, a], axis=-1))
        return q[..., 0]

    def critic_targets(self, batch: Batch) -> np.ndarray:
        """Bootstrapped targets r + gamma * Q'(s', g, pi'(s', g)), clipped to [q_min, 0]."""
        x2 = self.features(batch.next_states, batch.goals)
        a2 = mlp_forward(self.target_actor, x2)
        q2 = mlp_forward(self.target_critic, np.concatenate([x2, a2], axis=-1))[:, 0]
        return np.clip(batch.rewards + self.gamma * q2, self.q_min, 0.0)

    def regress_critic(self, critic: Mlp, opt: AdamState, batch: Batch, lr: float) -> float:
        """One Adam step of MSE regression of `critic` onto this agent's targets."""
        y = self.critic_targets(batch)
        x = np.concatenate([self.features(batch.states, batch.goals), batch.actions], axis=-1)
        q = mlp_forward(critic, x)[:, 0]
        err = q - y
        loss = float(np.mean(err * err))
        if not np.isfinite(loss):
            raise NumericsError("non-finite critic loss; update skipped")
        upstream = (2.0 / len(err)) * err[:, None]
        grads, _ = mlp_backward(critic, x, upstream)
        adam_step(critic, grads, opt, lr)
        return loss

    def update_critic(self, batch: Batch) -> float:
        """Bellman regression step on the online critic; returns the pre-step loss."""
        return self.regress_critic(self.critic, self.critic_opt, batch, self.lr)

    def update_actor(self, batch: Batch) -> float:
        """Ascend E[Q(s, g, pi(s, g))] through the critic; returns the pre-step mean Q."""
        xa = self.features(batch.states, batch.goals)
        a = mlp_forward(self.actor, xa)
        xc = np.concatenate([xa, a], axis=-1)
        q = mlp_forward(self.critic, xc)[:, 0]
        objective = float(np.mean(q))
        if not np.isfinite(objective):
            raise NumericsError("non-finite actor objective; update skipped")
        upstream = np.full((len(q), 1), 1.0 / len(q))
        _, dxc = mlp_backward(self.critic, xc, upstream)
        da = dxc[:, self.state_dim + self.goal_dim :]
        grads, _ = mlp_backward(self.actor, xa, -da)
        adam_step(self.actor, grads, self.actor_opt, self.lr)
        return objective

    def sync_targets(self, alpha: float | None = None) -> None:
        """Polyak-average both target networks toward the online ones."""
        a = self.polyak if alpha is None else alpha
        polyak_update(self.target_actor, self.actor, a)
        polyak_update(self.target_critic, self.critic, a)
