"""Training orchestration: the teacher-student loop, evaluation, and metrics.

A run is fully determined by (config, seed): every random draw comes from named
substreams of one seed sequence, so metrics files and checkpoints are
byte-identical across repeated runs.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import DdpgAgent
from .checkpoint import save_checkpoint
from .config import ConfigError, RunConfig
from .goal_mdp import MazeEnv, PointReachEnv, load_layout
from .her import EpisodeRecord, ReplayBuffer
from .neural import NumericsError, init_mlp
from .teacher import Teacher

log = logging.getLogger("teachrl")


class TrainingAborted(RuntimeError):
    """Training stopped because updates kept producing non-finite values."""


@dataclass
class MetricsRow:
    step: int
    episode: int
    success_rate: float
    mean_return: float
    method: str
    wall_time: float

    def to_json(self) -> str:
        # wall_time is intentionally excluded: metrics files must be
        # byte-identical across reruns of the same (config, seed).
        return json.dumps(
            {
                "step": self.step,
                "episode": self.episode,
                "success_rate": self.success_rate,
                "mean_return": self.mean_return,
                "method": self.method,
            },
            sort_keys=True,
        )


@dataclass
class TrainResult:
    rows: list[MetricsRow]
    metrics_path: Path
    checkpoint_path: Path
    out_dir: Path

    @property
    def final_success(self) -> float:
        return self.rows[-1].success_rate if self.rows else 0.0


def build_env(cfg: RunConfig) -> MazeEnv | PointReachEnv:
    if cfg.env == "maze":
        if cfg.layout is None:
            raise ConfigError("maze environment requires a layout", key="layout")
        return MazeEnv(load_layout(cfg.layout), gamma=cfg.gamma)
    return PointReachEnv(gamma=cfg.gamma)


def evaluate(
    agent: DdpgAgent,
    env: MazeEnv | PointReachEnv,
    goals: np.ndarray,
    episodes: int = 20,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Mean success rate and undiscounted return of the deterministic policy.

    Each episode targets a goal drawn uniformly from the sampled goal set;
    success means the goal was reached (reward 0) at any step.
    """
    if episodes < 1:
        raise ValueError("need >= 1 evaluation episodes")
    rng = rng if rng is not None else np.random.default_rng()
    h = env.spec.horizon
    successes = 0
    total_return = 0.0
    for _ in range(episodes):
        goal = goals[rng.integers(len(goals))]
        s = env.reset(goal)
        reached = False
        ep_return = 0.0
        for _ in range(h):
            s, r, _ = env.step(agent.act(s, goal, explore=False))
            ep_return += r
            reached = reached or r == 0.0
        successes += int(reached)
        total_return += ep_return
    return successes / episodes, total_return / episodes


def train(cfg: RunConfig, out: str | Path | None = None, seed: int | None = None) -> TrainResult:
    """Run the full teacher-student loop and write metrics plus a checkpoint."""
    seed = cfg.seed if seed is None else seed
    out_dir = Path(cfg.out if out is None else out)
    out_dir.mkdir(parents=True, exist_ok=True)

    env = build_env(cfg)
    spec = env.spec
    h = spec.horizon
    n_episodes = cfg.total_steps // h

    master = np.random.SeedSequence(seed)
    init_ss, goal_ss, teacher_ss, explore_ss, buffer_ss, eval_ss = master.spawn(6)

    goals = env.sample_goals(cfg.teacher.n_goals, np.random.default_rng(goal_ss))
    coord_scale = 1.0 / env.bounds
    agent = DdpgAgent(
        state_dim=spec.state_dim,
        action_dim=spec.action_dim,
        goal_dim=spec.goal_dim,
        hidden=cfg.hidden,
        gamma=cfg.gamma,
        lr=cfg.lr,
        noise_scale=cfg.noise,
        random_action_prob=cfg.random_action_prob,
        polyak=cfg.polyak,
        obs_scale=coord_scale,
        goal_scale=coord_scale,
        rng=np.random.default_rng(init_ss),
    )
    critic_sizes = [spec.state_dim + spec.goal_dim + spec.action_dim, cfg.hidden, cfg.hidden, 1]
    teacher = Teacher(
        cfg.teacher,
        goals=goals,
        horizon=h,
        start_state=env.start_state(),
        rng=np.random.default_rng(teacher_ss),
        critic_factory=lambda r: init_mlp(critic_sizes, "tanh", "identity", r),
        ensemble_lr=cfg.lr,
    )
    buffer = ReplayBuffer(
        capacity=cfg.buffer_episodes,
        horizon=h,
        her_k=cfg.her_k,
        epsilon=spec.epsilon,
        rng=np.random.default_rng(buffer_ss),
    )
    explore_rng = np.random.default_rng(explore_ss)

    t = 0
    nonfinite_streak = 0
    rows: list[MetricsRow] = []
    start_time = time.monotonic()
    metrics_path = out_dir / "metrics.jsonl"
    checkpoint_path = out_dir / "checkpoint.bin"

    with metrics_path.open("w", encoding="utf-8") as metrics_file:
        for e in range(n_episodes):
            teacher.tick(agent, buffer, t)
            goal = teacher.sample_goal()
            s = env.reset(goal)
            ep_states = np.empty((h, spec.state_dim))
            ep_actions = np.empty((h, spec.action_dim))
            ep_rewards = np.empty(h)
            ep_next = np.empty((h, spec.state_dim))
            ep_achieved = np.empty((h, spec.goal_dim))
            for step in range(h):
                a = agent.act(s, goal, explore=True, rng=explore_rng)
                s2, r, achieved = env.step(a)
                ep_states[step] = s
                ep_actions[step] = a
                ep_rewards[step] = r
                ep_next[step] = s2
                ep_achieved[step] = achieved
                s = s2
                t += 1
                if t >= cfg.warmup_steps and len(buffer) > 0 and t % cfg.update_every == 0:
                    batch = buffer.sample_batch(cfg.batch)
                    try:
                        agent.update_critic(batch)
                        agent.update_actor(batch)
                        agent.sync_targets()
                        teacher.observe_batch(agent, batch)
                        nonfinite_streak = 0
                    except NumericsError as exc:
                        nonfinite_streak += 1
                        log.debug("update skipped at step %d: %s", t, exc)
                        if nonfinite_streak > 100:
                            raise TrainingAborted(
                                f"more than 100 consecutive non-finite updates "
                                f"(last at step {t}): {exc}"
                            ) from exc
            buffer.store_episode(
                EpisodeRecord(ep_states, ep_actions, ep_rewards, ep_next, ep_achieved, goal)
            )
            if (e + 1) % cfg.eval_every == 0 or e == n_episodes - 1:
                eval_rng = np.random.default_rng(eval_ss.spawn(1)[0])
                success, mean_return = evaluate(agent, env, goals, cfg.eval_episodes, eval_rng)
                row = MetricsRow(
                    step=t,
                    episode=e,
                    success_rate=success,
                    mean_return=mean_return,
                    method=cfg.teacher.method,
                    wall_time=time.monotonic() - start_time,
                )
                rows.append(row)
                metrics_file.write(row.to_json() + "\n")
                log.info(
                    "episode %d / step %d: success %.2f, return %.1f (%.1fs)",
                    e,
                    t,
                    success,
                    mean_return,
                    row.wall_time,
                )

    save_checkpoint(agent, teacher, checkpoint_path)
    return TrainResult(rows, metrics_path, checkpoint_path, out_dir)
