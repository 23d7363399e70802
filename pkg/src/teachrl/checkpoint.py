"""Binary checkpoints: named float64 tensors behind a magic/version header.

Layout: magic "TEACHCK1", version u32 LE, tensor count u32 LE, then per tensor
name length u32 LE + UTF-8 name, rank u32 LE, dims u32 LE each, and the data as
little-endian float64, row-major. Loading is strict: bad magic, unsupported
version, truncation, or trailing bytes all raise.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .agent import DdpgAgent
from .neural import AdamState, Layer, Mlp, adam_init
from .teacher import METHODS, Teacher, TeacherConfig

MAGIC = b"TEACHCK1"
VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file is malformed or has an unsupported version."""


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        arr = np.ascontiguousarray(np.asarray(tensors[name], dtype=np.float64))
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        for d in arr.shape:
            chunks.append(struct.pack("<I", d))
        chunks.append(arr.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise CheckpointError("truncated checkpoint file")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError("bad magic bytes; not a checkpoint file")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    count = r.u32()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        shape = tuple(r.u32() for _ in range(rank))
        n_items = int(np.prod(shape, dtype=np.int64)) if rank else 1
        raw = r.take(8 * n_items)
        arr = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
        tensors[name] = arr
    if r.off != len(data):
        raise CheckpointError("trailing bytes after the last tensor")
    return tensors


# -- agent <-> tensors -------------------------------------------------------


def _net_to_tensors(prefix: str, net: Mlp, out: dict[str, np.ndarray]) -> None:
    for i, layer in enumerate(net.layers):
        out[f"{prefix}/{i}/w"] = layer.w
        out[f"{prefix}/{i}/b"] = layer.b


def _net_from_tensors(prefix: str, tensors: dict[str, np.ndarray], acts: tuple[str, str]) -> Mlp:
    hidden_act, out_act = acts
    layers = []
    i = 0
    while f"{prefix}/{i}/w" in tensors:
        layers.append((tensors[f"{prefix}/{i}/w"].copy(), tensors[f"{prefix}/{i}/b"].copy()))
        i += 1
    if not layers:
        raise CheckpointError(f"checkpoint is missing network {prefix!r}")
    return Mlp(
        [
            Layer(w, b, out_act if j == len(layers) - 1 else hidden_act)
            for j, (w, b) in enumerate(layers)
        ]
    )


def _opt_to_tensors(prefix: str, opt: AdamState, out: dict[str, np.ndarray]) -> None:
    for i, (m, v) in enumerate(zip(opt.m, opt.v)):
        out[f"{prefix}/m/{i}"] = m
        out[f"{prefix}/v/{i}"] = v
    out[f"{prefix}/t"] = np.array(float(opt.t))


def _opt_from_tensors(prefix: str, tensors: dict[str, np.ndarray], net: Mlp) -> AdamState:
    opt = adam_init(net)
    for i in range(len(opt.m)):
        opt.m[i] = tensors[f"{prefix}/m/{i}"].copy()
        opt.v[i] = tensors[f"{prefix}/v/{i}"].copy()
    opt.t = int(tensors[f"{prefix}/t"])
    return opt


def agent_to_tensors(agent: DdpgAgent) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    _net_to_tensors("agent/actor", agent.actor, out)
    _net_to_tensors("agent/critic", agent.critic, out)
    _net_to_tensors("agent/target_actor", agent.target_actor, out)
    _net_to_tensors("agent/target_critic", agent.target_critic, out)
    _opt_to_tensors("agent/actor_opt", agent.actor_opt, out)
    _opt_to_tensors("agent/critic_opt", agent.critic_opt, out)
    out["agent/obs_scale"] = agent.obs_scale
    out["agent/goal_scale"] = agent.goal_scale
    out["agent/hyper"] = np.array(
        [
            agent.gamma,
            agent.lr,
            agent.noise_scale,
            agent.random_action_prob,
            agent.polyak,
            float(agent.state_dim),
            float(agent.action_dim),
            float(agent.goal_dim),
        ]
    )
    return out


def agent_from_tensors(tensors: dict[str, np.ndarray]) -> DdpgAgent:
    try:
        hyper = tensors["agent/hyper"]
        state_dim, action_dim, goal_dim = (int(x) for x in hyper[5:8])
        agent = DdpgAgent(
            state_dim=state_dim,
            action_dim=action_dim,
            goal_dim=goal_dim,
            hidden=1,  # networks are replaced below
            gamma=float(hyper[0]),
            lr=float(hyper[1]),
            noise_scale=float(hyper[2]),
            random_action_prob=float(hyper[3]),
            polyak=float(hyper[4]),
            obs_scale=tensors["agent/obs_scale"],
            goal_scale=tensors["agent/goal_scale"],
            rng=np.random.default_rng(0),
        )
        agent.actor = _net_from_tensors("agent/actor", tensors, ("tanh", "tanh"))
        agent.critic = _net_from_tensors("agent/critic", tensors, ("tanh", "identity"))
        agent.target_actor = _net_from_tensors("agent/target_actor", tensors, ("tanh", "tanh"))
        agent.target_critic = _net_from_tensors("agent/target_critic", tensors, ("tanh", "identity"))
        agent.actor_opt = _opt_from_tensors("agent/actor_opt", tensors, agent.actor)
        agent.critic_opt = _opt_from_tensors("agent/critic_opt", tensors, agent.critic)
    except KeyError as exc:
        raise CheckpointError(f"checkpoint is missing tensor {exc.args[0]!r}") from None
    return agent


# -- teacher <-> tensors ------------------------------------------------------


def teacher_to_tensors(teacher: Teacher) -> dict[str, np.ndarray]:
    cfg = teacher.cfg
    out: dict[str, np.ndarray] = {
        "teacher/goals": teacher.goals,
        "teacher/hist": teacher.hist,
        "teacher/weights": teacher.weights,
        "teacher/start_state": teacher.start_state,
        "teacher/state": np.array(
            [float(teacher.hist_count), float(teacher.hist_pos), float(teacher.ticks)]
        ),
        "teacher/config": np.array(
            [
                float(METHODS.index(cfg.method)),
                float(cfg.window),
                float(cfg.delta),
                float(cfg.n_goals),
                float(cfg.n_probes),
                float(cfg.ensemble),
                float(teacher.horizon),
                teacher.ensemble_lr,
            ]
        ),
    }
    for k, (critic, opt) in enumerate(zip(teacher.ensemble, teacher.ensemble_opts)):
        _net_to_tensors(f"teacher/ensemble/{k}", critic, out)
        _opt_to_tensors(f"teacher/ensemble_opt/{k}", opt, out)
    return out


def teacher_from_tensors(
    tensors: dict[str, np.ndarray], rng: np.random.Generator | None = None
) -> Teacher:
    try:
        raw = tensors["teacher/config"]
        cfg = TeacherConfig(
            method=METHODS[int(raw[0])],
            window=int(raw[1]),
            delta=int(raw[2]),
            n_goals=int(raw[3]),
            n_probes=int(raw[4]),
            ensemble=int(raw[5]),
        )
        factory = None
        if cfg.method == "vds":
            # Placeholder nets; real ensemble members are restored below.
            factory = lambda r: _net_from_tensors("teacher/ensemble/0", tensors, ("tanh", "identity"))
        teacher = Teacher(
            cfg,
            goals=tensors["teacher/goals"].copy(),
            horizon=int(raw[6]),
            start_state=tensors["teacher/start_state"].copy(),
            rng=rng if rng is not None else np.random.default_rng(0),
            critic_factory=factory,
            ensemble_lr=float(raw[7]),
        )
        teacher.hist = tensors["teacher/hist"].copy()
        teacher.weights = tensors["teacher/weights"].copy()
        state = tensors["teacher/state"]
        teacher.hist_count = int(state[0])
        teacher.hist_pos = int(state[1])
        teacher.ticks = int(state[2])
        for k in range(len(teacher.ensemble)):
            teacher.ensemble[k] = _net_from_tensors(
                f"teacher/ensemble/{k}", tensors, ("tanh", "identity")
            )
            teacher.ensemble_opts[k] = _opt_from_tensors(
                f"teacher/ensemble_opt/{k}", tensors, teacher.ensemble[k]
            )
    except KeyError as exc:
        raise CheckpointError(f"checkpoint is missing tensor {exc.args[0]!r}") from None
    return teacher


def save_checkpoint(agent: DdpgAgent, teacher: Teacher, path: str | Path) -> None:
    tensors = agent_to_tensors(agent)
    tensors.update(teacher_to_tensors(teacher))
    save_tensors(path, tensors)


def load_checkpoint(
    path: str | Path, rng: np.random.Generator | None = None
) -> tuple[DdpgAgent, Teacher]:
    tensors = load_tensors(path)
    return agent_from_tensors(tensors), teacher_from_tensors(tensors, rng=rng)
