"""Run configuration: `key = value` text files with line-aware errors.

Omitted keys take documented defaults; unknown keys, unparsable values, and
out-of-range values are rejected with the offending key and line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .teacher import METHODS, TeacherConfig


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        loc = ""
        if key is not None:
            loc += f" (key {key!r}"
            loc += f", line {line})" if line is not None else ")"
        elif line is not None:
            loc += f" (line {line})"
        super().__init__(message + loc)
        self.key = key
        self.line = line


@dataclass
class RunConfig:
    env: str = "point"
    layout: str | None = None
    total_steps: int = 50_000
    seed: int = 0
    lr: float = 1e-3
    batch: int = 1024
    eval_every: int = 50  # episodes between evaluations
    eval_episodes: int = 20
    out: str = "teach_run"
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    gamma: float = 0.98
    noise: float = 0.2
    random_action_prob: float = 0.3
    polyak: float = 0.95
    hidden: int = 256
    warmup_steps: int = 1000
    update_every: int = 2
    her_k: int = 4
    buffer_episodes: int = 10_000


def _parse_int(raw: str) -> int:
    return int(raw, 0)


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_str(raw: str) -> str:
    return raw


# key -> (caster, range check, human-readable constraint)
_KEYS = {
    "env": (_parse_str, lambda v: v in ("point", "maze"), "one of: point, maze"),
    "layout": (_parse_str, lambda v: bool(v), "a non-empty path or builtin layout name"),
    "total_steps": (_parse_int, lambda v: v >= 50, ">= 50 (one full episode)"),
    "seed": (_parse_int, lambda v: 0 <= v < 2**64, "a u64"),
    "lr": (_parse_float, lambda v: v > 0, "> 0"),
    "batch": (_parse_int, lambda v: v >= 1, ">= 1"),
    "eval_every": (_parse_int, lambda v: v >= 1, ">= 1"),
    "eval_episodes": (_parse_int, lambda v: v >= 1, ">= 1"),
    "out": (_parse_str, lambda v: bool(v), "a non-empty directory path"),
    "teacher.method": (_parse_str, lambda v: v in METHODS, f"one of: {', '.join(METHODS)}"),
    "teacher.window": (_parse_int, lambda v: v >= 2, ">= 2"),
    "teacher.delta": (_parse_int, lambda v: v >= 1, ">= 1"),
    "teacher.goals": (_parse_int, lambda v: v >= 1, ">= 1"),
    "teacher.probes": (_parse_int, lambda v: v >= 1, ">= 1"),
    "teacher.ensemble": (_parse_int, lambda v: v >= 2, ">= 2"),
    "agent.gamma": (_parse_float, lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
    "agent.noise": (_parse_float, lambda v: v >= 0, ">= 0"),
    "agent.random_action_prob": (_parse_float, lambda v: 0.0 <= v <= 1.0, "in [0, 1]"),
    "agent.polyak": (_parse_float, lambda v: 0.0 <= v <= 1.0, "in [0, 1]"),
    "agent.hidden": (_parse_int, lambda v: v >= 1, ">= 1"),
    "agent.warmup_steps": (_parse_int, lambda v: v >= 0, ">= 0"),
    "agent.update_every": (_parse_int, lambda v: v >= 1, ">= 1"),
    "her.k": (_parse_int, lambda v: v >= 0, ">= 0"),
    "her.capacity": (_parse_int, lambda v: v >= 1, ">= 1"),
}

_FIELD_OF_KEY = {
    "env": "env",
    "layout": "layout",
    "total_steps": "total_steps",
    "seed": "seed",
    "lr": "lr",
    "batch": "batch",
    "eval_every": "eval_every",
    "eval_episodes": "eval_episodes",
    "out": "out",
    "agent.gamma": "gamma",
    "agent.noise": "noise",
    "agent.random_action_prob": "random_action_prob",
    "agent.polyak": "polyak",
    "agent.hidden": "hidden",
    "agent.warmup_steps": "warmup_steps",
    "agent.update_every": "update_every",
    "her.k": "her_k",
    "her.capacity": "buffer_episodes",
}

_TEACHER_FIELD_OF_KEY = {
    "teacher.method": "method",
    "teacher.window": "window",
    "teacher.delta": "delta",
    "teacher.goals": "n_goals",
    "teacher.probes": "n_probes",
    "teacher.ensemble": "ensemble",
}


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a validated RunConfig."""
    values: dict[str, object] = {}
    lines_of: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        caster, check, constraint = _KEYS[key]
        try:
            value = caster(raw)
        except ValueError:
            raise ConfigError(f"cannot parse value {raw!r}", key=key, line=lineno) from None
        if not check(value):
            raise ConfigError(f"value {raw!r} out of range; must be {constraint}", key=key, line=lineno)
        values[key] = value
        lines_of[key] = lineno

    teacher_kwargs = {
        field_name: values[key]
        for key, field_name in _TEACHER_FIELD_OF_KEY.items()
        if key in values
    }
    try:
        teacher = TeacherConfig(**teacher_kwargs)
    except ValueError as exc:
        # Cross-field teacher validation failed; attribute it to one of the keys.
        key = next(k for k in _TEACHER_FIELD_OF_KEY if k in values)
        raise ConfigError(str(exc), key=key, line=lines_of.get(key)) from None

    cfg = RunConfig(teacher=teacher)
    cfg = replace(
        cfg, **{_FIELD_OF_KEY[k]: v for k, v in values.items() if k in _FIELD_OF_KEY}
    )
    if cfg.env == "maze" and cfg.layout is None:
        raise ConfigError("maze environment requires a layout", key="layout")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc}") from None
    return parse_config(text)
