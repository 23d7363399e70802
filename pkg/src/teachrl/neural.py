"""Dense feed-forward networks in plain numpy.

Forward passes, exact reverse-mode gradients, Adam updates, and Polyak-averaged
target copies. Everything runs in float64; there is no graph machinery, just a
list of affine layers walked forwards and backwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("tanh", "relu", "identity")


class NumericsError(RuntimeError):
    """An update step would introduce non-finite values; the step was rejected."""


@dataclass
class Layer:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    act: str

    def __post_init__(self) -> None:
        if self.act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.act!r}")
        if self.w.ndim != 2:
            raise ValueError(f"weight must be a matrix, got shape {self.w.shape}")
        if self.b.shape != (self.w.shape[0],):
            raise ValueError(
                f"bias shape {self.b.shape} does not match weight rows {self.w.shape[0]}"
            )


@dataclass
class Mlp:
    layers: list[Layer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.w.shape[1] != prev.w.shape[0]:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.w.shape} -> {cur.w.shape}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].w.shape[0]

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter list [w0, b0, w1, b1, ...] of live views."""
        out: list[np.ndarray] = []
        for layer in self.layers:
            out.append(layer.w)
            out.append(layer.b)
        return out

    def copy(self) -> "Mlp":
        return Mlp([Layer(l.w.copy(), l.b.copy(), l.act) for l in self.layers])


def init_mlp(
    sizes: list[int],
    hidden_act: str = "tanh",
    out_act: str = "identity",
    rng: np.random.Generator | None = None,
) -> Mlp:
    """Build an MLP with weights and biases uniform in +-1/sqrt(fan_in)."""
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output size")
    rng = rng if rng is not None else np.random.default_rng()
    layers = []
    last = len(sizes) - 2
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append(Layer(w, b, out_act if i == last else hidden_act))
    return Mlp(layers)


def _apply_act(act: str, z: np.ndarray) -> np.ndarray:
    if act == "tanh":
        return np.tanh(z)
    if act == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(act: str, a: np.ndarray) -> np.ndarray:
    # Derivative of the activation expressed through its output value a.
    if act == "tanh":
        return 1.0 - a * a
    if act == "relu":
        return (a > 0.0).astype(np.float64)
    return np.ones_like(a)


def _forward_pass(net: Mlp, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    for layer in net.layers:
        z = acts[-1] @ layer.w.T + layer.b
        acts.append(_apply_act(layer.act, z))
    return acts


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.in_dim:
        raise ValueError(f"input dim {x.shape[-1]} != network input dim {net.in_dim}")
    squeeze = x.ndim == 1
    acts = _forward_pass(net, np.atleast_2d(x))
    out = acts[-1]
    return out[0] if squeeze else out


def mlp_backward(
    net: Mlp, x: np.ndarray, upstream: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse-mode gradients of the forward map.

    Given dL/d(output) in `upstream`, returns (parameter gradients flat like
    Mlp.arrays(), dL/d(input)). Works on single vectors or batches; batch
    contributions are summed into the parameter gradients.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.in_dim:
        raise ValueError(f"input dim {x.shape[-1]} != network input dim {net.in_dim}")
    squeeze = x.ndim == 1
    a0 = np.atleast_2d(x)
    g = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if g.shape != (a0.shape[0], net.out_dim):
        raise ValueError(
            f"upstream shape {np.asarray(upstream).shape} does not match output "
            f"({a0.shape[0]}, {net.out_dim})"
        )
    acts = _forward_pass(net, a0)
    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(net.layers))
    for i in reversed(range(len(net.layers))):
        layer = net.layers[i]
        gz = g * _act_grad(layer.act, acts[i + 1])
        grads[2 * i] = gz.T @ acts[i]
        grads[2 * i + 1] = gz.sum(axis=0)
        g = gz @ layer.w
    return grads, (g[0] if squeeze else g)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(net: Mlp, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    params = net.arrays()
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        t=0,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(
    net: Mlp, grads: list[np.ndarray], state: AdamState, lr: float
) -> tuple[Mlp, AdamState]:
    """One bias-corrected Adam update, in place. Rejects non-finite gradients."""
    params = net.arrays()
    if len(grads) != len(params):
        raise ValueError(f"got {len(grads)} gradients for {len(params)} parameters")
    for p, gr in zip(params, grads):
        if p.shape != gr.shape:
            raise ValueError(f"gradient shape {gr.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(gr)):
            raise NumericsError("non-finite gradient component; update rejected")
    state.t += 1
    b1c = 1.0 - state.beta1**state.t
    b2c = 1.0 - state.beta2**state.t
    for p, gr, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * gr
        v *= state.beta2
        v += (1.0 - state.beta2) * gr * gr
        p -= lr * (m / b1c) / (np.sqrt(v / b2c) + state.eps)
    return net, state


def polyak_update(target: Mlp, online: Mlp, alpha: float) -> Mlp:
    """Elementwise target <- alpha * target + (1 - alpha) * online, in place."""
    t_params, o_params = target.arrays(), online.arrays()
    if len(t_params) != len(o_params):
        raise ValueError("target and online networks have different layer counts")
    for tp, op in zip(t_params, o_params):
        if tp.shape != op.shape:
            raise ValueError(f"shape mismatch {tp.shape} vs {op.shape}")
        tp *= alpha
        tp += (1.0 - alpha) * op
    return target
