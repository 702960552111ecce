"""Actor-critic MLP with hand-written reverse-mode gradients.

A tanh trunk of one or two 64-unit layers feeds two linear heads: action
logits and a scalar state value.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HIDDEN = 64

_CKPT_MAGIC = b"CBMLP"
_CKPT_VERSION = 1


class NumericalError(FloatingPointError):
    """A loss or gradient became non-finite."""


@dataclass
class MLP:
    params: dict[str, np.ndarray]
    hidden_layers: int

    @property
    def input_dim(self) -> int:
        return self.params["W0"].shape[0]

    @property
    def n_actions(self) -> int:
        return self.params["Wpi"].shape[1]

    def param_names(self) -> list[str]:
        names = []
        for i in range(self.hidden_layers):
            names += [f"W{i}", f"b{i}"]
        return names + ["Wpi", "bpi", "Wv", "bv"]

    def copy(self) -> "MLP":
        return MLP({k: v.copy() for k, v in self.params.items()}, self.hidden_layers)

    def save(self, path: str | Path) -> None:
        """Binary layout (little endian): magic, u32 version, u32 hidden layers,
        u32 tensor count, then per tensor in ``param_names`` order: u32 rows,
        u32 cols, rows*cols float64 values row-major."""
        names = self.param_names()
        out = [_CKPT_MAGIC, struct.pack("<III", _CKPT_VERSION, self.hidden_layers, len(names))]
        for n in names:
            a = np.atleast_2d(self.params[n])
            out.append(struct.pack("<II", *a.shape))
            out.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
        Path(path).write_bytes(b"".join(out))

    @classmethod
    def load(cls, path: str | Path) -> "MLP":
        raw = Path(path).read_bytes()
        if raw[:5] != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a policy checkpoint")
        version, layers, count = struct.unpack_from("<III", raw, 5)
        if version != _CKPT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        net = cls({}, layers)
        names = net.param_names()
        if count != len(names):
            raise ValueError(f"{path}: expected {len(names)} tensors, header says {count}")
        off = 17
        for n in names:
            rows, cols = struct.unpack_from("<II", raw, off)
            off += 8
            size = rows * cols * 8
            a = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols).copy()
            off += size
            net.params[n] = a[0] if n.startswith("b") else a
        return net


def _orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    a = rng.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    q = q if rows >= cols else q.T
    return np.ascontiguousarray(gain * q[:rows, :cols])


def init_mlp(input_dim: int, n_actions: int, hidden_layers: int = 2, seed: int = 0) -> MLP:
    if hidden_layers not in (1, 2):
        raise ValueError("hidden_layers must be 1 or 2")
    rng = np.random.default_rng(seed)
    params = {}
    fan_in = input_dim
    for i in range(hidden_layers):
        params[f"W{i}"] = _orthogonal(rng, fan_in, HIDDEN, np.sqrt(2))
        params[f"b{i}"] = np.zeros(HIDDEN)
        fan_in = HIDDEN
    params["Wpi"] = _orthogonal(rng, HIDDEN, n_actions, 0.01)
    params["bpi"] = np.zeros(n_actions)
    params["Wv"] = _orthogonal(rng, HIDDEN, 1, 1.0)
    params["bv"] = np.zeros(1)
    return MLP(params, hidden_layers)


def hidden_activations(net: MLP, x: np.ndarray) -> list[np.ndarray]:
    """Trunk activations for a batch ``x`` of shape (n, input_dim)."""
    acts = []
    h = np.atleast_2d(x)
    for i in range(net.hidden_layers):
        h = np.tanh(h @ net.params[f"W{i}"] + net.params[f"b{i}"])
        acts.append(h)
    return acts


def forward_batch(net: MLP, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != net.input_dim:
        raise ValueError(f"input has {x.shape[1]} features, network expects {net.input_dim}")
    acts = hidden_activations(net, x)
    h = acts[-1]
    logits = h @ net.params["Wpi"] + net.params["bpi"]
    value = (h @ net.params["Wv"] + net.params["bv"])[:, 0]
    return logits, value, acts


def forward(net: MLP, x: np.ndarray) -> tuple[np.ndarray, float]:
    logits, value, _ = forward_batch(net, np.asarray(x)[None, :])
    return logits[0], float(value[0])


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def greedy_actions(net: MLP, x: np.ndarray) -> np.ndarray:
    logits, _, _ = forward_batch(net, x)
    return logits.argmax(axis=1)


@dataclass(frozen=True)
class LossSpec:
    clip: float = 0.2
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    pg_coef: float = 1.0


def ppo_loss(net: MLP, batch: dict[str, np.ndarray], spec: LossSpec) -> tuple[float, dict[str, np.ndarray], dict]:
    """Clipped-surrogate PPO loss and its gradient w.r.t. every parameter.

    ``batch`` holds ``obs``, ``actions``, ``logp_old``, ``advantages`` and
    ``returns``. Loss = pg_coef * policy loss + vf_coef * value MSE
    - ent_coef * mean entropy.
    """
    obs, actions = batch["obs"], batch["actions"].astype(int)
    adv, ret, logp_old = batch["advantages"], batch["returns"], batch["logp_old"]
    n = len(actions)
    logits, value, acts = forward_batch(net, obs)
    logp_all = log_softmax(logits)
    p = np.exp(logp_all)
    rows = np.arange(n)
    logp = logp_all[rows, actions]
    ratio = np.exp(logp - logp_old)
    clipped = np.clip(ratio, 1 - spec.clip, 1 + spec.clip)
    surr1, surr2 = ratio * adv, clipped * adv
    pg_loss = -np.minimum(surr1, surr2).mean()
    v_loss = ((value - ret) ** 2).mean()
    entropy_i = -(p * logp_all).sum(axis=1)
    entropy = entropy_i.mean()
    loss = spec.pg_coef * pg_loss + spec.vf_coef * v_loss - spec.ent_coef * entropy
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite PPO loss {loss}")

    # d loss / d logp: the min picks surr1 unless the clipped term is smaller
    use_unclipped = surr1 <= surr2
    inside = (ratio > 1 - spec.clip) & (ratio < 1 + spec.clip)
    d_logp = -spec.pg_coef * adv * ratio * (use_unclipped | inside) / n
    onehot = np.zeros_like(logits)
    onehot[rows, actions] = 1.0
    d_logits = d_logp[:, None] * (onehot - p)
    # dH/dz_j = -p_j (log p_j + H)
    d_logits += (spec.ent_coef / n) * p * (logp_all + entropy_i[:, None])
    d_value = spec.vf_coef * 2.0 * (value - ret) / n

    grads = {}
    h = acts[-1]
    grads["Wpi"] = h.T @ d_logits
    grads["bpi"] = d_logits.sum(axis=0)
    grads["Wv"] = h.T @ d_value[:, None]
    grads["bv"] = np.array([d_value.sum()])
    dh = d_logits @ net.params["Wpi"].T + d_value[:, None] @ net.params["Wv"].T
    for i in reversed(range(net.hidden_layers)):
        dz = dh * (1.0 - acts[i] ** 2)
        below = acts[i - 1] if i > 0 else obs
        grads[f"W{i}"] = below.T @ dz
        grads[f"b{i}"] = dz.sum(axis=0)
        if i > 0:
            dh = dz @ net.params[f"W{i}"].T
    stats = {
        "loss": float(loss),
        "policy_loss": float(pg_loss),
        "value_loss": float(v_loss),
        "entropy": float(entropy),
        "clip_fraction": float((np.abs(ratio - 1) > spec.clip).mean()),
        "approx_kl": float(((ratio - 1) - np.log(ratio)).mean()),
    }
    return float(loss), grads, stats
