"""Proximal policy optimisation on concept vectors."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from cbrl.policy.mlp import MLP, LossSpec, NumericalError, forward_batch, init_mlp, log_softmax, ppo_loss

log = logging.getLogger(__name__)


@dataclass
class PPOConfig:
    learning_rate: float = 3e-4
    clip: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 4
    minibatch_size: int = 64
    horizon: int = 2048
    total_frames: int = 1_000_000
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden_layers: int = 2
    n_envs: int = 1
    eval_interval: int = 100_000
    eval_episodes: int = 3
    seed: int = 0
    target_reward: float = float("inf")  # stop once an evaluation mean reaches this

    def __post_init__(self):
        if not 0.0 < self.clip < 1.0:
            raise ValueError("clip must lie in (0, 1)")
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.gae_lambda <= 1.0):
            raise ValueError("gamma and gae_lambda must lie in (0, 1]")
        if self.horizon < 1 or self.minibatch_size < 1 or self.epochs < 1:
            raise ValueError("horizon, minibatch_size and epochs must be positive")

    def loss_spec(self) -> LossSpec:
        return LossSpec(self.clip, self.vf_coef, self.ent_coef)


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    logp: float
    reward: float
    value: float
    done: bool


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-5):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for k, g in grads.items():
            m = self.m.setdefault(k, np.zeros_like(g))
            v = self.v.setdefault(k, np.zeros_like(g))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def gae(
    transitions: Sequence[Transition],
    gamma: float,
    lam: float,
    last_value: float = 0.0,
    normalize: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalised advantage estimates and value targets.

    ``last_value`` bootstraps a rollout cut before its episode ended.
    Returns are computed from the raw advantages; the advantages themselves
    are normalised to zero mean and unit deviation when ``normalize``.
    """
    n = len(transitions)
    if n == 0:
        raise ValueError("gae needs at least one transition")
    adv = np.zeros(n)
    running = 0.0
    next_value = last_value
    for t in reversed(range(n)):
        tr = transitions[t]
        live = 0.0 if tr.done else 1.0
        delta = tr.reward + gamma * next_value * live - tr.value
        running = delta + gamma * lam * live * running
        adv[t] = running
        next_value = tr.value
    returns = adv + np.array([tr.value for tr in transitions])
    if normalize:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return adv, returns


def _clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = float(np.sqrt(sum((g * g).sum() for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-6)
        for g in grads.values():
            g *= scale
    return norm


def ppo_update(
    net: MLP,
    batch: dict[str, np.ndarray],
    cfg: PPOConfig,
    optimizer: Adam | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[MLP, dict]:
    """Run ``cfg.epochs`` passes of shuffled minibatch updates over ``batch`` (in place)."""
    n = len(batch["actions"])
    if n == 0:
        raise ValueError("ppo_update needs a nonempty batch")
    optimizer = optimizer or Adam(cfg.learning_rate)
    rng = rng or np.random.default_rng(cfg.seed)
    spec = cfg.loss_spec()
    totals: dict[str, list[float]] = {}
    mb_index = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start : start + cfg.minibatch_size]
            mb = {k: v[idx] for k, v in batch.items()}
            try:
                _, grads, stats = ppo_loss(net, mb, spec)
            except NumericalError as exc:
                raise NumericalError(f"minibatch {mb_index}: {exc}") from None
            stats["grad_norm"] = _clip_grads(grads, cfg.max_grad_norm)
            if not np.isfinite(stats["grad_norm"]):
                raise NumericalError(f"minibatch {mb_index}: non-finite gradient")
            optimizer.step(net.params, grads)
            for k, v in stats.items():
                totals.setdefault(k, []).append(v)
            mb_index += 1
    return net, {k: float(np.mean(v)) for k, v in totals.items()}


def batch_from(transitions: Sequence[Transition], advantages: np.ndarray, returns: np.ndarray) -> dict[str, np.ndarray]:
    return {
        "obs": np.array([t.obs for t in transitions]),
        "actions": np.array([t.action for t in transitions]),
        "logp_old": np.array([t.logp for t in transitions]),
        "advantages": advantages,
        "returns": returns,
    }


@dataclass
class TrainResult:
    net: MLP
    episode_rewards: list[tuple[int, float]] = field(default_factory=list)  # (frame, reward)
    eval_log: list[tuple[int, float, float]] = field(default_factory=list)  # (frame, mean, std)
    update_stats: list[dict] = field(default_factory=list)


def train(
    make_env: Callable[[int], object],
    cfg: PPOConfig,
    evaluate: Callable[[MLP], tuple[float, float]] | None = None,
) -> TrainResult:
    """PPO training loop.

    ``make_env(i)`` builds the i-th environment instance (a ``ConceptEnv``-like
    object). Instances are stepped round-robin and their transitions merged in
    instance order, so a run is a deterministic function of ``cfg.seed``.
    """
    envs = [make_env(i) for i in range(cfg.n_envs)]
    rng = np.random.default_rng(cfg.seed)
    net = init_mlp(envs[0].obs_dim, envs[0].n_actions, cfg.hidden_layers, seed=cfg.seed)
    optimizer = Adam(cfg.learning_rate)
    result = TrainResult(net)
    episode_seed = cfg.seed * 100_003
    obs, ep_ret = [], []
    for e in envs:
        obs.append(e.reset(episode_seed))
        ep_ret.append(0.0)
        episode_seed += 1
    frames = 0
    next_eval = cfg.eval_interval
    per_env = max(1, cfg.horizon // cfg.n_envs)
    while frames < cfg.total_frames:
        rollouts: list[list[Transition]] = [[] for _ in envs]
        for _ in range(per_env):
            x = np.array(obs)
            logits, values, _ = forward_batch(net, x)
            logp_all = log_softmax(logits)
            probs = np.exp(logp_all)
            for i, e in enumerate(envs):
                a = int(rng.choice(len(probs[i]), p=probs[i] / probs[i].sum()))
                nxt, r, done = e.step(a)
                rollouts[i].append(Transition(obs[i], a, float(logp_all[i, a]), r, float(values[i]), done))
                ep_ret[i] += r
                frames += 1
                if done:
                    result.episode_rewards.append((frames, ep_ret[i]))
                    ep_ret[i] = 0.0
                    nxt = e.reset(episode_seed)
                    episode_seed += 1
                obs[i] = nxt
        _, last_values, _ = forward_batch(net, np.array(obs))
        parts = [gae(ro, cfg.gamma, cfg.gae_lambda, float(last_values[i]), normalize=False) for i, ro in enumerate(rollouts)]
        adv = np.concatenate([p[0] for p in parts])
        ret = np.concatenate([p[1] for p in parts])
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        batch = batch_from([t for ro in rollouts for t in ro], adv, ret)
        _, stats = ppo_update(net, batch, cfg, optimizer, rng)
        stats["frames"] = frames
        result.update_stats.append(stats)
        if evaluate is not None and cfg.eval_interval > 0 and (frames >= next_eval or frames >= cfg.total_frames):
            mean, std = evaluate(net)
            result.eval_log.append((frames, mean, std))
            log.info("frames %d: eval reward %.2f +- %.2f", frames, mean, std)
            while next_eval <= frames:
                next_eval += cfg.eval_interval
            if mean >= cfg.target_reward:
                break
    return result


def config_dict(cfg: PPOConfig) -> dict:
    return asdict(cfg)
