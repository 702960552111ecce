"""Central finite-difference check of the PPO loss gradients."""

import numpy as np

from cbrl.policy import init_mlp, ppo_loss
from cbrl.policy.mlp import LossSpec, log_softmax, forward_batch

STEP = 1e-5
KINK_MARGIN = 1e-3  # keep ratios this far from 1 +- clip, where the loss has no derivative
COORDS_PER_TENSOR = 25


def random_batch(net, rng, n=16, clip=0.2):
    obs = rng.normal(0, 1, (n, net.input_dim))
    actions = rng.integers(0, net.n_actions, n)
    logits, _, _ = forward_batch(net, obs)
    logp = log_softmax(logits)[np.arange(n), actions]
    # old log-probs near the current ones, so some ratios fall inside the clip range and some outside
    shift = rng.normal(0, 0.3, n)
    while True:
        ratio = np.exp(-shift)
        near = np.minimum(np.abs(ratio - (1 - clip)), np.abs(ratio - (1 + clip))) < KINK_MARGIN
        if not near.any():
            break
        shift[near] = rng.normal(0, 0.3, near.sum())
    return {
        "obs": obs,
        "actions": actions,
        "logp_old": logp + shift,
        "advantages": rng.normal(0, 1, n),
        "returns": rng.normal(0, 1, n),
    }


def relative_error(net, batch, spec, rng):
    """Norm-wise relative error between analytic and numerical gradients over
    a random subset of coordinates of every parameter tensor."""
    _, grads, _ = ppo_loss(net, batch, spec)
    analytic, numeric = [], []
    for name, p in net.params.items():
        picks = np.arange(p.size) if p.size <= COORDS_PER_TENSOR else rng.choice(p.size, COORDS_PER_TENSOR, replace=False)
        for k in picks:
            idx = np.unravel_index(k, p.shape)
            old = p[idx]
            p[idx] = old + STEP
            up = ppo_loss(net, batch, spec)[0]
            p[idx] = old - STEP
            down = ppo_loss(net, batch, spec)[0]
            p[idx] = old
            numeric.append((up - down) / (2 * STEP))
            analytic.append(grads[name][idx])
    a, n = np.array(analytic), np.array(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / scale)


def check(hidden_layers, n_batches, spec=LossSpec(), seed=0, input_dim=7, n_actions=4):
    rng = np.random.default_rng(seed)
    errors = []
    for b in range(n_batches):
        net = init_mlp(input_dim, n_actions, hidden_layers, seed=seed * 1000 + b)
        # move away from the near-zero initial policy head so every term matters
        for k in net.params:
            net.params[k] += rng.normal(0, 0.1, net.params[k].shape)
        errors.append(relative_error(net, random_batch(net, rng), spec, rng))
    return errors
