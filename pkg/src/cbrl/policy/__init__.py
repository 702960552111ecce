"""Neural action selector trained with PPO."""

from cbrl.policy.mlp import (
    MLP,
    LossSpec,
    NumericalError,
    forward,
    forward_batch,
    greedy_actions,
    hidden_activations,
    init_mlp,
    ppo_loss,
    softmax,
)
from cbrl.policy.ppo import Adam, PPOConfig, TrainResult, Transition, gae, ppo_update, train

__all__ = [
    "MLP",
    "Adam",
    "LossSpec",
    "NumericalError",
    "PPOConfig",
    "TrainResult",
    "Transition",
    "forward",
    "forward_batch",
    "gae",
    "greedy_actions",
    "hidden_activations",
    "init_mlp",
    "ppo_loss",
    "ppo_update",
    "softmax",
    "train",
]
