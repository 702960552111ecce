"""Concept-bottleneck agents: object extraction, relational concepts, PPO
policies and their distillation into IF-THEN rule sets."""

__version__ = "0.1.0"
