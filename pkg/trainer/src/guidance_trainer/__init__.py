"""Desk-scale IPPO trainer for the shared navigation guidance policy."""

from .env import EnvConfig, NavEnv, VecNavEnv, build_observation, compute_reward
from .export import infer_mean, save_policy, weights_document
from .ppo import ActorCritic, TrainConfig, TrainResult, train

__all__ = [name for name in dir() if not name.startswith("_")]
