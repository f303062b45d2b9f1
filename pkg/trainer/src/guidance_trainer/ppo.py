"""Independent PPO with shared parameters over the navigation environment.

Every agent is treated as its own experience stream through one shared
actor-critic; the clipped surrogate, value regression, and entropy bonus
follow the standard recipe with GAE advantages.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .env import EnvConfig, VecNavEnv


@dataclass
class TrainConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    n_envs: int = 4
    total_env_steps: int = 200_000
    rollout_length: int = 128
    lr: float = 3e-4
    clip_eps: float = 0.2
    gae_lambda: float = 0.95
    discount: float = 0.99
    entropy_coef: float = 0.003
    value_coef: float = 0.5
    epochs: int = 4
    minibatch: int = 256
    max_grad_norm: float = 0.5
    log_std_init: float = math.log(0.4)
    hidden: int = 64
    seed: int = 0
    deterministic: bool = True

    def validate(self):
        for name in ("total_env_steps", "rollout_length", "epochs",
                     "minibatch", "n_envs", "hidden"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.env.n_agents < 1 or self.env.episode_length < 1:
            raise ValueError("environment needs agents and a positive episode length")


class ActorCritic(nn.Module):
    """Shared policy/value networks with a tanh-squashed action mean."""

    def __init__(self, obs_dim, action_low, action_high, hidden=64,
                 log_std_init=math.log(0.4)):
        super().__init__()
        self.register_buffer("low", torch.as_tensor(action_low, dtype=torch.float64))
        self.register_buffer("high", torch.as_tensor(action_high, dtype=torch.float64))
        self.pi = nn.Sequential(
            nn.Linear(obs_dim, hidden), nn.Tanh(),
            nn.Linear(hidden, hidden), nn.Tanh(),
            nn.Linear(hidden, 2),
        ).double()
        self.vf = nn.Sequential(
            nn.Linear(obs_dim, hidden), nn.Tanh(),
            nn.Linear(hidden, hidden), nn.Tanh(),
            nn.Linear(hidden, 1),
        ).double()
        self.log_std = nn.Parameter(torch.full((2,), float(log_std_init),
                                               dtype=torch.float64))

    def action_stats(self, obs):
        span = self.high - self.low
        mean = self.low + (torch.tanh(self.pi(obs)) + 1.0) / 2.0 * span
        std = torch.clamp(torch.exp(self.log_std) * span / 2.0, min=1e-3)
        return mean, std

    def distribution(self, obs):
        mean, std = self.action_stats(obs)
        return torch.distributions.Normal(mean, std)

    def value(self, obs):
        return self.vf(obs).squeeze(-1)


@dataclass
class TrainResult:
    model: ActorCritic
    episode_returns: list
    env_steps: int


def _gae(rewards, values, last_values, dones, discount, lam):
    """Vectorized GAE over (T, S) reward/value arrays; `dones` marks episode
    boundaries AFTER each step (value bootstraps reset there)."""
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    running = np.zeros(rewards.shape[1])
    next_values = np.vstack([values[1:], last_values[None, :]])
    for t in reversed(range(T)):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + discount * next_values[t] * not_done - values[t]
        running = delta + discount * lam * not_done * running
        adv[t] = running
    return adv


def train(cfg: TrainConfig, progress=None) -> TrainResult:
    """Run IPPO and return the trained model plus the episode-return curve.

    Raises RuntimeError with a diagnostic when returns diverge to NaN.
    """
    cfg.validate()
    torch.manual_seed(cfg.seed)
    if cfg.deterministic:
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(1)
    sample_rng = np.random.default_rng(cfg.seed + 7)

    env = VecNavEnv(cfg.env, cfg.n_envs, seed=cfg.seed)
    model = ActorCritic(cfg.env.obs_dim, cfg.env.action_low,
                        cfg.env.action_high, cfg.hidden, cfg.log_std_init)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    streams = env.n_streams
    obs = env.reset()
    episode_returns: list[float] = []
    acc_return = np.zeros(cfg.n_envs)
    env_steps = 0
    n_agents = cfg.env.n_agents

    while env_steps < cfg.total_env_steps:
        T = cfg.rollout_length
        buf_obs = np.empty((T, streams, cfg.env.obs_dim))
        buf_act = np.empty((T, streams, 2))
        buf_logp = np.empty((T, streams))
        buf_val = np.empty((T, streams))
        buf_rew = np.empty((T, streams))
        buf_done = np.empty((T, streams))

        with torch.no_grad():
            for t in range(T):
                ot = torch.as_tensor(obs, dtype=torch.float64)
                mean, std = model.action_stats(ot)
                noise = torch.as_tensor(
                    sample_rng.standard_normal((streams, 2)))
                act = mean + std * noise
                logp = torch.distributions.Normal(mean, std).log_prob(act).sum(-1)
                value = model.value(ot)
                next_obs, rew, done_flags = env.step(act.numpy())

                buf_obs[t] = obs
                buf_act[t] = act.numpy()
                buf_logp[t] = logp.numpy()
                buf_val[t] = value.numpy()
                buf_rew[t] = rew
                buf_done[t] = np.repeat(done_flags.astype(float), n_agents)

                acc_return += rew.reshape(cfg.n_envs, n_agents).mean(axis=1)
                for e in range(cfg.n_envs):
                    if done_flags[e]:
                        episode_returns.append(float(acc_return[e]))
                        acc_return[e] = 0.0
                obs = next_obs
                env_steps += cfg.n_envs
            last_val = model.value(torch.as_tensor(obs, dtype=torch.float64)).numpy()

        if not np.isfinite(buf_rew).all() or (episode_returns
                                              and not math.isfinite(episode_returns[-1])):
            raise RuntimeError(
                f"training diverged: non-finite return at env step {env_steps}")

        adv = _gae(buf_rew, buf_val, last_val, buf_done, cfg.discount,
                   cfg.gae_lambda)
        ret = adv + buf_val

        flat_obs = torch.as_tensor(buf_obs.reshape(T * streams, -1))
        flat_act = torch.as_tensor(buf_act.reshape(T * streams, 2))
        flat_logp = torch.as_tensor(buf_logp.reshape(-1))
        flat_adv = torch.as_tensor(adv.reshape(-1))
        flat_ret = torch.as_tensor(ret.reshape(-1))
        flat_adv = (flat_adv - flat_adv.mean()) / (flat_adv.std() + 1e-8)

        n_total = T * streams
        for _ in range(cfg.epochs):
            perm = torch.as_tensor(sample_rng.permutation(n_total))
            for lo in range(0, n_total, cfg.minibatch):
                idx = perm[lo:lo + cfg.minibatch]
                dist = model.distribution(flat_obs[idx])
                logp = dist.log_prob(flat_act[idx]).sum(-1)
                ratio = torch.exp(logp - flat_logp[idx])
                a = flat_adv[idx]
                surrogate = torch.minimum(
                    ratio * a,
                    torch.clamp(ratio, 1 - cfg.clip_eps, 1 + cfg.clip_eps) * a)
                policy_loss = -surrogate.mean()
                value_loss = ((model.value(flat_obs[idx]) - flat_ret[idx]) ** 2).mean()
                entropy = dist.entropy().sum(-1).mean()
                loss = (policy_loss + cfg.value_coef * value_loss
                        - cfg.entropy_coef * entropy)
                optimizer.zero_grad()
                loss.backward()
                nn.utils.clip_grad_norm_(model.parameters(), cfg.max_grad_norm)
                optimizer.step()

        if progress is not None:
            recent = episode_returns[-10:]
            progress(env_steps, float(np.mean(recent)) if recent else float("nan"))

    return TrainResult(model, episode_returns, env_steps)
