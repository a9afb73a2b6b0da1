"""Clipped-surrogate policy optimization with advantage estimation.

The policy outputs 32 independent Bernoulli logits, one per
drone-attribute pair (the joint action space is 2^32, so a factorized
head is the only tractable parameterization).  Rollouts come from a set
of sequentially stepped environment replicas; updates run several epochs
of shuffled minibatches per collected batch.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .env import OversightEnv, observe
from .nets import (
    AdamState,
    Checkpoint,
    LrSchedule,
    Mlp,
    adam_update,
    backward,
    clip_grad_norm,
    forward,
    make_mlp,
    save_checkpoint,
)

# The policy network is a plain Mlp whose 32 outputs are Bernoulli logits.
PolicyHead = Mlp


class TrainingAborted(RuntimeError):
    """A non-finite loss or gradient stopped the update loop."""


@dataclass
class PpoConfig:
    gamma: float = 0.95
    lam: float = 0.95
    clip_epsilon: float = 0.2
    total_samples: int = 1_000_000
    batch_size: int = 16384
    epochs_per_batch: int = 10
    minibatch_size: int = 256
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    max_grad_norm: float = 0.5
    learning_rate: float = 3e-4
    n_envs: int = 16
    # Rewards are scaled by this inside the advantage/value-target pipeline
    # only (raw episode rewards are what the log reports); the raw rewards
    # are O(1e3-1e4) per step, far outside what a unit-scale value head can
    # regress onto.
    reward_scale: float = 1e-3
    # Initial logit for every highlight bit.  Starting near the all-off
    # policy matters: at logit 0 the random policy pays ~16 highlight
    # penalties per step and the whole sample budget goes into unlearning
    # that, not into timing highlights.
    policy_init_logit: float = -3.0
    checkpoint_every: int = 0  # update phases between checkpoints; 0 = final only
    seed: int = 0

    def __post_init__(self):
        if self.batch_size % self.minibatch_size:
            raise ValueError("batch_size must be divisible by minibatch_size")
        if self.batch_size % self.n_envs:
            raise ValueError("batch_size must be divisible by n_envs")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 <= self.lam <= 1:
            raise ValueError("lam must be in [0, 1]")
        if self.clip_epsilon <= 0:
            raise ValueError("clip_epsilon must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "PpoConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown ppo config fields: {sorted(unknown)}")
        return cls(**doc)


# -- factorized Bernoulli head ------------------------------------------------


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def action_log_prob(logits: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Summed Bernoulli log-likelihood of the bit vector(s)."""
    b = np.asarray(bits, dtype=float)
    return np.sum(b * _log_sigmoid(logits) + (1.0 - b) * _log_sigmoid(-logits), axis=-1)


def bernoulli_entropy(logits: np.ndarray) -> np.ndarray:
    """Sum of per-bit entropies, in nats."""
    p = sigmoid(logits)
    sp_pos = np.logaddexp(0.0, logits)
    sp_neg = np.logaddexp(0.0, -logits)
    return np.sum(p * sp_neg + (1.0 - p) * sp_pos, axis=-1)


def act(
    policy: Mlp,
    obs: np.ndarray,
    rng: np.random.Generator | None = None,
    deterministic: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample highlight bits (or take the argmax) and return log-probability."""
    logits = forward(policy, obs)
    if deterministic:
        bits = (logits > 0).astype(np.int8)
    else:
        if rng is None:
            raise ValueError("stochastic act needs an rng")
        bits = (rng.random(logits.shape) < sigmoid(logits)).astype(np.int8)
    return bits, action_log_prob(logits, bits)


# -- advantage estimation -----------------------------------------------------


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap: np.ndarray | float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Exponentially weighted TD advantages and value targets.

    Works on (T,) vectors or (T, W) worker-stacked arrays; ``dones`` marks
    steps that ended an episode, which zeroes the carried value/advantage.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    nonterminal = 1.0 - np.asarray(dones, dtype=float)
    adv = np.zeros_like(rewards)
    carry = np.zeros_like(rewards[-1])
    next_values = np.broadcast_to(np.asarray(bootstrap, dtype=float), rewards[-1].shape).copy()
    for t in range(len(rewards) - 1, -1, -1):
        delta = rewards[t] + gamma * next_values * nonterminal[t] - values[t]
        carry = delta + gamma * lam * nonterminal[t] * carry
        adv[t] = carry
        next_values = values[t]
    return adv, adv + values


def clipped_surrogate(ratio: np.ndarray, adv: np.ndarray, clip_epsilon: float) -> np.ndarray:
    """Per-sample objective: min(ratio * adv, clip(ratio) * adv)."""
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * adv)


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


# -- rollout collection -------------------------------------------------------


@dataclass
class Batch:
    obs: np.ndarray      # (N, obs)
    bits: np.ndarray     # (N, 32)
    logp: np.ndarray     # (N,)
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return len(self.obs)


@dataclass
class _Slot:
    env: OversightEnv
    index: int
    base_seed: int
    episode: int = 0
    ep_return: float = 0.0
    ep_len: int = 0
    obs: np.ndarray | None = None

    def reset(self) -> None:
        state = self.env.reset(_episode_seed(self.base_seed, self.index, self.episode))
        self.obs = observe(state)
        self.ep_return = 0.0
        self.ep_len = 0


def _episode_seed(base_seed: int, env_index: int, episode: int):
    return (base_seed, env_index, episode)


def _collect(
    slots: list[_Slot],
    policy: Mlp,
    value_net: Mlp,
    cfg: PpoConfig,
    action_rng: np.random.Generator,
) -> tuple[Batch, list[tuple[float, int]]]:
    """Step all replicas in lockstep for batch_size total samples."""
    n_envs = len(slots)
    steps = cfg.batch_size // n_envs
    obs_dim = slots[0].obs.shape[0]
    obs_buf = np.zeros((steps, n_envs, obs_dim))
    bits_buf = np.zeros((steps, n_envs, policy.sizes[-1]), dtype=np.int8)
    logp_buf = np.zeros((steps, n_envs))
    rew_buf = np.zeros((steps, n_envs))
    val_buf = np.zeros((steps, n_envs))
    done_buf = np.zeros((steps, n_envs))
    episodes: list[tuple[float, int]] = []

    for t in range(steps):
        obs_mat = np.stack([s.obs for s in slots])
        logits = forward(policy, obs_mat)
        probs = sigmoid(logits)
        bits = (action_rng.random(logits.shape) < probs).astype(np.int8)
        logp = action_log_prob(logits, bits)
        values = forward(value_net, obs_mat)[:, 0]
        obs_buf[t] = obs_mat
        bits_buf[t] = bits
        logp_buf[t] = logp
        val_buf[t] = values
        for w, slot in enumerate(slots):
            state, r, done, _ = slot.env.step(bits[w])
            rew_buf[t, w] = r * cfg.reward_scale
            done_buf[t, w] = float(done)
            slot.ep_return += r
            slot.ep_len += 1
            if done:
                episodes.append((slot.ep_return, slot.ep_len))
                slot.episode += 1
                slot.reset()
            else:
                slot.obs = observe(state)

    final_obs = np.stack([s.obs for s in slots])
    bootstrap = forward(value_net, final_obs)[:, 0]
    adv, ret = compute_gae(rew_buf, val_buf, done_buf, bootstrap, cfg.gamma, cfg.lam)
    n = steps * n_envs
    return (
        Batch(
            obs=obs_buf.reshape(n, obs_dim),
            bits=bits_buf.reshape(n, -1),
            logp=logp_buf.reshape(n),
            advantages=adv.reshape(n),
            returns=ret.reshape(n),
        ),
        episodes,
    )


# -- the clipped-surrogate update ----------------------------------------------


def ppo_update(
    batch: Batch,
    policy: Mlp,
    value_net: Mlp,
    adam_policy: AdamState,
    adam_value: AdamState,
    cfg: PpoConfig,
    lr: float,
    rng: np.random.Generator,
) -> dict:
    """Several epochs of minibatch updates on one collected batch."""
    n = len(batch)
    adv = normalize_advantages(batch.advantages)

    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0}
    n_minibatches = 0
    for _ in range(cfg.epochs_per_batch):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = perm[start : start + cfg.minibatch_size]
            obs = batch.obs[idx]
            bits = batch.bits[idx].astype(float)
            old_logp = batch.logp[idx]
            mb_adv = adv[idx]
            mb_ret = batch.returns[idx]
            b = len(idx)

            logits = forward(policy, obs)
            probs = sigmoid(logits)
            logp = action_log_prob(logits, bits)
            ratio = np.exp(logp - old_logp)
            unclipped = ratio * mb_adv
            clipped = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * mb_adv
            surrogate = clipped_surrogate(ratio, mb_adv, cfg.clip_epsilon)
            entropy = bernoulli_entropy(logits)
            policy_loss = -surrogate.mean() - cfg.entropy_coef * entropy.mean()

            v = forward(value_net, obs)[:, 0]
            value_loss = cfg.value_coef * 0.5 * np.mean((v - mb_ret) ** 2)

            if not (np.isfinite(policy_loss) and np.isfinite(value_loss)):
                raise TrainingAborted(
                    "non-finite loss: "
                    + json.dumps(
                        {
                            "policy_loss": float(policy_loss),
                            "value_loss": float(value_loss),
                            "ratio_max": float(np.max(ratio)),
                            "adv_max": float(np.max(np.abs(mb_adv))),
                            "logits_max": float(np.max(np.abs(logits))),
                        }
                    )
                )

            # d surrogate / d logp is ratio*adv where the unclipped branch is
            # active; the clipped branch is flat in the policy.
            through = unclipped <= clipped
            dsurr_dlogp = np.where(through, ratio * mb_adv, 0.0)
            up_logits = (-dsurr_dlogp[:, None] * (bits - probs)) / b
            up_logits += cfg.entropy_coef * logits * probs * (1.0 - probs) / b
            policy_grads, _ = backward(policy, obs, up_logits)
            clip_grad_norm(policy_grads, cfg.max_grad_norm)
            adam_update(policy.params(), policy_grads, adam_policy, lr)

            up_v = (cfg.value_coef * (v - mb_ret) / b)[:, None]
            value_grads, _ = backward(value_net, obs, up_v)
            clip_grad_norm(value_grads, cfg.max_grad_norm)
            adam_update(value_net.params(), value_grads, adam_value, lr)

            stats["policy_loss"] += float(policy_loss)
            stats["value_loss"] += float(value_loss)
            stats["entropy"] += float(entropy.mean())
            stats["clip_fraction"] += float(np.mean(np.abs(ratio - 1.0) > cfg.clip_epsilon))
            n_minibatches += 1

    return {k: v / n_minibatches for k, v in stats.items()}


# -- the training loop ---------------------------------------------------------


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    checkpoint_path: Path | None
    log_path: Path | None
    log: list[dict] = field(default_factory=list)


def train(
    env_factory,
    cfg: PpoConfig,
    out_dir: str | Path | None = None,
    run_config: dict | None = None,
    progress: bool = False,
) -> TrainResult:
    """Alternate rollout collection and updates until total_samples consumed.

    ``env_factory()`` must build a fresh OversightEnv; replicas never share
    state.  Fully reproducible from (cfg, env_factory determinism).
    """
    n_updates = max(1, math.ceil(cfg.total_samples / cfg.batch_size))
    schedule = LrSchedule(initial_lr=cfg.learning_rate, total_updates=n_updates)
    root = np.random.SeedSequence(cfg.seed)
    policy_seq, value_seq, action_seq, shuffle_seq = root.spawn(4)
    action_rng = np.random.default_rng(action_seq)
    shuffle_rng = np.random.default_rng(shuffle_seq)

    sample_env = env_factory()
    obs_dim = observe(sample_env.reset(0)).shape[0]
    policy = make_mlp(obs_dim, 32, np.random.default_rng(policy_seq), out_gain=0.01)
    policy.biases[-1][:] = cfg.policy_init_logit
    value_net = make_mlp(obs_dim, 1, np.random.default_rng(value_seq), out_gain=1.0)
    adam_policy = AdamState.for_params(policy.params())
    adam_value = AdamState.for_params(value_net.params())

    slots = [_Slot(env=env_factory(), index=w, base_seed=cfg.seed) for w in range(cfg.n_envs)]
    for slot in slots:
        slot.reset()

    config_doc = dict(run_config or {})
    config_doc["ppo"] = cfg.to_dict()

    out_dir = Path(out_dir) if out_dir is not None else None
    log_path = None
    log_file = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_path = out_dir / "training_log.jsonl"
        log_file = log_path.open("w", encoding="utf-8")

    log: list[dict] = []
    samples = 0
    try:
        for update in range(n_updates):
            lr = schedule.lr_at(update)
            batch, episodes = _collect(slots, policy, value_net, cfg, action_rng)
            samples += len(batch)
            stats = ppo_update(
                batch, policy, value_net, adam_policy, adam_value, cfg, lr, shuffle_rng
            )
            record = {
                "update": update,
                "samples_so_far": samples,
                "episodes_completed": len(episodes),
                "mean_episode_reward": (
                    float(np.mean([r for r, _ in episodes])) if episodes else None
                ),
                "mean_episode_length": (
                    float(np.mean([n for _, n in episodes])) if episodes else None
                ),
                "lr": lr,
                **stats,
            }
            log.append(record)
            if log_file is not None:
                log_file.write(json.dumps(record, sort_keys=True) + "\n")
                log_file.flush()
            if progress:
                mer = record["mean_episode_reward"]
                print(
                    f"update {update + 1}/{n_updates} samples={samples} "
                    f"mean_episode_reward={mer if mer is None else f'{mer:.1f}'}"
                )
            if (
                out_dir is not None
                and cfg.checkpoint_every > 0
                and (update + 1) % cfg.checkpoint_every == 0
                and update + 1 < n_updates
            ):
                ckpt = Checkpoint(
                    policy, value_net, adam_policy, adam_value, update + 1, samples, config_doc
                )
                save_checkpoint(ckpt, out_dir / f"checkpoint_u{update + 1:05d}.json")
    finally:
        if log_file is not None:
            log_file.close()

    checkpoint = Checkpoint(
        policy, value_net, adam_policy, adam_value, n_updates, samples, config_doc
    )
    checkpoint_path = None
    if out_dir is not None:
        checkpoint_path = out_dir / "checkpoint.json"
        save_checkpoint(checkpoint, checkpoint_path)
    return TrainResult(
        checkpoint=checkpoint, checkpoint_path=checkpoint_path, log_path=log_path, log=log
    )
