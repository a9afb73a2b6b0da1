"""Highlighting policies: degenerate bounds, the timed rule, and learned.

All policies expose reset()/act(state, obs, rng) -> (4, 8) bit grid so the
evaluation harness and session service can drive them interchangeably.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attributes import N_ATTRS, N_DRONES
from .env import EnvState
from .nets import Checkpoint, Mlp
from .ppo import act
from .world import critical_mask


@dataclass(frozen=True)
class RulePolicyConfig:
    highlight_duration_s: float = 5.0

    def __post_init__(self):
        if self.highlight_duration_s <= 0:
            raise ValueError("highlight duration must be positive")


def new_rule_memory(state: EnvState) -> dict:
    """Onset tracker; criticality present at reset counts as already seen."""
    return {
        "prev_critical": critical_mask(state.att.values),
        "onset_time": np.full((N_DRONES, N_ATTRS), -np.inf),
    }


def rule_based_policy(
    state: EnvState, cfg: RulePolicyConfig, memory: dict
) -> np.ndarray:
    """Highlight each pair for a fixed window after it turns critical."""
    crit = critical_mask(state.att.values)
    onset = crit & ~memory["prev_critical"]
    memory["onset_time"][onset] = state.att.time
    memory["prev_critical"] = crit
    age = state.att.time - memory["onset_time"]
    return (age < cfg.highlight_duration_s).astype(np.int8)


def never_action() -> np.ndarray:
    return np.zeros((N_DRONES, N_ATTRS), dtype=np.int8)


def always_action() -> np.ndarray:
    return np.ones((N_DRONES, N_ATTRS), dtype=np.int8)


class NeverPolicy:
    name = "never"

    def reset(self, state: EnvState) -> None:
        pass

    def act(self, state: EnvState, obs: np.ndarray, rng=None) -> np.ndarray:
        return never_action()


class AlwaysPolicy:
    name = "always"

    def reset(self, state: EnvState) -> None:
        pass

    def act(self, state: EnvState, obs: np.ndarray, rng=None) -> np.ndarray:
        return always_action()


class RuleBasedPolicy:
    name = "rule"

    def __init__(self, cfg: RulePolicyConfig | None = None):
        self.cfg = cfg or RulePolicyConfig()
        self._memory: dict | None = None

    def reset(self, state: EnvState) -> None:
        self._memory = new_rule_memory(state)

    def act(self, state: EnvState, obs: np.ndarray, rng=None) -> np.ndarray:
        if self._memory is None:
            self._memory = new_rule_memory(state)
        return rule_based_policy(state, self.cfg, self._memory)


class LearnedPolicy:
    """Checkpoint-backed policy; argmax by default for evaluation."""

    name = "learned"

    def __init__(self, policy_net: Mlp, deterministic: bool = True):
        self.net = policy_net
        self.deterministic = deterministic

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, deterministic: bool = True) -> "LearnedPolicy":
        return cls(ckpt.policy, deterministic=deterministic)

    def reset(self, state: EnvState) -> None:
        pass

    def act(self, state: EnvState, obs: np.ndarray, rng=None) -> np.ndarray:
        if obs.shape[0] != self.net.sizes[0]:
            raise ValueError(
                f"observation width {obs.shape[0]} does not match "
                f"policy input width {self.net.sizes[0]}"
            )
        bits, _ = act(self.net, obs, rng=rng, deterministic=self.deterministic)
        return bits.reshape(N_DRONES, N_ATTRS)
