"""The oversight decision environment.

State is the triple (fleet attributes, user belief, highlights).  A step
advances the fleet, applies the chosen highlights, samples one user
fixation from the gaze model, copies the fixated ground-truth value into
the belief, and scores the result: minus the weighted belief error, minus
a fixed penalty per active highlight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .attributes import (
    ATTR_INDEX,
    ATTR_NAMES,
    N_ATTRS,
    N_DRONES,
    N_PAIRS,
    normalize,
)
from .attention import (
    AttentionParams,
    GazeDistribution,
    InterfaceFrame,
    default_params,
    predict,
    sample_fixation,
)
from .schemas import SchemaError, dump_document, load_document, require
from .world import AttributeState, ScenarioScript, advance, init_world

REWARD_SCHEMA = "reward/1"

OBSERVATION_SIZE = 3 * N_PAIRS

# Belief values and highlight bits are (4, 8) grids in the canonical
# attribute order, same layout as AttributeState.values.
BeliefValues = np.ndarray
HighlightBits = np.ndarray

GazeModel = Callable[[InterfaceFrame], GazeDistribution]


class ContractError(RuntimeError):
    """The environment was driven outside its step/reset contract."""


@dataclass(frozen=True)
class RewardConfig:
    weights: np.ndarray       # (8,) positive, per-attribute importance
    highlight_penalty: float  # cost per active highlight per step

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (N_ATTRS,):
            raise ValueError(f"weights must have {N_ATTRS} entries")
        if np.any(w <= 0):
            raise ValueError("all weights must be positive")
        if self.highlight_penalty < 0:
            raise ValueError("highlight penalty must be non-negative")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class EnvState:
    att: AttributeState
    usr: BeliefValues
    hlt: HighlightBits
    step_index: int


def default_reward_config() -> RewardConfig:
    """Importance weights mirroring how costly a stale readout is."""
    weights = np.ones(N_ATTRS)
    weights[ATTR_INDEX["rotor"]] = 100.0
    weights[ATTR_INDEX["no_fly_zone"]] = 100.0
    weights[ATTR_INDEX["battery"]] = 50.0
    weights[ATTR_INDEX["wind_speed"]] = 20.0
    return RewardConfig(weights=weights, highlight_penalty=500.0)


def belief_distance(
    att: AttributeState | np.ndarray, usr: BeliefValues, weights: np.ndarray
) -> float:
    """Weighted L1 gap between ground truth and user belief."""
    values = att.values if isinstance(att, AttributeState) else att
    return float(np.sum(np.asarray(weights) * np.abs(values - usr)))


def reward(state: EnvState, cfg: RewardConfig) -> float:
    d = belief_distance(state.att, state.usr, cfg.weights)
    return -d - cfg.highlight_penalty * float(np.sum(state.hlt))


def observe(state: EnvState) -> np.ndarray:
    """96-entry policy input: normalized truth, normalized belief, highlights."""
    return np.concatenate(
        [
            normalize(state.att.values).reshape(N_PAIRS),
            normalize(state.usr).reshape(N_PAIRS),
            np.asarray(state.hlt, dtype=float).reshape(N_PAIRS),
        ]
    )


def _coerce_action(action) -> HighlightBits:
    bits = np.asarray(action)
    if bits.shape == (N_PAIRS,):
        bits = bits.reshape(N_DRONES, N_ATTRS)
    if bits.shape != (N_DRONES, N_ATTRS):
        raise ContractError(f"action must have {N_PAIRS} bits, got shape {bits.shape}")
    if not ((bits == 0) | (bits == 1)).all():
        raise ContractError("action bits must be 0 or 1")
    return bits.astype(np.int8)


class OversightEnv:
    """Step/reset wrapper around the fleet, gaze model, and reward.

    Instances are value containers: clone one per worker and give each its
    own seed; nothing is shared between instances.
    """

    def __init__(
        self,
        script: ScenarioScript,
        reward_cfg: RewardConfig | None = None,
        attention_params: AttentionParams | None = None,
        gaze_model: GazeModel | None = None,
        dt: float = 0.5,
    ):
        self.script = script
        self.reward_cfg = reward_cfg or default_reward_config()
        self.dt = dt
        self.horizon = int(round(script.duration_s / dt))
        self.attention_params = attention_params
        if gaze_model is not None:
            self._gaze: GazeModel = gaze_model
        else:
            params = attention_params or default_params()
            self.attention_params = params
            self._gaze = lambda frame: predict(frame, params)
        self._state: EnvState | None = None
        self._done = True

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise ContractError("environment not reset")
        return self._state

    @property
    def done(self) -> bool:
        return self._done

    def reset(self, seed: int | tuple) -> EnvState:
        """Start an episode: belief matches truth, nothing highlighted.

        Seeds may be ints or tuples of ints (hierarchical worker seeds).
        """
        world_seq, gaze_seq = np.random.SeedSequence(seed).spawn(2)
        self._world_rng = np.random.default_rng(world_seq)
        self._gaze_rng = np.random.default_rng(gaze_seq)
        att = init_world(self.script, seed)
        self._state = EnvState(
            att=att,
            usr=att.values.copy(),
            hlt=np.zeros((N_DRONES, N_ATTRS), dtype=np.int8),
            step_index=0,
        )
        self._done = False
        return self._state

    def step(self, action) -> tuple[EnvState, float, bool, dict]:
        """One transition: advance fleet, set highlights, sample fixation."""
        if self._state is None or self._done:
            raise ContractError("step called on a terminal or unreset environment")
        prev = self._state
        att_new = advance(prev.att, self.script, self.dt, self._world_rng)
        hlt = _coerce_action(action)
        frame = InterfaceFrame(att=att_new, hlt=hlt, prev_att=prev.att)
        dist = self._gaze(frame)
        drone, attr = sample_fixation(dist, self._gaze_rng)
        usr = prev.usr.copy()
        usr[drone, attr] = att_new.values[drone, attr]
        state = EnvState(att=att_new, usr=usr, hlt=hlt, step_index=prev.step_index + 1)
        r = reward(state, self.reward_cfg)
        self._state = state
        self._done = state.step_index >= self.horizon
        info = {
            "fixation": (drone, attr),
            "belief_distance": belief_distance(att_new, usr, self.reward_cfg.weights),
            "n_highlights": int(hlt.sum()),
        }
        return state, r, self._done, info


# -- reward config files ----------------------------------------------------


def reward_config_from_dict(doc: dict, where: str = "reward config") -> RewardConfig:
    weights_doc = require(doc, "weights", dict, where)
    weights = np.ones(N_ATTRS)
    for name, value in weights_doc.items():
        if name not in ATTR_INDEX:
            raise SchemaError(f"{where}: weights.{name}: unknown attribute")
        weights[ATTR_INDEX[name]] = float(value)
    try:
        return RewardConfig(
            weights=weights,
            highlight_penalty=float(require(doc, "highlight_penalty", float, where)),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}: {exc}") from exc


def reward_config_to_dict(cfg: RewardConfig) -> dict:
    return {
        "schema": REWARD_SCHEMA,
        "weights": {ATTR_NAMES[a]: float(cfg.weights[a]) for a in range(N_ATTRS)},
        "highlight_penalty": cfg.highlight_penalty,
    }


def load_reward_config(path) -> RewardConfig:
    doc = load_document(path, REWARD_SCHEMA)
    return reward_config_from_dict(doc, where=str(path))


def save_reward_config(cfg: RewardConfig, path) -> None:
    dump_document(reward_config_to_dict(cfg), path)
