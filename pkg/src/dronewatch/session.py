"""Live oversight sessions: the deployment-side counterpart of the MDP.

A simulated_user session is the training environment verbatim (same code
path, bit-for-bit).  A human_user session keeps a *proxy* belief instead:
nothing is sampled, and belief entries update only when the client reports
a fixation (dwell above threshold).  All semantics live in the library;
the WebSocket layer is a thin adapter around this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .attributes import ATTR_INDEX, ATTR_NAMES, N_ATTRS, N_DRONES, flatten
from .attention import AttentionParams
from .env import (
    EnvState,
    OversightEnv,
    RewardConfig,
    belief_distance,
    observe,
    reward,
)
from .evaluate import TRACE_SCHEMA, read_trace
from .world import ScenarioScript, advance, critical_mask, init_world

PROTOCOL_SCHEMA = "session/1"
MODES = ("simulated_user", "human_user", "replay")
DEFAULT_DWELL_THRESHOLD_MS = 250


class SessionError(RuntimeError):
    """A session was driven outside its lifecycle contract."""


def _critical_pairs(values: np.ndarray) -> list[list]:
    mask = critical_mask(values)
    return [[int(d), ATTR_NAMES[a]] for d, a in zip(*np.nonzero(mask))]


@dataclass
class Session:
    """One oversight run against a policy, ticked by the service loop."""

    session_id: str
    mode: str
    script: ScenarioScript
    reward_cfg: RewardConfig
    attention_params: AttentionParams | None
    policy: Any
    seed: int
    dt: float = 0.5
    dwell_threshold_ms: int = DEFAULT_DWELL_THRESHOLD_MS
    trace_path: Path | None = None
    replay_trace: Path | None = None

    tick_index: int = 0
    score: float = 0.0
    highlights_shown: int = 0
    paused: bool = False
    done: bool = False
    _started: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise SessionError(f"unknown mode {self.mode!r}")
        self._trace_fh = None

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> dict:
        if self._started:
            raise SessionError("session already started")
        self._started = True
        if self.trace_path is not None:
            self.trace_path.parent.mkdir(parents=True, exist_ok=True)
            self._trace_fh = self.trace_path.open("w", encoding="utf-8")
        if self.mode == "replay":
            _, self._replay_steps = read_trace(self.replay_trace)
            self.horizon = len(self._replay_steps)
        elif self.mode == "simulated_user":
            self._env = OversightEnv(
                self.script,
                self.reward_cfg,
                attention_params=self.attention_params,
                dt=self.dt,
            )
            self._env_state = self._env.reset(self.seed)
            self.policy.reset(self._env_state)
            self.horizon = self._env.horizon
        else:  # human_user: proxy belief, no sampled gaze
            self._world_rng = np.random.default_rng(np.random.SeedSequence(self.seed).spawn(2)[0])
            self._att = init_world(self.script, self.seed)
            self._usr = self._att.values.copy()
            self._hlt = np.zeros((N_DRONES, N_ATTRS), dtype=np.int8)
            self.horizon = int(round(self.script.duration_s / self.dt))
            self.policy.reset(
                EnvState(att=self._att, usr=self._usr, hlt=self._hlt, step_index=0)
            )
        self._write_trace(
            {
                "type": "header",
                "schema": TRACE_SCHEMA,
                "session": self.session_id,
                "mode": self.mode,
                "seed": self.seed,
                "policy": getattr(self.policy, "name", "none"),
            }
        )
        return {
            "type": "ack",
            "ok": True,
            "code": "hello",
            "session": self.session_id,
            "mode": self.mode,
            "dt": self.dt,
            "ticks": self.horizon,
        }

    def _write_trace(self, record: dict) -> None:
        if self._trace_fh is not None:
            self._trace_fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._trace_fh.flush()

    def close(self) -> None:
        if self._trace_fh is not None:
            self._trace_fh.close()
            self._trace_fh = None

    # -- stepping --------------------------------------------------------------

    def tick(self) -> dict:
        """Advance one step and emit the frame message."""
        if not self._started or self.done:
            raise SessionError("tick on a closed or unstarted session")
        if self.mode == "replay":
            frame = self._tick_replay()
        elif self.mode == "simulated_user":
            frame = self._tick_simulated()
        else:
            frame = self._tick_human()
        self.tick_index += 1
        if self.tick_index >= self.horizon:
            self.done = True
        return frame

    def _frame(self, att_values: np.ndarray, hlt: np.ndarray) -> dict:
        return {
            "type": "frame",
            "tick": self.tick_index + 1,
            "att": flatten(att_values),
            "hlt": [int(b) for b in np.asarray(hlt).reshape(-1)],
            "score": self.score,
            "events": _critical_pairs(att_values),
        }

    def _tick_simulated(self) -> dict:
        state = self._env_state
        bits = self.policy.act(state, observe(state), None)
        state, r, done, info = self._env.step(bits)
        self._env_state = state
        self.score += r
        self.highlights_shown += info["n_highlights"]
        fd, fa = info["fixation"]
        self._write_trace(
            {
                "type": "step",
                "step": state.step_index,
                "t": state.att.time,
                "s_att": flatten(state.att.values),
                "s_usr": flatten(state.usr),
                "s_hlt": [int(b) for b in state.hlt.reshape(-1)],
                "action": [int(b) for b in bits.reshape(-1)],
                "fixation": [fd, ATTR_NAMES[fa]],
                "reward": r,
            }
        )
        return self._frame(state.att.values, state.hlt)

    def _tick_human(self) -> dict:
        self._att = advance(self._att, self.script, self.dt, self._world_rng)
        state = EnvState(
            att=self._att, usr=self._usr, hlt=self._hlt, step_index=self.tick_index
        )
        bits = self.policy.act(state, observe(state), None)
        self._hlt = np.asarray(bits, dtype=np.int8).reshape(N_DRONES, N_ATTRS)
        post = EnvState(
            att=self._att, usr=self._usr, hlt=self._hlt, step_index=self.tick_index + 1
        )
        r = reward(post, self.reward_cfg)
        self.score += r
        self.highlights_shown += int(self._hlt.sum())
        self._write_trace(
            {
                "type": "step",
                "step": self.tick_index + 1,
                "t": self._att.time,
                "s_att": flatten(self._att.values),
                "s_usr": flatten(self._usr),
                "s_hlt": [int(b) for b in self._hlt.reshape(-1)],
                "action": [int(b) for b in self._hlt.reshape(-1)],
                "fixation": None,
                "reward": r,
            }
        )
        return self._frame(self._att.values, self._hlt)

    def _tick_replay(self) -> dict:
        rec = self._replay_steps[self.tick_index]
        self.score += rec["reward"]
        self.highlights_shown += int(sum(rec["s_hlt"]))
        att = np.array(rec["s_att"]).reshape(N_DRONES, N_ATTRS)
        return self._frame(att, rec["s_hlt"])

    # -- client events ----------------------------------------------------------

    def handle_message(self, msg: dict) -> dict | None:
        kind = msg.get("type")
        if kind == "fixation":
            return self.handle_fixation(msg)
        if kind == "pause":
            self.paused = True
            return {"type": "ack", "ok": True, "code": "paused"}
        if kind == "resume":
            self.paused = False
            return {"type": "ack", "ok": True, "code": "resumed"}
        return {"type": "ack", "ok": False, "code": "unknown_message", "detail": str(kind)}

    def handle_fixation(self, event: dict) -> dict:
        """Apply one reported fixation to the proxy belief."""
        if self.done or not self._started:
            raise SessionError("fixation on a closed session")
        attr_name = event.get("attr")
        drone = event.get("drone")
        if (
            not isinstance(drone, int)
            or not 0 <= drone < N_DRONES
            or attr_name not in ATTR_INDEX
        ):
            return {
                "type": "ack",
                "ok": False,
                "code": "unknown_pair",
                "detail": f"drone={drone!r} attr={attr_name!r}",
            }
        dwell = int(event.get("dwell_ms", 0))
        if dwell < self.dwell_threshold_ms:
            return {
                "type": "ack",
                "ok": True,
                "code": "below_threshold",
                "drone": drone,
                "attr": attr_name,
                "dwell_ms": dwell,
            }
        if self.mode != "human_user":
            return {"type": "ack", "ok": False, "code": "not_human_mode"}
        attr = ATTR_INDEX[attr_name]
        self._usr[drone, attr] = self._att.values[drone, attr]
        self._write_trace(
            {
                "type": "fixation_event",
                "tick": self.tick_index,
                "drone": drone,
                "attr": attr_name,
                "dwell_ms": dwell,
            }
        )
        return {
            "type": "ack",
            "ok": True,
            "code": "applied",
            "drone": drone,
            "attr": attr_name,
            "dwell_ms": dwell,
        }

    def end_message(self) -> dict:
        """Summary emitted when the session finishes or the client leaves."""
        belief = None
        if self.mode == "simulated_user" and self.tick_index:
            belief = belief_distance(
                self._env_state.att, self._env_state.usr, self.reward_cfg.weights
            )
        elif self.mode == "human_user" and self.tick_index:
            belief = belief_distance(self._att, self._usr, self.reward_cfg.weights)
        return {
            "type": "end",
            "report": {
                "session": self.session_id,
                "mode": self.mode,
                "ticks": self.tick_index,
                "score": self.score,
                "highlights_shown": self.highlights_shown,
                "final_belief_distance": belief,
                "trace_path": str(self.trace_path) if self.trace_path else None,
            },
        }
