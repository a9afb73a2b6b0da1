"""Seeded episode runner, step traces, and the evaluation report.

Every statistic in a report is recomputable from the persisted traces;
the trace is the source of truth, the report a fold over it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attributes import ATTRS, ATTR_NAMES, N_ATTRS, N_DRONES, flatten
from .env import OversightEnv, observe
from .schemas import check_schema
from .world import critical_mask

TRACE_SCHEMA = "trace/1"
REPORT_SCHEMA = "evalreport/1"

# A fixation on a highlighted pair counts as acknowledged if the policy
# drops that highlight within this many subsequent steps.
CLEAR_WINDOW_STEPS = 2


class TraceWriter:
    """Append-only JSON-lines step log, flushed per record."""

    def __init__(self, path: str | Path, header: dict):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8")
        self.write({"type": "header", "schema": TRACE_SCHEMA, **header})

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_trace(path: str | Path) -> tuple[dict, list[dict]]:
    """Load a trace file into (header, step records)."""
    header: dict = {}
    steps: list[dict] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            if record.get("type") == "header":
                check_schema(record, TRACE_SCHEMA, where=str(path))
                header = record
            elif record.get("type") == "step":
                steps.append(record)
    return header, steps


@dataclass
class EpisodeResult:
    seed: int
    total_reward: float
    steps: int
    belief_distance_sum: float
    highlights_sum: int
    detections: list[dict] = field(default_factory=list)
    clear_occurrences: int = 0
    clear_within_window: int = 0
    trace_path: str | None = None


def run_episode(
    env: OversightEnv,
    policy,
    seed: int,
    rng: np.random.Generator | None = None,
    trace_writer: TraceWriter | None = None,
) -> EpisodeResult:
    """One seeded episode; tracks detection latency and highlight clearing."""
    state = env.reset(seed)
    policy.reset(state)
    weights = env.reward_cfg.weights

    total_reward = 0.0
    belief_sum = 0.0
    highlight_sum = 0
    prev_crit = critical_mask(state.att.values)
    open_onsets: dict[tuple[int, int], int] = {}
    detections: list[dict] = []
    pending_clears: list[dict] = []  # fixated-while-highlighted pairs awaiting clearing
    occurrences = 0
    cleared = 0

    done = False
    while not done:
        bits = policy.act(state, observe(state), rng)
        for pend in pending_clears:
            pend["attempts"] += 1
            d, a = pend["pair"]
            if bits[d, a] == 0:
                cleared += 1
                pend["closed"] = True
            elif pend["attempts"] >= CLEAR_WINDOW_STEPS:
                pend["closed"] = True
        pending_clears = [p for p in pending_clears if not p["closed"]]
        state, r, done, info = env.step(bits)
        total_reward += r
        belief_sum += info["belief_distance"]
        highlight_sum += info["n_highlights"]

        crit = critical_mask(state.att.values)
        for d, a in zip(*np.nonzero(crit & ~prev_crit)):
            open_onsets.setdefault((int(d), int(a)), state.step_index)
        prev_crit = crit
        for pair, onset_step in list(open_onsets.items()):
            if ATTRS[pair[1]].is_critical(float(state.usr[pair[0], pair[1]])):
                detections.append(
                    {
                        "drone": pair[0],
                        "attr": ATTR_NAMES[pair[1]],
                        "onset_step": onset_step,
                        "latency_steps": state.step_index - onset_step,
                    }
                )
                del open_onsets[pair]

        fd, fa = info["fixation"]
        if state.hlt[fd, fa] == 1 and not done:
            occurrences += 1
            pending_clears.append({"pair": (fd, fa), "attempts": 0, "closed": False})

        if trace_writer is not None:
            trace_writer.write(
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

    for pair, onset_step in open_onsets.items():
        detections.append(
            {
                "drone": pair[0],
                "attr": ATTR_NAMES[pair[1]],
                "onset_step": onset_step,
                "latency_steps": None,
            }
        )

    return EpisodeResult(
        seed=seed,
        total_reward=total_reward,
        steps=state.step_index,
        belief_distance_sum=belief_sum,
        highlights_sum=highlight_sum,
        detections=detections,
        clear_occurrences=occurrences,
        clear_within_window=cleared,
        trace_path=str(trace_writer.path) if trace_writer else None,
    )


@dataclass
class EvalReport:
    policy: str
    scenario: str
    n_episodes: int
    base_seed: int
    seeds: list[int]
    argmax: bool
    mean_episode_reward: float
    std_episode_reward: float
    episode_rewards: list[float]
    mean_belief_distance_per_step: float
    mean_highlights_per_step: float
    detection: dict
    highlight_clearing: dict
    trace_paths: list[str]

    def to_dict(self) -> dict:
        return {"schema": REPORT_SCHEMA, **self.__dict__}


def evaluate(
    policy,
    env_factory,
    n_episodes: int,
    base_seed: int = 0,
    trace_dir: str | Path | None = None,
    policy_seed: int | None = None,
    scenario_name: str = "",
    argmax: bool = True,
) -> EvalReport:
    """Run seeded episodes and fold their traces into an EvalReport.

    Stochastic policies draw from a stream derived from ``policy_seed``
    (defaults to base_seed) so reports are reproducible.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    env = env_factory()
    rng = np.random.default_rng(np.random.SeedSequence((policy_seed if policy_seed is not None else base_seed, 0xA5)))
    results: list[EpisodeResult] = []
    for i in range(n_episodes):
        seed = base_seed + i
        writer = None
        if trace_dir is not None:
            name = getattr(policy, "name", "policy")
            writer = TraceWriter(
                Path(trace_dir) / f"{name}_ep{i:03d}.jsonl",
                header={
                    "policy": name,
                    "scenario": scenario_name,
                    "seed": seed,
                    "episode": i,
                },
            )
        try:
            results.append(run_episode(env, policy, seed, rng=rng, trace_writer=writer))
        finally:
            if writer is not None:
                writer.close()

    rewards = np.array([r.total_reward for r in results])
    total_steps = sum(r.steps for r in results)
    latencies = [
        d["latency_steps"]
        for r in results
        for d in r.detections
        if d["latency_steps"] is not None
    ]
    n_events = sum(len(r.detections) for r in results)
    occurrences = sum(r.clear_occurrences for r in results)
    cleared = sum(r.clear_within_window for r in results)
    episode_clear_flags = [
        r.clear_within_window >= max(1, r.clear_occurrences) * 0.5
        for r in results
        if r.clear_occurrences > 0
    ]
    return EvalReport(
        policy=getattr(policy, "name", "policy"),
        scenario=scenario_name,
        n_episodes=n_episodes,
        base_seed=base_seed,
        seeds=[r.seed for r in results],
        argmax=argmax,
        mean_episode_reward=float(rewards.mean()),
        std_episode_reward=float(rewards.std()),
        episode_rewards=[float(r) for r in rewards],
        mean_belief_distance_per_step=float(
            sum(r.belief_distance_sum for r in results) / total_steps
        ),
        mean_highlights_per_step=float(sum(r.highlights_sum for r in results) / total_steps),
        detection={
            "events": n_events,
            "detected": len(latencies),
            "mean_latency_steps": float(np.mean(latencies)) if latencies else None,
            "latencies_steps": latencies,
        },
        highlight_clearing={
            "fixations_on_highlight": occurrences,
            "cleared_within_2_steps": cleared,
            "clear_rate": (cleared / occurrences) if occurrences else None,
            "episodes_with_occurrence": len(episode_clear_flags),
            "episode_clear_rate": (
                float(np.mean(episode_clear_flags)) if episode_clear_flags else None
            ),
        },
        # File names only, relative to the trace directory, so reports are
        # byte-identical across output locations.
        trace_paths=[Path(r.trace_path).name for r in results if r.trace_path],
    )


def recompute_from_trace(path: str | Path, weights: np.ndarray, highlight_penalty: float) -> dict:
    """Re-derive headline statistics from a stored trace (integrity check)."""
    _, steps = read_trace(path)
    total = 0.0
    belief = 0.0
    highlights = 0
    for rec in steps:
        att = np.array(rec["s_att"]).reshape(N_DRONES, N_ATTRS)
        usr = np.array(rec["s_usr"]).reshape(N_DRONES, N_ATTRS)
        hlt = np.array(rec["s_hlt"]).reshape(N_DRONES, N_ATTRS)
        d = float(np.sum(weights * np.abs(att - usr)))
        total += -d - highlight_penalty * float(hlt.sum())
        belief += d
        highlights += int(hlt.sum())
    return {
        "total_reward": total,
        "recorded_reward": sum(r["reward"] for r in steps),
        "mean_belief_distance_per_step": belief / len(steps) if steps else 0.0,
        "mean_highlights_per_step": highlights / len(steps) if steps else 0.0,
        "steps": len(steps),
    }
