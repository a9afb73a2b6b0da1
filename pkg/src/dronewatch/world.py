"""Ground-truth fleet simulator.

Attribute trajectories are driven by a scripted scenario: per-pair events
(set / ramp / hold) over a baseline, plus bounded uniform jitter on the
continuous attributes.  The nominal (jitter-free) trajectory is a pure
function of (script, time), so replicas advancing with equal random
streams produce bit-identical states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attributes import (
    ATTRS,
    ATTR_INDEX,
    ATTR_NAMES,
    BATTERY,
    DEFAULTS,
    HI,
    JITTERABLE_MASK,
    LO,
    N_ATTRS,
    N_DRONES,
    ROTOR,
)
from .schemas import SchemaError, dump_document, load_document, require

SCENARIO_SCHEMA = "scenario/1"
EVENT_KINDS = ("set", "ramp", "hold")


class ScriptError(ValueError):
    """Scenario script failed validation."""


class EpisodeOver(RuntimeError):
    """Raised when advancing would pass the scripted duration."""


@dataclass(frozen=True)
class ScriptEvent:
    t_start: float
    t_end: float
    drone: int
    attr: int
    kind: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioScript:
    duration_s: float
    events: tuple[ScriptEvent, ...]
    jitter: np.ndarray      # (8,) amplitudes, zero where not jitterable
    baselines: np.ndarray   # (8,) initial value per attribute, all drones
    seed_base: int = 0
    name: str = ""

    def __post_init__(self):
        by_pair: dict[tuple[int, int], list[ScriptEvent]] = {}
        for ev in self.events:
            by_pair.setdefault((ev.drone, ev.attr), []).append(ev)
        for evs in by_pair.values():
            evs.sort(key=lambda e: e.t_start)
        object.__setattr__(self, "_pair_events_cache", by_pair)

    @property
    def horizon(self) -> float:
        return self.duration_s


@dataclass(frozen=True)
class AttributeState:
    """Displayed value of every drone-attribute pair at one instant."""

    values: np.ndarray  # (4, 8), row per drone
    time: float

    def value(self, drone: int, attr: int | str) -> float:
        if isinstance(attr, str):
            attr = ATTR_INDEX[attr]
        return float(self.values[drone, attr])


def _check_event(ev: ScriptEvent, i: int, duration: float) -> None:
    where = f"events[{i}]"
    if not 0 <= ev.drone < N_DRONES:
        raise ScriptError(f"{where}: drone {ev.drone} out of range")
    if not 0 <= ev.attr < N_ATTRS:
        raise ScriptError(f"{where}: attr {ev.attr} out of range")
    if ev.kind not in EVENT_KINDS:
        raise ScriptError(f"{where}: unknown kind {ev.kind!r}")
    if not (0.0 <= ev.t_start <= ev.t_end <= duration):
        raise ScriptError(
            f"{where}: times [{ev.t_start}, {ev.t_end}] outside [0, {duration}] or reversed"
        )
    arity = {"set": 1, "ramp": 2, "hold": 0}[ev.kind]
    if len(ev.values) != arity:
        raise ScriptError(f"{where}: kind {ev.kind!r} needs {arity} value(s), got {len(ev.values)}")
    spec = ATTRS[ev.attr]
    for v in ev.values:
        if not spec.lo <= v <= spec.hi:
            raise ScriptError(f"{where}: value {v} outside {spec.name} range [{spec.lo}, {spec.hi}]")
        if spec.binary and v not in (0.0, 1.0):
            raise ScriptError(f"{where}: {spec.name} is binary, value must be 0 or 1")
    if spec.binary and ev.kind == "ramp":
        raise ScriptError(f"{where}: binary attribute {spec.name} cannot ramp")


def validate_script(script: ScenarioScript) -> ScenarioScript:
    """Check ranges, ordering, and per-pair window overlaps; returns input."""
    if script.duration_s <= 0:
        raise ScriptError(f"duration_s must be positive, got {script.duration_s}")
    for i, ev in enumerate(script.events):
        _check_event(ev, i, script.duration_s)
    for i in range(1, len(script.events)):
        if script.events[i].t_start < script.events[i - 1].t_start:
            raise ScriptError(f"events[{i}] not sorted by t_start")
    # Two events steering the same pair over overlapping windows are
    # contradictory: a pair has exactly one scripted owner at a time.
    by_pair: dict[tuple[int, int], list[tuple[int, ScriptEvent]]] = {}
    for i, ev in enumerate(script.events):
        by_pair.setdefault((ev.drone, ev.attr), []).append((i, ev))
    for (drone, attr), evs in by_pair.items():
        for (i, a), (j, b) in zip(evs, evs[1:]):
            if b.t_start <= a.t_end and not (a.t_start == a.t_end == b.t_start == b.t_end and a.values == b.values):
                raise ScriptError(
                    f"events[{i}] and events[{j}] overlap on drone {drone} "
                    f"attribute {ATTR_NAMES[attr]} ([{a.t_start},{a.t_end}] vs [{b.t_start},{b.t_end}])"
                )
    jit = np.asarray(script.jitter, dtype=float)
    if jit.shape != (N_ATTRS,):
        raise ScriptError(f"jitter must have {N_ATTRS} entries")
    if np.any(jit < 0):
        raise ScriptError("jitter amplitudes must be non-negative")
    bad = np.flatnonzero((jit > 0) & ~JITTERABLE_MASK)
    if bad.size:
        raise ScriptError(f"jitter not allowed on {ATTR_NAMES[bad[0]]}")
    base = np.asarray(script.baselines, dtype=float)
    if base.shape != (N_ATTRS,):
        raise ScriptError(f"baselines must have {N_ATTRS} entries")
    for a, spec in enumerate(ATTRS):
        if not spec.lo <= base[a] <= spec.hi:
            raise ScriptError(f"baseline for {spec.name} outside [{spec.lo}, {spec.hi}]")
        if spec.binary and base[a] not in (0.0, 1.0):
            raise ScriptError(f"baseline for binary {spec.name} must be 0 or 1")
    return script


def _pair_events(script: ScenarioScript) -> dict[tuple[int, int], list[ScriptEvent]]:
    return script._pair_events_cache


def _nominal_pair(evs: list[ScriptEvent], baseline: float, t: float) -> tuple[float, bool]:
    """Scripted value of one pair at time t, plus whether a window pins it."""
    v = baseline
    for ev in evs:
        if t < ev.t_start:
            break
        if ev.kind == "set":
            v0 = v1 = ev.values[0]
        elif ev.kind == "ramp":
            v0, v1 = ev.values
        else:  # hold captures the scripted value at window entry
            v0 = v1 = v
        if t <= ev.t_end:
            if ev.kind == "ramp" and ev.t_end > ev.t_start:
                frac = (t - ev.t_start) / (ev.t_end - ev.t_start)
                return v0 + frac * (v1 - v0), True
            return v1, True
        v = v1
    return v, False


def nominal_grid(script: ScenarioScript, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Jitter-free (4, 8) value grid at time t and the pinned-window mask."""
    values = np.tile(script.baselines, (N_DRONES, 1))
    pinned = np.zeros((N_DRONES, N_ATTRS), dtype=bool)
    for (d, a), evs in _pair_events(script).items():
        values[d, a], pinned[d, a] = _nominal_pair(evs, float(script.baselines[a]), t)
    return values, pinned


def init_world(script: ScenarioScript, seed: int) -> AttributeState:
    """State at time 0 with baselines and any t=0 events applied.

    Jitter starts on the first advance, so the result depends only on the
    script; the seed is part of the signature for symmetry with advance.
    """
    validate_script(script)
    values, _ = nominal_grid(script, 0.0)
    return AttributeState(values=np.clip(values, LO, HI), time=0.0)


def advance(
    state: AttributeState,
    script: ScenarioScript,
    dt: float,
    rng: np.random.Generator,
) -> AttributeState:
    """Advance the fleet by dt: apply scripted events, jitter, and clamps.

    Draws exactly one (4, 8) uniform block from ``rng`` regardless of the
    jitter configuration, so streams stay aligned across configs.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t_new = state.time + dt
    if t_new > script.duration_s + 1e-9:
        raise EpisodeOver(f"advancing to t={t_new:.3f} exceeds duration {script.duration_s}")
    nominal, pinned = nominal_grid(script, t_new)
    noise = rng.uniform(-1.0, 1.0, size=(N_DRONES, N_ATTRS))
    amp = np.where(JITTERABLE_MASK, script.jitter, 0.0)
    values = nominal + noise * amp * ~pinned
    values = np.clip(values, LO, HI)
    # Battery never recovers in flight: while the rotor runs, the displayed
    # battery is the running minimum of its scripted trajectory.
    running = values[:, ROTOR] == 1.0
    values[running, BATTERY] = np.minimum(
        values[running, BATTERY], state.values[running, BATTERY]
    )
    return AttributeState(values=values, time=t_new)


def is_critical(state: AttributeState, drone: int, attr: int | str) -> bool:
    """Whether one pair currently violates its criticality threshold."""
    if isinstance(attr, str):
        attr = ATTR_INDEX[attr]
    return ATTRS[attr].is_critical(float(state.values[drone, attr]))


def critical_mask(values: np.ndarray) -> np.ndarray:
    """(4, 8) boolean mask of critical pairs for a value grid."""
    mask = np.zeros(values.shape, dtype=bool)
    for spec in ATTRS:
        col = values[:, spec.index]
        if spec.crit_below is not None:
            mask[:, spec.index] |= col < spec.crit_below
        if spec.crit_above is not None:
            mask[:, spec.index] |= col > spec.crit_above
    return mask


# -- scenario files ---------------------------------------------------------


def script_from_dict(doc: dict, where: str = "scenario") -> ScenarioScript:
    duration = float(require(doc, "duration_s", float, where))
    baselines = DEFAULTS.copy()
    for name, value in doc.get("baselines", {}).items():
        if name not in ATTR_INDEX:
            raise SchemaError(f"{where}: baselines.{name}: unknown attribute")
        baselines[ATTR_INDEX[name]] = float(value)
    jitter = np.zeros(N_ATTRS)
    for name, value in doc.get("jitter", {}).items():
        if name not in ATTR_INDEX:
            raise SchemaError(f"{where}: jitter.{name}: unknown attribute")
        jitter[ATTR_INDEX[name]] = float(value)
    events = []
    for i, ev in enumerate(doc.get("events", [])):
        ev_where = f"{where}: events[{i}]"
        attr_name = require(ev, "attr", str, ev_where)
        if attr_name not in ATTR_INDEX:
            raise SchemaError(f"{ev_where}: unknown attribute {attr_name!r}")
        events.append(
            ScriptEvent(
                t_start=float(require(ev, "t_start", float, ev_where)),
                t_end=float(require(ev, "t_end", float, ev_where)),
                drone=int(require(ev, "drone", int, ev_where)),
                attr=ATTR_INDEX[attr_name],
                kind=str(require(ev, "kind", str, ev_where)),
                values=tuple(float(v) for v in ev.get("values", [])),
            )
        )
    events.sort(key=lambda e: e.t_start)
    script = ScenarioScript(
        duration_s=duration,
        events=tuple(events),
        jitter=jitter,
        baselines=baselines,
        seed_base=int(doc.get("seed_base", 0)),
        name=str(doc.get("name", "")),
    )
    try:
        validate_script(script)
    except ScriptError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    return script


def script_to_dict(script: ScenarioScript) -> dict:
    return {
        "schema": SCENARIO_SCHEMA,
        "name": script.name,
        "duration_s": script.duration_s,
        "seed_base": script.seed_base,
        "baselines": {ATTR_NAMES[a]: float(script.baselines[a]) for a in range(N_ATTRS)},
        "jitter": {
            ATTR_NAMES[a]: float(script.jitter[a])
            for a in range(N_ATTRS)
            if script.jitter[a] > 0
        },
        "events": [
            {
                "t_start": ev.t_start,
                "t_end": ev.t_end,
                "drone": ev.drone,
                "attr": ATTR_NAMES[ev.attr],
                "kind": ev.kind,
                "values": list(ev.values),
            }
            for ev in script.events
        ],
    }


def load_scenario(path) -> ScenarioScript:
    doc = load_document(path, SCENARIO_SCHEMA)
    return script_from_dict(doc, where=str(path))


def save_scenario(script: ScenarioScript, path) -> None:
    dump_document(script_to_dict(script), path)
