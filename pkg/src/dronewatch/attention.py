"""Probabilistic model of where the user looks next.

Each pair gets an additive score: a per-attribute habit prior, a boost for
being highlighted, and (optionally) a boost proportional to how much its
value just changed.  A softmax over the 32 scores gives the fixation
distribution.  Any callable with the same frame -> distribution signature
can replace this model in the environment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attributes import ATTR_INDEX, ATTR_NAMES, N_ATTRS, N_DRONES, N_PAIRS, WIDTH
from .schemas import SchemaError, dump_document, load_document, require
from .world import AttributeState

ATTENTION_SCHEMA = "attention/1"


@dataclass(frozen=True)
class AttentionParams:
    prior: np.ndarray        # (8,) habitual viewing weight per attribute
    highlight_boost: float   # added to a pair's score while highlighted
    change_boost: float      # scales normalized per-step value change
    temperature: float

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=float)
        if prior.shape != (N_ATTRS,):
            raise ValueError(f"prior must have {N_ATTRS} entries")
        if np.any(prior < 0) or not np.any(prior > 0):
            raise ValueError("prior weights must be >= 0 with at least one > 0")
        if self.highlight_boost < 0 or self.change_boost < 0:
            raise ValueError("boosts must be non-negative")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        object.__setattr__(self, "prior", prior)


@dataclass(frozen=True)
class InterfaceFrame:
    """What the interface shows this step: values, highlights, last values."""

    att: AttributeState
    hlt: np.ndarray                      # (4, 8) binary
    prev_att: AttributeState | None = None


@dataclass(frozen=True)
class GazeDistribution:
    p: np.ndarray  # (4, 8), non-negative, sums to 1

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (N_DRONES, N_ATTRS):
            raise ValueError(f"p must be ({N_DRONES}, {N_ATTRS})")
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError("p must be a normalized distribution")
        object.__setattr__(self, "p", p)


def default_params() -> AttentionParams:
    """Habit prior favoring rotor and battery; boost sized so one highlight
    captures at least half the probability mass whatever the pair's prior."""
    prior = np.ones(N_ATTRS)
    prior[ATTR_INDEX["rotor"]] = 2.0
    prior[ATTR_INDEX["battery"]] = 2.0
    return AttentionParams(
        prior=prior, highlight_boost=4.5, change_boost=0.0, temperature=1.0
    )


def predict(frame: InterfaceFrame, params: AttentionParams) -> GazeDistribution:
    """Fixation distribution over the 32 pairs for the frame."""
    scores = np.tile(params.prior, (N_DRONES, 1))
    scores = scores + params.highlight_boost * np.asarray(frame.hlt, dtype=float)
    if params.change_boost > 0 and frame.prev_att is not None:
        delta = np.abs(frame.att.values - frame.prev_att.values) / WIDTH
        scores = scores + params.change_boost * delta
    z = scores / params.temperature
    z = z - z.max()
    e = np.exp(z)
    return GazeDistribution(p=e / e.sum())


def sample_fixation(
    dist: GazeDistribution, rng: np.random.Generator
) -> tuple[int, int]:
    """Draw one (drone, attr) pair from the distribution."""
    cum = np.cumsum(dist.p.reshape(N_PAIRS))
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    idx = min(idx, N_PAIRS - 1)
    return divmod(idx, N_ATTRS)


# -- parameter files --------------------------------------------------------


def params_from_dict(doc: dict, where: str = "attention params") -> AttentionParams:
    prior_doc = require(doc, "prior", dict, where)
    prior = np.ones(N_ATTRS)
    for name, value in prior_doc.items():
        if name not in ATTR_INDEX:
            raise SchemaError(f"{where}: prior.{name}: unknown attribute")
        prior[ATTR_INDEX[name]] = float(value)
    params = AttentionParams(
        prior=prior,
        highlight_boost=float(require(doc, "highlight_boost", float, where)),
        change_boost=float(require(doc, "change_boost", float, where)),
        temperature=float(require(doc, "temperature", float, where)),
    )
    return params


def params_to_dict(params: AttentionParams) -> dict:
    return {
        "schema": ATTENTION_SCHEMA,
        "prior": {ATTR_NAMES[a]: float(params.prior[a]) for a in range(N_ATTRS)},
        "highlight_boost": params.highlight_boost,
        "change_boost": params.change_boost,
        "temperature": params.temperature,
    }


def load_params(path) -> AttentionParams:
    doc = load_document(path, ATTENTION_SCHEMA)
    try:
        return params_from_dict(doc, where=str(path))
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{path}: {exc}") from exc


def save_params(params: AttentionParams, path) -> None:
    dump_document(params_to_dict(params), path)
