"""Canonical drone-attribute table.

Every component indexes the same 4 drones x 8 attributes.  The attribute
order below is fixed: serialized vectors (observations, wire frames, trace
records) always list values drone-major in this attribute order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_DRONES = 4
N_ATTRS = 8
N_PAIRS = N_DRONES * N_ATTRS


@dataclass(frozen=True)
class AttrSpec:
    """One monitored attribute and the bounds used for clamping/normalizing.

    ``crit_below``/``crit_above`` define when a value counts as critical
    (used by scenario authoring and the rule-based baseline, not by the
    learned policy).
    """

    index: int
    name: str
    unit: str
    lo: float
    hi: float
    binary: bool
    default: float
    crit_below: float | None = None
    crit_above: float | None = None

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def is_critical(self, value: float) -> bool:
        if self.crit_below is not None and value < self.crit_below:
            return True
        if self.crit_above is not None and value > self.crit_above:
            return True
        return False


ATTRS: tuple[AttrSpec, ...] = (
    AttrSpec(0, "horizontal_velocity", "m/s", 0.0, 30.0, False, 5.0),
    AttrSpec(1, "vertical_velocity", "m/s", 0.0, 10.0, False, 0.0),
    AttrSpec(2, "altitude", "m", 0.0, 150.0, False, 50.0),
    AttrSpec(3, "battery", "frac", 0.0, 1.0, False, 1.0, crit_below=0.2),
    AttrSpec(4, "rotor", "on/off", 0.0, 1.0, True, 1.0, crit_below=0.5),
    AttrSpec(5, "wind_speed", "m/s", 0.0, 25.0, False, 3.0, crit_above=10.0),
    AttrSpec(6, "distance_to_target", "m", 0.0, 2000.0, False, 500.0),
    AttrSpec(7, "no_fly_zone", "in/out", 0.0, 1.0, True, 0.0, crit_above=0.5),
)

ATTR_NAMES: tuple[str, ...] = tuple(a.name for a in ATTRS)
ATTR_INDEX: dict[str, int] = {a.name: a.index for a in ATTRS}

BATTERY = ATTR_INDEX["battery"]
ROTOR = ATTR_INDEX["rotor"]

# Vector views of the table, shape (8,), for array-wide operations.
LO = np.array([a.lo for a in ATTRS])
HI = np.array([a.hi for a in ATTRS])
WIDTH = HI - LO
DEFAULTS = np.array([a.default for a in ATTRS])
BINARY_MASK = np.array([a.binary for a in ATTRS])

# Attributes that may carry scripted jitter.  Binary attributes must stay
# exact and battery must never drift upward, so both are excluded.
JITTERABLE_MASK = np.array(
    [not a.binary and a.name != "battery" for a in ATTRS]
)


def attr_by_name(name: str) -> AttrSpec:
    try:
        return ATTRS[ATTR_INDEX[name]]
    except KeyError:
        raise KeyError(f"unknown attribute {name!r}; expected one of {list(ATTR_NAMES)}") from None


def pair_index(drone: int, attr: int) -> int:
    """Flat index of a (drone, attribute) pair in canonical order."""
    return drone * N_ATTRS + attr


def pair_of(index: int) -> tuple[int, int]:
    return divmod(index, N_ATTRS)


def normalize(values: np.ndarray) -> np.ndarray:
    """Min-max normalize a (4, 8) value grid to [0, 1] per attribute."""
    return (values - LO) / WIDTH


def flatten(values: np.ndarray) -> list[float]:
    """Serialize a (4, 8) grid to the canonical 32-entry list."""
    return [float(v) for v in np.asarray(values).reshape(N_PAIRS)]
