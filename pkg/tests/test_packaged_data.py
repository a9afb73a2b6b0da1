"""Packaged config files must stay in lockstep with the code defaults."""

import json
from importlib import resources

import numpy as np

from dronewatch.attention import default_params, params_from_dict
from dronewatch.cli import resolve_scenario
from dronewatch.env import default_reward_config, reward_config_from_dict
from dronewatch.ppo import PpoConfig
from dronewatch.world import critical_mask, init_world, advance


def load_data(name):
    return json.loads((resources.files("dronewatch.data") / name).read_text())


def test_attention_default_file_matches_code():
    params = params_from_dict(load_data("attention_default.json"))
    ref = default_params()
    assert np.array_equal(params.prior, ref.prior)
    assert params.highlight_boost == ref.highlight_boost
    assert params.change_boost == ref.change_boost
    assert params.temperature == ref.temperature


def test_reward_default_file_matches_code():
    cfg = reward_config_from_dict(load_data("reward_default.json"))
    ref = default_reward_config()
    assert np.array_equal(cfg.weights, ref.weights)
    assert cfg.highlight_penalty == ref.highlight_penalty == 500.0


def test_train_desk_file_matches_ppo_defaults():
    doc = load_data("train_desk.json")
    cfg = PpoConfig.from_dict(doc["ppo"])
    assert cfg == PpoConfig()
    assert doc["scenario"] == "default"
    assert cfg.total_samples == 1_000_000
    assert cfg.batch_size == 16384
    assert cfg.minibatch_size == 256
    assert cfg.epochs_per_batch == 10
    assert cfg.gamma == 0.95 and cfg.lam == 0.95 and cfg.clip_epsilon == 0.2
    assert cfg.learning_rate == 3e-4


def test_default_scenario_has_clustered_critical_events():
    from dataclasses import replace

    loaded = resolve_scenario("default")
    assert loaded.duration_s == 120.0
    # walk the jitter-free trajectory and count distinct critical onsets
    script = replace(loaded, jitter=loaded.jitter * 0.0)
    state = init_world(script, 0)
    rng = np.random.default_rng(0)
    prev = critical_mask(state.values)
    onsets = set()
    drones = set()
    for _ in range(240):
        state = advance(state, script, 0.5, rng)
        crit = critical_mask(state.values)
        for d, a in zip(*np.nonzero(crit & ~prev)):
            onsets.add((int(d), int(a)))
            drones.add(int(d))
        prev = crit
    assert len(onsets) >= 4, f"default scenario must script >=4 critical events, got {onsets}"
    assert len(drones) >= 2, "critical events must span >=2 drones"


def test_static_scenario_is_truly_static():
    script = resolve_scenario("static")
    assert len(script.events) == 0
    assert float(np.sum(script.jitter)) == 0.0


def test_rotor_scenario_scripts_rotor_failures():
    script = resolve_scenario("rotor_failure")
    from dronewatch.attributes import ATTR_INDEX

    rotor_events = [e for e in script.events if e.attr == ATTR_INDEX["rotor"]]
    failures = [e for e in rotor_events if e.values == (0.0,)]
    assert len(failures) >= 2
