import numpy as np
import pytest
import yaml

from etcsim.attack import AttackChannel
from etcsim.fixtures import DESCRIPTIONS, fixture_text, list_fixtures, load_fixture
from etcsim.scenario_io import ScenarioError, parse_scenario, scenario_from_dict
from etcsim.triggering import Mechanism


def _base_dict():
    return {
        "graph": {"n": 2, "edges": [[1, 2]]},
        "dynamics": {"a": [[0.0]], "b": [[1.0]]},
        "gain": {"k": [[1.0]]},
        "trigger": {"mechanism": "cs_etm", "eta": 0.1},
        "initial_states": [1.0, -1.0],
        "sim": {"horizon": 1.0, "dt": 0.001, "seed": 3},
    }


def test_fixtures_all_parse_clean():
    for name, _ in list_fixtures():
        doc = load_fixture(name)
        assert doc.scenario.graph.n_agents >= 2


def test_fixture_listing_is_stable():
    names = [name for name, _ in list_fixtures()]
    assert names == sorted(DESCRIPTIONS)
    for expected in ("sec5a_replay", "sec5b_actuator", "example1_cut"):
        assert expected in names
    with pytest.raises(KeyError, match="unknown fixture"):
        load_fixture("nope")


def test_actuator_fixture_contents():
    doc = load_fixture("sec5b_actuator")
    s = doc.scenario
    assert s.graph.n_agents == 4
    assert s.trigger.mechanism is Mechanism.S_ETM
    np.testing.assert_array_equal(s.trigger.eta, [0.01] * 4)
    np.testing.assert_array_equal(s.x0[:, 0], [5.0, 1.0, 0.0, -2.0])
    (attack,) = s.attacks
    assert attack.channel is AttackChannel.ACTUATOR_CONSTANT
    assert attack.agent == 2 and attack.onset == 6.0 and attack.value == -1.0
    assert s.horizon == 10.0 and s.dt == 0.001


def test_replay_fixture_contents():
    s = load_fixture("sec5a_replay").scenario
    assert s.graph.n_agents == 8
    assert s.trigger.mechanism is Mechanism.CS_ETM
    assert s.trigger.stale_after == 0.5
    np.testing.assert_array_equal(s.x0[:, 0], [6, 1, -3, 1, 2, 1, -2, -5])
    (attack,) = s.attacks
    assert attack.channel is AttackChannel.SENSOR_REPLAY
    assert attack.agent == 4 and attack.onset == 5.1


def test_eta_out_of_range_is_located():
    data = _base_dict()
    data["trigger"]["eta"] = 1.5
    with pytest.raises(ScenarioError, match=r"trigger\.eta: must lie in \(0,1\)"):
        scenario_from_dict(data)


def test_missing_edges_is_located():
    data = _base_dict()
    del data["graph"]["edges"]
    with pytest.raises(ScenarioError, match=r"graph\.edges"):
        scenario_from_dict(data)


def test_missing_section_is_located():
    data = _base_dict()
    del data["sim"]
    with pytest.raises(ScenarioError, match="sim: required section"):
        scenario_from_dict(data)


def test_bad_mechanism_is_located():
    data = _base_dict()
    data["trigger"]["mechanism"] = "periodic"
    with pytest.raises(ScenarioError, match=r"trigger\.mechanism"):
        scenario_from_dict(data)


def test_bad_attack_fields_are_located():
    data = _base_dict()
    data["attacks"] = [{"channel": "sensor_replay", "agent": 9}]
    with pytest.raises(ScenarioError, match=r"attacks\[0\]\.agent"):
        scenario_from_dict(data)
    data["attacks"] = [{"channel": "bogus", "agent": 1}]
    with pytest.raises(ScenarioError, match=r"attacks\[0\]\.channel"):
        scenario_from_dict(data)
    data["attacks"] = [{"channel": "actuator_constant", "agent": 1, "onset": 1.0}]
    with pytest.raises(ScenarioError, match=r"attacks\[0\]: actuator_constant"):
        scenario_from_dict(data)


def test_wrong_initial_state_count():
    data = _base_dict()
    data["initial_states"] = [1.0]
    with pytest.raises(ScenarioError, match="initial_states"):
        scenario_from_dict(data)


def test_semantic_failures_are_wrapped():
    data = _base_dict()
    data["gain"]["k"] = [[-1.0]]
    with pytest.raises(ScenarioError, match="scenario: gain fails"):
        scenario_from_dict(data)
    data = _base_dict()
    data["graph"] = {"n": 3, "edges": [[1, 2]]}
    data["initial_states"] = [1.0, 0.0, -1.0]
    data["trigger"]["eta"] = 0.1
    with pytest.raises(ScenarioError, match="connected"):
        scenario_from_dict(data)


def test_parse_scenario_round_trip(tmp_path):
    payload = _base_dict()
    payload["attacks"] = [
        {"channel": "actuator_signal", "agent": 1, "onset": 0.5,
         "signal": [[0.5, 1.0], [0.8, -1.0]]},
    ]
    path = tmp_path / "demo.yaml"
    path.write_text(yaml.safe_dump(payload))
    scenario = parse_scenario(path)
    assert scenario.graph.n_agents == 2
    assert scenario.attacks[0].signal(0.6) == 1.0
    assert scenario.seed == 3


def test_parse_rejects_bad_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("graph: [unclosed")
    with pytest.raises(ScenarioError, match="not valid YAML"):
        parse_scenario(path)


def test_fixture_text_is_commented_yaml():
    text = fixture_text("sec5a_replay")
    assert text.lstrip().startswith("#")
    assert "stale_after" in text
