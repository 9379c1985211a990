"""Bundled, ready-to-run scenario files."""

from __future__ import annotations

from importlib import resources

from .scenario_io import ScenarioDocument, parse_scenario_file

DESCRIPTIONS = {
    "sec5a_replay": "8-agent path, combinational triggering; sensor replay "
                    "silences agent 4 (a vertex cut) at t >= 5.1 s",
    "sec5b_actuator": "4-agent path, state-based triggering; constant actuator "
                      "injection -1 on agent 2 from t = 6 s",
    "example1_cut": "two 4-cliques bridged through agents 5-6-7; replay on "
                    "agents 5 and 7 severs the bridge",
}


def list_fixtures() -> list:
    """Stable (name, description) listing of the bundled scenarios."""
    return sorted(DESCRIPTIONS.items())


def fixture_text(name: str) -> str:
    if name not in DESCRIPTIONS:
        known = ", ".join(sorted(DESCRIPTIONS))
        raise KeyError(f"unknown fixture {name!r}; bundled fixtures: {known}")
    return (resources.files(__package__) / "fixtures" / f"{name}.yaml").read_text()


def load_fixture(name: str) -> ScenarioDocument:
    """Parse a bundled fixture by name."""
    if name not in DESCRIPTIONS:
        known = ", ".join(sorted(DESCRIPTIONS))
        raise KeyError(f"unknown fixture {name!r}; bundled fixtures: {known}")
    with resources.as_file(
        resources.files(__package__) / "fixtures" / f"{name}.yaml"
    ) as path:
        return parse_scenario_file(path)
