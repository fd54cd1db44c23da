"""The four bundled scenarios, shipped as config files in package data.

- static_approach: close on a fixed buoy to a 5 m standoff and hold
- follow_approach: close from 80 m onto a moving target, hold 10 m
- follow_recede:   keep a target in frame as it accelerates away
- waypoint_square: four-corner 100 m square route
"""

from __future__ import annotations

from importlib import resources

from .config import ConfigError, Scenario, load_scenario_text

BUILTIN_SCENARIOS = ("static_approach", "follow_approach", "follow_recede",
                     "waypoint_square")


def builtin_scenario_text(name: str) -> str:
    if name not in BUILTIN_SCENARIOS:
        raise ConfigError("scenario", "name",
                          f"unknown builtin scenario {name!r}; "
                          f"known: {', '.join(BUILTIN_SCENARIOS)}")
    ref = resources.files("usvsim.data.scenarios").joinpath(f"{name}.cfg")
    return ref.read_text()


def builtin_scenario(name: str) -> Scenario:
    return load_scenario_text(builtin_scenario_text(name),
                              origin=f"builtin:{name}")


def builtin_scenarios() -> dict[str, Scenario]:
    """All bundled scenarios, loaded fresh."""
    return {name: builtin_scenario(name) for name in BUILTIN_SCENARIOS}
