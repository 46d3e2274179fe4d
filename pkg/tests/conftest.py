"""Shared fixtures: cached optimization runs for the heavy suites."""

import time

import pytest

import diffbounce as db


class RunCache:
    """Memoizes full optimization runs under the frozen optimizer config."""

    def __init__(self):
        self._runs = {}

    def get(self, scenario_name: str, model: str = "direct",
            toi_position: bool = False, toi_velocity: bool = False):
        key = (scenario_name, model, toi_position, toi_velocity)
        if key not in self._runs:
            scenario = db.load_scenario(scenario_name)
            contact = db.ContactConfig(model=model, toi_position=toi_position,
                                       toi_velocity=toi_velocity)
            started = time.perf_counter()
            result = db.optimize(scenario, contact, None, db.OptimizerConfig())
            self._runs[key] = (result, time.perf_counter() - started)
        return self._runs[key]


@pytest.fixture(scope="session")
def run_cache():
    return RunCache()
