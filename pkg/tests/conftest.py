import functools

import pytest

from gatesim import ScenarioConfig, run


@functools.lru_cache(maxsize=None)
def cached_report(cfg: ScenarioConfig):
    """Memoised run; several acceptance checks share the same sweep points."""
    return run(cfg).report


@pytest.fixture
def defaults():
    return ScenarioConfig()


def tiny_config() -> ScenarioConfig:
    """A scenario that finishes in a few hundred slots."""
    return ScenarioConfig(num_aps=2, num_ues=3, grt_s=1200.0, mean_file_bytes=2e8,
                          rng_seed=7).replace(gate_geometry__width_m=2.0,
                                              gate_geometry__exit=(2.0, 5.0))


@pytest.fixture
def tiny():
    return tiny_config()


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the terminal summary, then assert."""
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
