import pytest

from rdlab.config import ExperimentConfig
from rdlab.stepper import run

_ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    def _report(number: int, passed: bool, detail: str) -> None:
        _ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pair_run():
    """Default rough-IC pair run: n=1, L=200, h=0.5, uniform noise on [0, 2], T=200."""
    cfg = ExperimentConfig()
    series, _ = run(cfg.domain, cfg.model, cfg.initial, cfg.stepper, cfg.schedule.build(), seed=cfg.seed)
    return cfg, series
