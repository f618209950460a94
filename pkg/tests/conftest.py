import pytest

from diarkit.pipeline import synthesize_corpus


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory):
    """Small ready-to-run corpus shared by pipeline and CLI tests."""
    root = tmp_path_factory.mktemp("corpus")
    config_path = synthesize_corpus(
        root, num_recordings=3, min_speakers=2, max_speakers=4, duration=60.0, seed=11
    )
    return config_path


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collector for one verdict line per acceptance criterion.

    The lines are echoed in the terminal summary so a plain ``pytest`` run
    shows every criterion's pass/fail status in one place.
    """
    log: list[str] = []
    request.config._acceptance_log = log
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "_acceptance_log", None)
    if log:
        terminalreporter.section("acceptance criteria")
        for line in log:
            terminalreporter.write_line(line)
