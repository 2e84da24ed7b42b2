import pytest

from lively.config import default_config, default_platform, load_config, data_path

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def config():
    return default_config()


@pytest.fixture
def expressive_config():
    return load_config(data_path("expressive_config.json"))


@pytest.fixture
def humanoid():
    return default_platform("platform_humanoid.json")


@pytest.fixture
def deskbot():
    return default_platform("platform_deskbot.json")
