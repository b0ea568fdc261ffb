import pytest


def pytest_addoption(parser):
    parser.addoption("--cli", required=True, help="path to the freesing executable")
    parser.addoption("--configs", required=True, help="directory with the shipped TOML configs")
    parser.addoption("--schema", required=True, help="path to report.schema.json")


@pytest.fixture(scope="session")
def cli(request):
    return request.config.getoption("--cli")


@pytest.fixture(scope="session")
def configs(request):
    return request.config.getoption("--configs")


@pytest.fixture(scope="session")
def schema(request):
    import json

    with open(request.config.getoption("--schema")) as f:
        return json.load(f)
