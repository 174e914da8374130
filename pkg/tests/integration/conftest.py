"""Acceptance run wiring for pytest."""
from convex_dynamics.config import Config
from convex_dynamics.logs import RunLogCollector

run_config = Config(config_path='tests/integration/pytest.cfg')
collector = RunLogCollector(log_path=run_config.log_path)


def pytest_configure(config):
    """Run prior to any test - start collecting the run log."""
    collector.start()


def pytest_unconfigure(config):
    """Run post all tests - stop collecting the run log."""
    collector.stop()


def pytest_runtest_setup(item):
    """Run on test start.

    - Assign the run configuration to the test.
    - Write a test started log message to the run log.
    """
    item.parent.obj.config = run_config
    collector.update(item.nodeid)
