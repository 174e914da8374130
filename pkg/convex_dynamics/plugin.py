# pylint: disable=unused-argument
import os

from nose2.events import Plugin

from convex_dynamics.config import Config
from convex_dynamics.logs import RunLogCollector


class StrictModePlugin(Plugin):
    """Nose2 plugin, used for running the dynamics tests in strict mode with a pinned seed."""
    configSection = 'convexdyn'
    commandLineSwitch = (None, 'strict-mode', 'Run convex dynamics tests in strict mode with a pinned seed')

    def __init__(self, *args, **kwargs):
        self.run_config = None
        self.collector = None
        self.saved_environment = {}
        super(StrictModePlugin, self).__init__(*args, **kwargs)

    def startTestRun(self, event):
        """Pin the seed, turn strict mode on and start collecting the run log."""
        self.run_config = Config(
            seed=self.config.as_int('seed', Config.DEFAULT_SEED),
            log_path=self.config.as_str('log-path', Config.DEFAULT_LOG_PATH),
            strict=True,
        )
        # Config layering lets the environment win, strict mode is forced on regardless
        self.run_config.strict = True
        self._set_environment({Config.SEED_ENV_VAR: str(self.run_config.seed), Config.STRICT_ENV_VAR: '1'})

        self.collector = RunLogCollector(log_path=self.run_config.log_path)
        self.collector.start()

    def startTest(self, event):
        """Run on test start.

        - Assign the run configuration to the test.
        - Write a test started log message to the run log.
        """
        event.test.config = self.run_config
        test_name = event.test.id().split('.')[-1]
        self.collector.update(test_name)

    def stopTestRun(self, event):
        """Stop the run log collection and restore the environment."""
        if self.collector:
            self.collector.stop()

        for name, value in self.saved_environment.items():
            if value is None:
                os.environ.pop(name, None)
            else:
                os.environ[name] = value
        self.saved_environment = {}

    def _set_environment(self, values):
        for name, value in values.items():
            self.saved_environment[name] = os.environ.get(name)
            os.environ[name] = value
