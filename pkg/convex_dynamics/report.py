"""Self-describing JSON run reports."""
import io
import json
import logging

import numpy as np
from pbr import version

log = logging.getLogger(__name__)

PACKAGE_NAME = 'convex-dynamics'


def tool_version():
    """Return the installed package version, 'unknown' when running from a bare checkout."""
    try:
        return version.VersionInfo(PACKAGE_NAME).version_string()
    except Exception:  # pylint: disable=broad-except
        return 'unknown'


def _plain(value):
    """Convert numpy values nested in dicts and lists into JSON-native ones."""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


class RunReport(object):
    """Metrics and named pass/fail assertions of one command run.

    Wall time is kept out of the serialized report so that two runs with the
    same configuration produce identical files.

    Usage example:

    >>> report = RunReport('orbit', config)
    >>> report.metric('sup_error', 0.5)
    >>> report.check('plateau', True, sup_error='sup_error')
    """

    def __init__(self, command, config, arguments=None):
        """Initialize the report.

        :param str command: subcommand name.
        :param Config config: run configuration, echoed with its digest.
        :param dict arguments: command specific values folded into the config hash.
        """
        self.command = command
        self.config = config
        self.arguments = _plain(arguments or {})
        self.metrics = {}
        self.assertions = []
        self.artifacts = []

    def metric(self, name, value):
        self.metrics[name] = _plain(value)

    def check(self, name, passed, detail=None, **links):
        """Record a named assertion; links name the metrics the assertion tests."""
        passed = bool(passed)
        record = {'name': name, 'pass': passed}
        if links:
            record['metrics'] = dict(sorted(links.items()))
        if detail is not None:
            record['detail'] = _plain(detail)
        self.assertions.append(record)

        if not passed:
            log.warning("Assertion %s failed: %s", name, detail)
        return passed

    def artifact(self, path):
        self.artifacts.append(path)

    @property
    def passed(self):
        return all(assertion['pass'] for assertion in self.assertions)

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def to_dict(self):
        return {
            'command': self.command,
            'version': tool_version(),
            'config': self.config.to_dict(),
            'arguments': self.arguments,
            'config_hash': self.config.digest(extra=dict(self.arguments, command=self.command)),
            'metrics': self.metrics,
            'assertions': self.assertions,
            'artifacts': self.artifacts,
            'pass': self.passed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n'

    def write(self, path):
        with io.open(path, 'w', encoding='utf-8') as report_file:
            report_file.write(self.to_json())
        log.debug("Wrote %s report to %s", self.command, path)
