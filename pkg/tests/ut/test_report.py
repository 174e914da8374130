import os
import json
import shutil
import tempfile
import unittest

import mock
import numpy as np

from convex_dynamics import report
from convex_dynamics.config import Config
from convex_dynamics.report import RunReport


class TestRunReport(unittest.TestCase):
    def setUp(self):
        with mock.patch.dict('os.environ', {}, clear=True):
            self.config = Config(seed=5)
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_checks(self):
        run_report = RunReport('orbit', self.config, arguments={'runs': 2})
        run_report.metric('sup_error', np.float64(0.5))
        self.assertTrue(run_report.check('plateau', np.bool_(True), sup_error='sup_error'))
        self.assertTrue(run_report.passed)
        self.assertEqual(run_report.exit_code, 0)

        self.assertFalse(run_report.check('average_gap', False, detail={'gap': np.float32(0.25)}))
        self.assertFalse(run_report.passed)
        self.assertEqual(run_report.exit_code, 1)

        self.assertEqual(run_report.assertions, [
            {'name': 'plateau', 'pass': True, 'metrics': {'sup_error': 'sup_error'}},
            {'name': 'average_gap', 'pass': False, 'detail': {'gap': 0.25}},
        ])

    @mock.patch('convex_dynamics.report.tool_version', return_value='1.0.0')
    def test_serialization(self, _):
        run_report = RunReport('region', self.config, arguments={'t': 0.5})
        run_report.metric('margins', np.array([0.0, 0.5]))
        run_report.artifact('region.txt')
        run_report.check('invariant', True)

        record = json.loads(run_report.to_json())
        self.assertEqual(sorted(record), ['arguments', 'artifacts', 'assertions', 'command', 'config', 'config_hash',
                                          'metrics', 'pass', 'version'])
        self.assertEqual(record['version'], '1.0.0')
        self.assertEqual(record['metrics'], {'margins': [0.0, 0.5]})
        self.assertEqual(record['config']['seed'], 5)
        self.assertEqual(record['config_hash'], self.config.digest(extra={'t': 0.5, 'command': 'region'}))

        path = os.path.join(self.test_dir, 'report.json')
        run_report.write(path)
        with open(path) as report_file:
            self.assertEqual(report_file.read(), run_report.to_json())

    def test_same_inputs_same_report(self):
        first, second = RunReport('orbit', self.config, {'runs': 1}), RunReport('orbit', self.config, {'runs': 1})
        for run_report in (first, second):
            run_report.metric('gap', 0.125)
            run_report.check('gap', True)
        self.assertEqual(first.to_json(), second.to_json())

        other = RunReport('orbit', self.config, {'runs': 2})
        self.assertNotEqual(other.to_dict()['config_hash'], first.to_dict()['config_hash'])

    @mock.patch('convex_dynamics.report.version.VersionInfo')
    def test_unknown_version(self, version_mock):
        version_mock.return_value.version_string.side_effect = Exception("no metadata")
        self.assertEqual(report.tool_version(), 'unknown')
