import os
import json
import hashlib

from six.moves import configparser

from convex_dynamics.utils import SEED_MASK


class Config(object):
    """Configuration of a convex dynamics experiment.

    Experiment configuration include the following options:

    * Seed of every random generator of the run (64-bit).
    * Polytope spec: a preset name or a vertex file path.
    * Number of steps of orbit-style runs.
    * Output directory for reports, traces and images.
    * Whether or not to run in strict mode [True/ False].
    * Run log path.

    The configuration may be set via:

    1) Constructor variables.
    2) Configuration file (overrides constructor configurations).
    3) Environment variables (overrides constructor variables & file configurations).

    Configuration file should be in the following section & options:

        [convexdyn]
        seed = <integer>
        polytope = <preset name or vertex file>
        steps = <integer>
        output-dir = <directory>
        strict = <True/ False>
        log-path = <run log path>

    Supported environment variables:

        CONVEXDYN_SEED = <integer>
        CONVEXDYN_POLYTOPE = <preset name or vertex file>
        CONVEXDYN_STEPS = <integer>
        CONVEXDYN_OUTPUT_DIR = <directory>
        CONVEXDYN_STRICT = <1/0>
        CONVEXDYN_LOG_PATH = <run log path>
    """
    # Expected section name in the configuration file
    SECTION_NAME = 'convexdyn'

    # Expected options in the configuration file
    SEED_OPTION = 'seed'
    POLYTOPE_OPTION = 'polytope'
    STEPS_OPTION = 'steps'
    OUTPUT_DIR_OPTION = 'output-dir'
    STRICT_OPTION = 'strict'
    LOG_PATH_OPTION = 'log-path'

    # Expected environment variables
    SEED_ENV_VAR = 'CONVEXDYN_SEED'
    POLYTOPE_ENV_VAR = 'CONVEXDYN_POLYTOPE'
    STEPS_ENV_VAR = 'CONVEXDYN_STEPS'
    OUTPUT_DIR_ENV_VAR = 'CONVEXDYN_OUTPUT_DIR'
    STRICT_ENV_VAR = 'CONVEXDYN_STRICT'
    LOG_PATH_ENV_VAR = 'CONVEXDYN_LOG_PATH'

    # Configuration default values
    DEFAULT_SEED = 20020101
    DEFAULT_POLYTOPE = 'interval'
    DEFAULT_STEPS = 100000
    DEFAULT_OUTPUT_DIR = os.path.join('build', 'convexdyn')
    DEFAULT_STRICT = False
    DEFAULT_LOG_PATH = os.path.join('build', 'convexdyn', 'convexdyn.log')

    def __init__(self,
                 config_path=None,
                 seed=DEFAULT_SEED,
                 polytope=DEFAULT_POLYTOPE,
                 steps=DEFAULT_STEPS,
                 output_dir=DEFAULT_OUTPUT_DIR,
                 strict=DEFAULT_STRICT,
                 log_path=DEFAULT_LOG_PATH):

        # Set default values
        self.seed = seed
        self.polytope = polytope
        self.steps = steps
        self.output_dir = output_dir
        self.strict = strict
        self.log_path = log_path

        # Update the config values based on the config file (overrides constructor configurations)
        if config_path:
            self.get_file_config(config_path=config_path)

        # Update the config values based on env variables (overrides constructor variables & file configurations)
        self.get_env_config()
        self.normalize()

    def get_env_config(self):
        """Update the config values based on env variables."""
        self.seed = os.environ.get(self.SEED_ENV_VAR, self.seed)
        self.polytope = os.environ.get(self.POLYTOPE_ENV_VAR, self.polytope)
        self.steps = os.environ.get(self.STEPS_ENV_VAR, self.steps)
        self.output_dir = os.environ.get(self.OUTPUT_DIR_ENV_VAR, self.output_dir)
        self.strict = os.environ.get(self.STRICT_ENV_VAR, self.strict)
        self.log_path = os.environ.get(self.LOG_PATH_ENV_VAR, self.log_path)

    def get_file_config(self, config_path):
        """Update the config values based on the config file."""
        if not os.path.exists(config_path):
            raise RuntimeError("Invalid configuration path: %s" % config_path)

        config_reader = configparser.ConfigParser()
        config_reader.read(config_path)
        read_options = config_reader.options(self.SECTION_NAME)

        if self.SEED_OPTION in read_options:
            self.seed = config_reader.getint(self.SECTION_NAME, self.SEED_OPTION)

        if self.POLYTOPE_OPTION in read_options:
            self.polytope = config_reader.get(self.SECTION_NAME, self.POLYTOPE_OPTION)

        if self.STEPS_OPTION in read_options:
            self.steps = config_reader.getint(self.SECTION_NAME, self.STEPS_OPTION)

        if self.OUTPUT_DIR_OPTION in read_options:
            self.output_dir = config_reader.get(self.SECTION_NAME, self.OUTPUT_DIR_OPTION)

        if self.STRICT_OPTION in read_options:
            self.strict = config_reader.getboolean(self.SECTION_NAME, self.STRICT_OPTION)

        if self.LOG_PATH_OPTION in read_options:
            self.log_path = config_reader.get(self.SECTION_NAME, self.LOG_PATH_OPTION)

    def normalize(self):
        """Convert values read as strings (env variables) and validate them."""
        try:
            self.seed = int(self.seed) & SEED_MASK
            self.steps = int(self.steps)
        except ValueError as error:
            raise ValueError("Invalid numeric configuration value: %s" % error)

        if self.steps <= 0:
            raise ValueError("Number of steps must be positive, got %d" % self.steps)

        if not isinstance(self.strict, bool):
            value = str(self.strict).strip().lower()
            if value not in ('1', '0', 'true', 'false', 'yes', 'no', 'on', 'off'):
                raise ValueError("Invalid strict mode value: %r" % self.strict)
            self.strict = value in ('1', 'true', 'yes', 'on')

    def to_dict(self):
        """Echo of the configuration values, as recorded in every report."""
        return {
            'seed': self.seed,
            'polytope': self.polytope,
            'steps': self.steps,
            'output_dir': self.output_dir,
            'strict': self.strict,
            'log_path': self.log_path,
        }

    def digest(self, extra=None):
        """Return the sha256 hex digest of the canonical JSON echo, with extra command values when given."""
        values = self.to_dict()
        if extra:
            values['command'] = extra
        canonical = json.dumps(values, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
