import os
import io
import logging

log = logging.getLogger(__name__)


class RunLogCollector(object):
    """Utility for run log collection.

    While started, every record of the package loggers is written into the
    run log file, and command phases are separated by marker lines.
    """

    COMMON_LOG_PREFIX = '>>>'
    COMMON_LOG_FORMAT = u'\n{prefix} {{message}}\n\n'.format(prefix=COMMON_LOG_PREFIX)
    RECORD_FORMAT = '%(asctime)s %(levelname)-7s %(name)s: %(message)s'

    def __init__(self, log_path, encoding='utf-8', logger_name='convex_dynamics', level=logging.DEBUG):
        """Initialize the log collector."""
        self.log_path = log_path
        self.encoding = encoding
        self.logger_name = logger_name
        self.level = level

        self.logs_file = None
        self.handler = None
        self._previous_level = None

    def start(self):
        """Open the run log file and attach a handler writing the package logs into it."""
        log_dir = os.path.dirname(self.log_path)
        if log_dir and not os.path.isdir(log_dir):
            os.makedirs(log_dir)

        self.logs_file = io.open(self.log_path, 'a', encoding=self.encoding)
        self.handler = logging.StreamHandler(self.logs_file)
        self.handler.setLevel(self.level)
        self.handler.setFormatter(logging.Formatter(self.RECORD_FORMAT))

        logger = logging.getLogger(self.logger_name)
        self._previous_level = logger.level
        if logger.level == logging.NOTSET or logger.level > self.level:
            logger.setLevel(self.level)
        logger.addHandler(self.handler)
        log.debug("Started run log collection into %s", self.log_path)

    def stop(self):
        """Detach the handler and close the log file."""
        if self.handler:
            log.debug("Stopping run log collection into %s", self.log_path)
            logger = logging.getLogger(self.logger_name)
            logger.removeHandler(self.handler)
            logger.setLevel(self._previous_level)
            self.handler.close()
            self.handler = None

        if self.logs_file:
            self.logs_file.close()
            self.logs_file = None

    def update(self, message):
        """Write a common log message to the run log."""
        if self.handler:
            self.handler.flush()
        self.logs_file.write(self.COMMON_LOG_FORMAT.format(message=message))
        self.logs_file.flush()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc_info):
        self.stop()
