# -*- coding: utf-8 -*-
"""
    HOLOGRAPH runtime environment

    It exposes an object (environment) that should contain
    all relevant external information
"""
import logging
import os
from pathlib import Path

from holograph.query.llm import EndpointConfig

logger = logging.getLogger(__name__)


# Some useful harcoded values
OUTPUT_DIR = "holograph-results"
API_KEY_ENV = "HOLOGRAPH_API_KEY"
BASE_URL_ENV = "HOLOGRAPH_BASE_URL"
MODEL_ENV = "HOLOGRAPH_MODEL"
OUTPUT_ENV = "HOLOGRAPH_OUTPUT"


class Environment:
    """HOLOGRAPH environment"""

    def __init__(self):
        self._output = Path(os.environ.get(OUTPUT_ENV, OUTPUT_DIR))
        self._base_url = os.environ.get(BASE_URL_ENV)
        self._model = os.environ.get(MODEL_ENV)

        # Create and format the log handler, for the library and the script loggers
        _console_handler = logging.StreamHandler()
        _console_format = logging.Formatter("[%(levelname)s] %(message)s")
        _console_handler.setFormatter(_console_format)
        self._loggers = [logging.getLogger(name) for name in ("holograph", __name__.split(".")[0])]
        for root_logger in self._loggers:
            root_logger.setLevel(logging.INFO)
            root_logger.addHandler(_console_handler)

    @property
    def output(self):
        """Default directory for results"""
        return self._output

    @output.setter
    def output(self, new_output):
        new_path = Path(new_output)
        if new_path.exists() and not new_path.is_dir():
            logger.error("The output path %s is not a directory", new_path)
            raise NotADirectoryError(new_path)
        self._output = new_path

    @property
    def has_api_key(self):
        return bool(os.environ.get(API_KEY_ENV))

    def endpoint(self, base=None):
        """Endpoint configuration, environment values override ``base``"""
        base = EndpointConfig() if base is None else base
        overrides = {"api_key_env": API_KEY_ENV}
        if self._base_url:
            overrides["base_url"] = self._base_url
        if self._model:
            overrides["model"] = self._model
        return EndpointConfig.from_dict({**base.to_dict(), **overrides})

    def debug_logger(self):
        """Set the logger to debug"""
        for root_logger in self._loggers:
            root_logger.setLevel(logging.DEBUG)


environment = Environment()
