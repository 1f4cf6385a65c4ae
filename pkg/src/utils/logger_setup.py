# src/utils/logger_setup.py
"""
Utility function to configure logging for the application.

Inputs:
- Logging configuration dictionary (the `logging` section of config.yaml)

Outputs:
- Configured root logger.
"""

import logging
import os

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(log_config=None):
    """Configures logging based on the provided dictionary."""
    log_config = log_config or {}
    log_level = str(log_config.get('level', 'INFO')).upper()
    log_file = log_config.get('log_file')

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level, logging.INFO))

    formatter = logging.Formatter(LOG_FORMAT)

    # Clear existing handlers so repeated CLI invocations in one process don't duplicate output
    if root_logger.hasHandlers():
        root_logger.handlers.clear()

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
        try:
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except OSError as e:
            logging.error(f"Failed to set up file handler for {log_file}: {e}", exc_info=True)

    logging.info(f"Logging configured. Level: {log_level}, File: {log_file}")
