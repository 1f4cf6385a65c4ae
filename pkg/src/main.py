import logging
import os
import sys

from src.task_manager.task_executor import TaskExecutor
from src.ui.cli_interface import EXIT_CONFIG, CommandLineInterface
from src.utils.config_loader import load_config
from src.utils.errors import ConfigError
from src.utils.logger_setup import setup_logging


def main(argv=None):
    script_dir = os.path.dirname(os.path.abspath(__file__))
    config_path = os.environ.get('STATEWISE_CONFIG', os.path.join(script_dir, '..', 'config.yaml'))
    try:
        settings = load_config(config_path)
    except (FileNotFoundError, ConfigError) as e:
        print(f"Error: could not load settings from {config_path}: {e}", file=sys.stderr)
        return EXIT_CONFIG

    setup_logging(settings.get('logging'))
    logging.info("Starting Statewise...")
    cli = CommandLineInterface(TaskExecutor(settings))
    code = cli.run(argv)
    logging.info(f"Statewise finished with exit code {code}.")
    return code


if __name__ == "__main__":
    sys.exit(main())
