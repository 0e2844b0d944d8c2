"""
Logging configuration for the application
"""

import logging
import sys
import os
from datetime import datetime

from config.settings import get_setting

def setup_logging(level=logging.INFO):
    """Setup logging configuration"""
    log_format = logging.Formatter('%(asctime)s - %(levelname)s - %(name)s - %(message)s')

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Clear any existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Console goes to stderr so stdout stays free for machine-readable output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(log_format)
    root_logger.addHandler(console_handler)

    log_file = None
    if get_setting("LOG_TO_FILE", True):
        log_dir = get_setting("LOG_DIR", "logs")
        os.makedirs(log_dir, exist_ok=True)

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        log_file = os.path.join(log_dir, f"frechetlab_{timestamp}.log")

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(log_format)
        root_logger.addHandler(file_handler)

    # Log the start of logging
    root_logger.debug(f"Logging initialized. Log file: {log_file}")

    return root_logger
