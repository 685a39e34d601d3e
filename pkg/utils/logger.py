"""
Logging configuration
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from config.settings import LOG_LEVEL, LOG_FILE

def setup_logger(level: str = LOG_LEVEL, log_file: str = LOG_FILE, quiet: bool = False):
    """Setup logging configuration"""

    logger = logging.getLogger()
    logger.setLevel(getattr(logging, level.upper()))

    # Repeated CLI invocations in one process must not stack handlers
    for handler in list(logger.handlers):
        if getattr(handler, "_nhphase", False):
            logger.removeHandler(handler)
            handler.close()

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
    )

    simple_formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(message)s'
    )

    # Console goes to stderr so stdout stays clean for JSON/CSV output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.WARNING if quiet else logging.INFO)
    console_handler.setFormatter(simple_formatter)
    console_handler._nhphase = True
    logger.addHandler(console_handler)

    if log_file:
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5
        )
        file_handler.setLevel(getattr(logging, level.upper()))
        file_handler.setFormatter(detailed_formatter)
        file_handler._nhphase = True
        logger.addHandler(file_handler)

    # Reduce noise from external libraries
    logging.getLogger('asyncio').setLevel(logging.WARNING)

    return logger
