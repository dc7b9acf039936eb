import logging

_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: str = "WARNING") -> logging.Logger:
    """
    Attaches a single stream handler to the package logger and sets its level.

    Safe to call repeatedly; later calls only change the level.
    """
    logger = logging.getLogger("phasediff")
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {level}")
    logger.setLevel(numeric)
    if not any(getattr(h, "_phasediff", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._phasediff = True
        logger.addHandler(handler)
    return logger
