import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
HANDLER_NAME = "uwo"


class Settings(BaseModel):
    """HTTP server settings read from the environment (.env supported)."""

    model_config = ConfigDict(frozen=True)

    api_host: str = "0.0.0.0"
    api_port: int = 8001
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            api_host=os.environ.get("UWO_API_HOST", "0.0.0.0"),
            api_port=int(os.environ.get("UWO_API_PORT", "8001")),
            log_level=os.environ.get("UWO_LOG_LEVEL", "INFO").upper(),
        )


def configure_logging(level: str = "WARNING") -> None:
    """Installs (or replaces) the package stream handler on the root logger."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if handler.get_name() == HANDLER_NAME:
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.set_name(HANDLER_NAME)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.WARNING))


settings = Settings.from_env()
