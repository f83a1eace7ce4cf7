# config.py
import logging
import os
import sys

from dotenv import load_dotenv
from pydantic import BaseModel

# take environment variables from Backend/.env, then the working directory
load_dotenv(dotenv_path=os.path.join(os.path.dirname(__file__), "..", ".env"))
load_dotenv()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Settings(BaseModel):
    workers: int = 1
    log_level: str = "INFO"
    seed: int = 0


_settings = None


def get_settings() -> Settings:
    """Settings read once from RELSIM_* environment variables."""
    global _settings
    if _settings is None:
        _settings = Settings(
            workers=int(os.getenv("RELSIM_WORKERS", "1")),
            log_level=os.getenv("RELSIM_LOG_LEVEL", "INFO").upper(),
            seed=int(os.getenv("RELSIM_SEED", "0")),
        )
    return _settings


def setup_logging(level: str = None):
    """Configure root logging on stderr; stdout is reserved for command output."""
    level_name = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
    return logging.getLogger("relsim")
