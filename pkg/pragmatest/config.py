"""
Runtime settings for pragmatest.

Values come from the environment (optionally a .env file in the working
directory); command-line flags override them.
"""
import os
import sys
from typing import Optional

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, Field

load_dotenv(dotenv_path=os.path.join(os.getcwd(), ".env"))

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{line} - {message}"


class Settings(BaseModel):
    home: str = ".qutest"
    jobs: int = Field(default=1, ge=1)
    log_level: str = "WARNING"
    runtime: str = "native"
    no_color: bool = False


def load_settings() -> Settings:
    """Build settings from PRAGMATEST_* environment variables"""
    return Settings(
        home=os.getenv("PRAGMATEST_HOME", ".qutest"),
        jobs=int(os.getenv("PRAGMATEST_JOBS", "1")),
        log_level=os.getenv("PRAGMATEST_LOG_LEVEL", "WARNING").upper(),
        runtime=os.getenv("PRAGMATEST_RUNTIME", "native"),
        no_color="NO_COLOR" in os.environ,
    )


def configure_logging(level: Optional[str] = None) -> None:
    """Route loguru output to stderr at the requested level"""
    logger.remove()
    logger.add(sys.stderr, level=(level or load_settings().log_level).upper(), format=LOG_FORMAT)
