import logging
import os
import sys
from pathlib import Path

try:
    from dotenv import load_dotenv
except ImportError:
    load_dotenv = None

LOG_LEVEL_ENV = "LFQTOK_LOG_LEVEL"

package_dir = Path(__file__).resolve().parents[1]


def load_env_files() -> bool:
    """Load ``.env`` from the package directory, then from the working directory."""
    if load_dotenv is None:
        print("⚠️  python-dotenv is not installed; environment files (.env) will be ignored.", file=sys.stderr)
        return False
    load_dotenv(dotenv_path=package_dir / ".env")
    load_dotenv()
    return True


load_env_files()

logger = logging.getLogger("lfqtok")
logging.basicConfig(
    level=getattr(logging, os.getenv(LOG_LEVEL_ENV, "INFO").upper(), logging.INFO),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)


def set_level(level: str) -> None:
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))


def log_debug(message: str):
    logger.debug(message)

def log_info(message: str):
    logger.info(message)

def log_warning(message: str):
    logger.warning(message)

def log_error(message: str):
    logger.error(message)
