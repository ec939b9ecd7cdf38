import logging
import os
import sys
from dataclasses import dataclass, fields

from dotenv import load_dotenv  # type: ignore

ENV_PREFIX = "MINER_"


@dataclass
class Config:
    """Configuration settings for the mining toolkit"""

    # Counting settings
    THREADS: int = 1  # Workers used by count_supports; 1 keeps benchmarks comparable

    # Rule generation settings
    MAX_RULES: int = 0  # Rule explosion cap, 0 disables it
    DECIMAL_PLACES: int = 6  # Rationals are rendered with this many places

    # Benchmark settings
    BENCH_REPEATS: int = 3

    # Service settings
    MAX_UPLOAD_BYTES: int = 64 * 1024 * 1024
    LOG_LEVEL: str = "WARNING"

    @classmethod
    def from_env(cls) -> "Config":
        """Build a config from defaults overridden by MINER_* variables (and .env)"""
        load_dotenv()
        overrides = {}
        for f in fields(cls):
            raw = os.getenv(ENV_PREFIX + f.name)
            if raw is None:
                continue
            overrides[f.name] = int(raw) if f.type in (int, "int") else raw
        return cls(**overrides)

    @property
    def max_rules(self):
        return self.MAX_RULES or None


def setup_logging(level: str = "WARNING") -> None:
    """Route library logs to stderr with a short one-line format"""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level.upper())


config = Config.from_env()
