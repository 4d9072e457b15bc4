"""
Configuration Management
Handles environment settings, logging setup and shared constants
"""
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """
    Process-wide settings loaded from environment variables.
    Per-run algorithm settings live in the config file, not here.
    """

    # Application
    APP_NAME: str = "EstimNet"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    ENVIRONMENT: str = "development"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"
    LOG_FILE: str = "estimnet.log"

    # Parallel runs (0 = one worker per CPU)
    MAX_WORKERS: int = 0

    # Two-path table prefilter
    PREFILTER_ENABLED: bool = True
    PREFILTER_CAPACITY: int = 1_000_000
    PREFILTER_ERROR_RATE: float = 0.01

    # Convergence and inference
    HUGE_THETA: float = 1e10
    T_RATIO_THRESHOLD: float = 0.3
    CONDITION_LIMIT: float = 1e12
    BURNIN_FRACTION: float = 0.5
    Z_CRITICAL: float = 1.959964

    # Sampling
    BURNIN_CAP: int = 100_000_000
    IFD_WARN_RATIO: float = 0.8

    class Config:
        env_file = ".env"
        env_prefix = "ESTIMNET_"
        case_sensitive = True
        extra = "ignore"


# Singleton instance
settings = Settings()


def build_logging_config(log_dir: str = settings.LOG_DIR, level: str = settings.LOG_LEVEL) -> dict:
    """Logging dictConfig with a console handler and a JSON rotating file handler."""
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "[%(asctime)s] %(levelname)s in %(module)s: %(message)s",
            },
            "json": {
                "()": "pythonjsonlogger.jsonlogger.JsonFormatter",
                "format": "%(asctime)s %(name)s %(levelname)s %(message)s",
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "formatter": "default",
                "stream": "ext://sys.stderr",
            },
            "file": {
                "class": "logging.handlers.RotatingFileHandler",
                "formatter": "json",
                "filename": f"{log_dir}/{settings.LOG_FILE}",
                "maxBytes": 10485760,
                "backupCount": 10,
            },
        },
        "root": {
            "level": level,
            "handlers": ["console", "file"],
        },
        "loggers": {
            "estimnet": {"level": level},
        },
    }


LOGGING_CONFIG = build_logging_config()


# Constants
class ExitCode:
    OK = 0
    INPUT_ERROR = 1
    NOT_CONVERGED = 2


class OutputFile:
    POOLED_ESTIMATES = "pooled_estimates.csv"
    THETA_TRACE = "theta_trace_{run}.csv"
    DZA_TRACE = "dzA_trace_{run}.csv"
    CHAIN_STATS = "chain_stats_{run}.csv"
    SUMMARY = "estimation_summary.txt"
    SIM_STATS = "sim_stats.csv"
    SIM_NETWORK = "{prefix}_{index}.net"
    SIM_ATTRIBUTES = "{prefix}_{kind}.txt"
    STUDY_REPORT = "study_report.csv"
    DIAGNOSTICS = "diagnostics.csv"
    DEGREE_DISTRIBUTION = "degree_distribution.csv"
