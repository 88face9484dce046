"""
Configuration management for the Evacuation Delay toolkit.
Loads settings from the tool-local .env file with sensible defaults.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from tool-local .env file
_env_path = Path(__file__).resolve().parent / '.env'
load_dotenv(_env_path)

TOOL_DIR = Path(__file__).resolve().parent

# =============================================================================
# Delay Grid (time-domain convolution)
# =============================================================================

# Grid resolution for composed delay densities (ms)
GRID_STEP_MS = float(os.getenv("GRID_STEP_MS", "0.05"))

# Grid upper bound is max(GRID_MIN_UPPER_MS, GRID_MEAN_MULTIPLE * analytic mean)
GRID_MIN_UPPER_MS = float(os.getenv("GRID_MIN_UPPER_MS", "10000"))
GRID_MEAN_MULTIPLE = float(os.getenv("GRID_MEAN_MULTIPLE", "20"))

# Probability mass allowed beyond the grid bound before composition fails
GRID_OVERFLOW_TOLERANCE = float(os.getenv("GRID_OVERFLOW_TOLERANCE", "1e-6"))

# =============================================================================
# Protection Requirement
# =============================================================================

# Evacuation deadline (ms) and required probability of meeting it
DEFAULT_DELTA_MAX_MS = float(os.getenv("DEFAULT_DELTA_MAX_MS", "200"))
DEFAULT_O_MAX = float(os.getenv("DEFAULT_O_MAX", "0.95"))

# Deadline used for the real-time verdict on the built-in table rows (stop within 0.3 s)
REALTIME_DEADLINE_MS = float(os.getenv("REALTIME_DEADLINE_MS", "300"))

# Hour of day used for quasi-static queueing analytics (prime time)
PRIME_TIME_HOUR = float(os.getenv("PRIME_TIME_HOUR", "20"))

# =============================================================================
# Simulation
# =============================================================================

DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "2017"))

# Maximum number of placed PUs / SUs in one simulated region
SIM_POPULATION_CAP = int(os.getenv("SIM_POPULATION_CAP", "100000"))

SIM_DEFAULT_DURATION_S = float(os.getenv("SIM_DEFAULT_DURATION_S", "600"))
SIM_DEFAULT_REPS = int(os.getenv("SIM_DEFAULT_REPS", "1"))

# Worker processes for replications and sweeps (0 = run serially)
MAX_WORKERS = int(os.getenv("MAX_WORKERS", "0"))

# Queue length is sampled into the trace at most once per interval (ms)
QUEUE_TRACE_INTERVAL_MS = float(os.getenv("QUEUE_TRACE_INTERVAL_MS", "1000"))

# Deadlines (ms) at which simulation reports tabulate protection probability
PROTECTION_CURVE_POINTS = [
    float(x) for x in os.getenv(
        "PROTECTION_CURVE_POINTS",
        "50,100,150,200,250,300,500,1000,2000,3000"
    ).split(",") if x.strip()
]

# =============================================================================
# Reports
# =============================================================================

REPORT_DECIMALS = int(os.getenv("REPORT_DECIMALS", "3"))

# =============================================================================
# Logging Configuration
# =============================================================================

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "")  # Empty = logs/evaluator.log


def print_config():
    """Print current configuration (for debugging)."""
    print("=" * 60)
    print("Evacuation Delay Toolkit Configuration")
    print("=" * 60)
    print(f"GRID_STEP_MS: {GRID_STEP_MS}")
    print(f"GRID_MIN_UPPER_MS: {GRID_MIN_UPPER_MS}")
    print(f"GRID_MEAN_MULTIPLE: {GRID_MEAN_MULTIPLE}")
    print(f"GRID_OVERFLOW_TOLERANCE: {GRID_OVERFLOW_TOLERANCE}")
    print("-" * 60)
    print(f"DEFAULT_DELTA_MAX_MS: {DEFAULT_DELTA_MAX_MS}")
    print(f"DEFAULT_O_MAX: {DEFAULT_O_MAX}")
    print(f"REALTIME_DEADLINE_MS: {REALTIME_DEADLINE_MS}")
    print(f"PRIME_TIME_HOUR: {PRIME_TIME_HOUR}")
    print("-" * 60)
    print(f"DEFAULT_SEED: {DEFAULT_SEED}")
    print(f"SIM_POPULATION_CAP: {SIM_POPULATION_CAP:,}")
    print(f"SIM_DEFAULT_DURATION_S: {SIM_DEFAULT_DURATION_S}s")
    print(f"SIM_DEFAULT_REPS: {SIM_DEFAULT_REPS}")
    print(f"MAX_WORKERS: {MAX_WORKERS if MAX_WORKERS else '(serial)'}")
    print(f"QUEUE_TRACE_INTERVAL_MS: {QUEUE_TRACE_INTERVAL_MS}")
    print(f"PROTECTION_CURVE_POINTS: {PROTECTION_CURVE_POINTS}")
    print("-" * 60)
    print(f"REPORT_DECIMALS: {REPORT_DECIMALS}")
    print(f"LOG_LEVEL: {LOG_LEVEL}")
    print(f"LOG_FILE: {LOG_FILE if LOG_FILE else '(logs/evaluator.log)'}")
    print("=" * 60)


if __name__ == "__main__":
    print_config()
