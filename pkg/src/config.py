"""Configuration loader for qqlab.

Loads environment variables from .env and exposes them as module-level constants.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from project root
_env_path = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(_env_path)

# Randomness
QQLAB_SEED: int = int(os.getenv("QQLAB_SEED", "0"))
RNG_ALGORITHM: str = os.getenv("QQLAB_RNG_ALGORITHM", "philox")

# A half is "bad" when DISP > BAD_CONSTANT * sqrt(r ln(n/r))
BAD_CONSTANT: float = float(os.getenv("QQLAB_BAD_CONSTANT", "15"))

# Brute-force adversary enumeration cap (|X| * |Y| pairs)
ENUMERATION_GUARD: int = int(os.getenv("QQLAB_ENUMERATION_GUARD", "10000000"))

# Statevector size cap
MAX_AMPLITUDES: int = int(os.getenv("QQLAB_MAX_AMPLITUDES", str(2**20)))

# Trial loops
JOBS: int = int(os.getenv("QQLAB_JOBS", "1"))
TRIAL_CHUNK: int = int(os.getenv("QQLAB_TRIAL_CHUNK", "256"))

# Reports
FLOAT_DIGITS: int = int(os.getenv("QQLAB_FLOAT_DIGITS", "12"))

# Observability (OpenTelemetry)
QQLAB_TRACE: str = os.getenv("QQLAB_TRACE", "").lower()
OTEL_SERVICE_NAME: str = os.getenv("OTEL_SERVICE_NAME", "qqlab")

# Feature flags
DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"
