import sys
from pathlib import Path

# Make tests/oracles.py and friends importable regardless of invocation dir.
sys.path.insert(0, str(Path(__file__).parent))
