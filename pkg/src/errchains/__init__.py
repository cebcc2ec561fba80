"""Allow-list API misuse analysis that separates root errors from subsequent ones."""

__version__ = "0.1.0"

from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"
RULES_DIR = DATA_DIR / "rules"
CORPUS_DIR = DATA_DIR / "corpus"
