import sys
from pathlib import Path

# modules import each other from the app root (`python -m app`)
sys.path.insert(0, str(Path(__file__).resolve().parent))
