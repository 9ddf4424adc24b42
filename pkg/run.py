from __future__ import annotations

import os
import sys
from pathlib import Path

from wellcast.cli import main

BASE_DIR = Path(__file__).resolve().parent
CONFIG_PATH = Path(os.environ.get("WELLCAST_CONFIG", str(BASE_DIR / "config" / "wellcast.toml")))

if __name__ == "__main__":
    # ohne Argumente: komplette Pipeline mit der Beispielkonfiguration
    args = sys.argv[1:] or ["--config", str(CONFIG_PATH), "pipeline"]
    main(args=args, prog_name="wellcast")
