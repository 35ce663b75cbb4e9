"""Run every figure recipe in configs/ through the CLI.

    python3 scripts/run_recipes.py --out runs --jobs 4
"""

import argparse
import json
import sys
import time
from pathlib import Path

from quasiwqed.cli import run

ROOT = Path(__file__).resolve().parent.parent


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default=str(ROOT / "runs"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--only", nargs="*", help="recipe names (file stems) to run")
    args = p.parse_args()
    failed = 0
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        if args.only and cfg.stem not in args.only:
            continue
        command = json.loads(cfg.read_text())["command"]
        t0 = time.perf_counter()
        code = run([command, "--config", str(cfg), "--out", str(Path(args.out) / cfg.stem), "--jobs", str(args.jobs)])
        print(f"{cfg.stem:32s} exit={code} {time.perf_counter() - t0:6.1f}s")
        failed += code != 0
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
