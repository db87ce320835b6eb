"""Run every shipped config through the CLI, writing into out/<config name>.

Exit status is the number of experiments whose checks did not all hold.
"""
import argparse
import sys
from pathlib import Path

from smallworld.harness.cli import main as cli_main
from smallworld.harness.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def run(configs, out_root: Path, extra) -> int:
    failures = 0
    for path in configs:
        kind = load_config(path).kind
        code = cli_main([kind, "--config", str(path), "--out", str(out_root / path.stem), *extra])
        failures += code != 0
    return failures


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "out"))
    ap.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    ap.add_argument("--set", action="append", default=[], help="override passed to every run")
    args = ap.parse_args()
    configs = sorted((ROOT / "configs").glob("*.cfg"))
    if args.only:
        configs = [c for c in configs if c.stem in args.only]
    extra = [a for kv in args.set for a in ("--set", kv)]
    sys.exit(run(configs, Path(args.out), extra))
