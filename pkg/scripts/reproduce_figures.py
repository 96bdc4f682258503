"""Regenerate the density and Husimi panels plus the ripple sweep from configs/.

Usage: python3 scripts/reproduce_figures.py [--out-root out]
"""
import argparse
import json
import sys
from pathlib import Path

from quasirect.cli import main as cli_main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(command: str, config: Path, out: Path) -> None:
    code = cli_main([command, "--config", str(config), "--out", str(out)])
    if code:
        sys.exit(f"{command} {config.name} failed with exit code {code}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-root", default="out", type=Path)
    args = ap.parse_args()

    for cfg in sorted(CONFIGS.glob("fig*.yaml")):
        out = args.out_root / cfg.stem
        run("density", cfg, out)
        run("husimi", cfg, out)
        flat = json.loads((out / "density.json").read_text())["flatness"]
        print(f"{cfg.stem}: ripple {flat['ripple']:.4g} over {flat['plateau_window']}")
    run("sweep", CONFIGS / "sweep.yaml", args.out_root / "sweep")


if __name__ == "__main__":
    main()
