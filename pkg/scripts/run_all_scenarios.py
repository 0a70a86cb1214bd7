#!/usr/bin/env python3
"""Run every bundled scenario and write its artifacts under out/."""

import argparse
import sys
from pathlib import Path

from ibac import scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", help="output root directory")
    parser.add_argument(
        "--skip-sweep", action="store_true", help="skip the long service-rate sweep"
    )
    args = parser.parse_args()
    for name in scenario.BUNDLED_SCENARIOS:
        if args.skip_sweep and name == "service_rate_sweep":
            continue
        config = scenario.load_bundled(name)
        out_dir = Path(args.out) / name
        code = scenario.run_scenario(config, out_dir)
        print(f"{name}: exit {code} -> {out_dir}")
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
