#!/usr/bin/env python3
"""Saturated service-rate sweep: model vs measurement over the delta grid.

Writes mu_model.csv and prints one row per delta point.
"""

import argparse
import sys
from pathlib import Path

from ibac import analysis, scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/service_rate_sweep")
    parser.add_argument("--interests", type=int, default=None,
                        help="override interests per delta point")
    args = parser.parse_args()

    config = scenario.load_bundled("service_rate_sweep")
    if args.interests:
        config.sweep.interests_per_point = args.interests
    points, _ = scenario.run_sweep(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_mu_csv(
        out / "mu_model.csv", [(p.delta, p.mu_model, p.mu_measured) for p in points]
    )
    print(f"{'delta':>6} {'mu_model':>12} {'mu_measured':>12} {'rel_err':>8}")
    for p in points:
        rel = abs(p.mu_measured - p.mu_model) / p.mu_model
        print(f"{p.delta:>6} {p.mu_model:>12.4f} {p.mu_measured:>12.4f} {rel:>7.2%}")
    print(f"wrote {out / 'mu_model.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
