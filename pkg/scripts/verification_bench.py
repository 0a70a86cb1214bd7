#!/usr/bin/env python3
"""Signature-verification micro-benchmark over a grid of key and batch sizes.

Writes bench.csv shaped like the published reference table (key size, batch
size, signed-message size, individual time, batch time, improvement).  The
8 MiB rows are slow; trim the grid with the flags for a quick look.
"""

import argparse
import sys
from pathlib import Path

from ibac import analysis


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/bench")
    parser.add_argument("--key-bits", type=int, nargs="+", default=[1024])
    parser.add_argument("--batch", type=int, nargs="+", default=[10, 50])
    parser.add_argument(
        "--sig-bytes", type=int, nargs="+", default=[512 * 1024],
        help="signed-message payload sizes",
    )
    parser.add_argument("--trials", type=int, default=10)
    args = parser.parse_args()

    results = []
    for key_bits in args.key_bits:
        for batch in args.batch:
            for payload in args.sig_bytes:
                r = analysis.bench_verification(key_bits, batch, payload, args.trials)
                results.append(r)
                line = (
                    f"{key_bits}b batch={batch} sig={payload}B: "
                    f"indiv {r.t_individual_s:.4f}s batch {r.t_batch_s:.4f}s "
                    f"({r.improvement_pct:.0f}%)"
                )
                ref = analysis.REFERENCE_VERIFICATION_TIMINGS.get((key_bits, batch, payload))
                if ref:
                    line += f" [reference: {ref[0]}s/{ref[1]}s/{ref[2]}%]"
                print(line)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_bench_csv(out / "bench.csv", results)
    print(f"wrote {out / 'bench.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
