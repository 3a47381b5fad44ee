#!/usr/bin/env python3
"""Run finite-N convergence scans from JSON configs and print a summary.

Usage: python3 scripts/convergence_scan.py [CONFIG.json ...] [--out-dir DIR] [--workers K]

Without arguments every config under scripts/configs/ is run.  Each scan is
written as CSV next to a one-line summary per (N, y) point.
"""

import argparse
import logging
from pathlib import Path

from betasource.transition import ExperimentConfig, emit, run_convergence_scan, scan_metadata

HERE = Path(__file__).resolve().parent


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("configs", nargs="*", type=Path)
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    paths = args.configs or sorted((HERE / "configs").glob("*.json"))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for path in paths:
        cfg = ExperimentConfig.from_json(path.read_text())
        rows = run_convergence_scan(cfg, workers=args.workers)
        out = args.out_dir / f"{path.stem}.csv"
        emit(rows, out, "csv", n=cfg.n, m=cfg.m, metadata=scan_metadata(cfg))
        logging.info("== %s (%s, %s) -> %s", path.stem, getattr(cfg.family, "value", cfg.family), rows[0].regime if rows else "?", out)
        for r in rows:
            rel = r.abs_error / abs(r.limit_value) if r.limit_value else float("nan")
            logging.info("  N=%4d y=%-16s ratio=%.6f%+.6fi limit=%.6f rel.err=%.2e %s",
                         r.N, ",".join(f"{v:g}" for v in r.y), r.ratio.real, r.ratio.imag,
                         r.limit_value.real, rel, r.status)


if __name__ == "__main__":
    main()
