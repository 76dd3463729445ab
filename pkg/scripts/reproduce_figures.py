"""Regenerate both flux figures with the averaged and Monte Carlo routes.

    python3 scripts/reproduce_figures.py [--out-dir out] [--n-paths 10000] [--workers 4]

Writes figure1.* and figure2.* (CSV, SVG, summary JSON, manifest) under
``out-dir/figure1`` and ``out-dir/figure2``, and prints the curve metrics.
"""

import argparse
import json
from pathlib import Path

from noiseflux import experiments
from noiseflux.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--n-paths", type=int, default=10_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--tdse", action="store_true", help="also run the TDSE route (about a minute each)")
    args = ap.parse_args()
    routes = "averaged,mc,tdse" if args.tdse else "averaged,mc"
    jobs = (("figure1", experiments.FIGURE1_BASE, experiments.run_figure1),
            ("figure2", experiments.FIGURE2_BASE, experiments.run_figure2))
    for name, base, runner in jobs:
        cfg = load_config(None, base=base, n_paths=args.n_paths, workers=args.workers,
                          routes=routes, out_dir=str(Path(args.out_dir) / name))
        res = runner(cfg)
        print(f"== {name}: {res.paths['csv']}")
        print(json.dumps(res.summary, indent=1, default=float))


if __name__ == "__main__":
    main()
