#!/usr/bin/env python3
"""Generate the full data sets for all four standard figures into out/.

Each figure directory gets its panel CSVs plus a manifest.json recording the
inputs, derived quantities, tool version and wall time.  Rerunning produces
byte-identical CSV files.

Usage:
    python scripts/reproduce_figures.py [--out OUT_DIR] [--jobs N]
"""

import argparse
import sys

from photonbec.figures import FIGURE_IDS, FigureJob, run_figure
from photonbec.runconfig import parse_config


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out")
    parser.add_argument("--jobs", type=int, default=4)
    parser.add_argument("--figures", nargs="*", default=list(FIGURE_IDS))
    args = parser.parse_args()

    run = parse_config(None, ())
    for figure_id in args.figures:
        manifest = run_figure(FigureJob(figure_id), run,
                              f"{args.out}/{figure_id}", jobs=args.jobs)
        print(f"{figure_id}: {len(manifest['files'])} files, "
              f"{manifest['wall_time_s']:.1f}s, "
              f"{len(manifest['errors'])} point errors")
    return 0


if __name__ == "__main__":
    sys.exit(main())
