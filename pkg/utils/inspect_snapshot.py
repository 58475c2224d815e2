#!/usr/bin/python3
"""Prints what is in a snapshot file and optionally renders its fields."""

import argparse
import logging
from pathlib import Path

import numpy as np

from phasonsim.argparser import add_common_arguments
from phasonsim.grid import Grid
from phasonsim.output import read_snapshot
from phasonsim.render import FIELD_NAMES, render_field_image


def main() -> None:
    parser = argparse.ArgumentParser(description="Inspect a phasonsim snapshot.")
    add_common_arguments(parser)
    parser.add_argument("snapshot", help="snapshots/snapshot_NNNNNN.txt")
    parser.add_argument(
        "-r", "--render", default=None, help="Directory to write PNG previews into"
    )
    parser.add_argument(
        "-c", "--component", type=int, default=None, help="0, 1, 2 or magnitude"
    )
    args = parser.parse_args()

    logging.basicConfig(level=args.log.upper())

    snap = read_snapshot(args.snapshot)
    print(f"dim={snap.dim} n={snap.n} h={snap.h} t={snap.t!r}")
    for name in FIELD_NAMES:
        values = getattr(snap, name)
        print(
            f"{name:>3}: max|.|={np.max(np.abs(values)):.6e} "
            f"rms={np.sqrt(np.mean(values**2)):.6e}"
        )

    if args.render:
        out = Path(args.render)
        out.mkdir(parents=True, exist_ok=True)
        # Boundary data is not stored, so previews show zero boundaries
        state = snap.to_state(Grid(snap.dim, snap.n, snap.h))
        stem = Path(args.snapshot).stem
        for name in FIELD_NAMES:
            path = render_field_image(
                state, name, args.component, out / f"{stem}_{name}.png"
            )
            print(f"Wrote {path}")


if __name__ == "__main__":
    main()
