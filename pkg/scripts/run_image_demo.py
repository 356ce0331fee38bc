#!/usr/bin/env python3
"""Smoke demo of the built-in descriptors on generated pattern images.

Writes a small PGM dataset (one pattern per place, perturbed queries),
calibrates the three built-in techniques on it, and runs the full CLI
pipeline end to end.  Calibration and evaluation share the same images
here; this is a plumbing demo, not an experiment.
"""

import argparse
from pathlib import Path

from switchfuse.cli import main as cli
from switchfuse.datasets import save_config
from switchfuse.switching import TripartiteConfig, UnitConfig
from switchfuse.synthetic import export_image_dataset, generate_image_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=21)
    parser.add_argument("--places", type=int, default=40)
    parser.add_argument("--out", type=Path, default=Path("image_demo"))
    args = parser.parse_args()

    refs, queries = generate_image_dataset(args.places, seed=args.seed)
    manifest = export_image_dataset(refs, queries, args.out, "demo")
    config_path = args.out / "config.json"
    save_config(
        TripartiteConfig(
            units=(
                UnitConfig("gradient", ("hog", "tiny_patch")),
                UnitConfig("appearance", ("tiny_patch", "intensity_hist")),
            )
        ),
        config_path,
    )
    store = args.out / "store.sfcal"
    steps = [
        ["calibrate", "--manifest", manifest, "--config", config_path, "--out", store],
        [
            "run",
            "--manifest", manifest,
            "--config", config_path,
            "--store", store,
            "--out", args.out / "preds.csv",
        ],
        [
            "evaluate",
            "--predictions", args.out / "preds.csv",
            "--manifest", manifest,
            "--out", args.out / "report",
            "--svg",
        ],
    ]
    for argv in steps:
        rc = cli([str(a) for a in argv])
        if rc != 0:
            raise SystemExit(rc)


if __name__ == "__main__":
    main()
