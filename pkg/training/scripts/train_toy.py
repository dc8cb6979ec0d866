#!/usr/bin/env python3
"""Build a synthetic corpus, train the toy denoiser, export weights and
parity fixtures.

Usage: python3 training/scripts/train_toy.py --out-dir runs/toy
"""

import argparse
import tempfile
from pathlib import Path

from tochlearn import CorpusConfig, TrainingConfig, build_dataset, export, \
    train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", required=True)
    ap.add_argument("--workdir", default=None,
                    help="corpus directory (default: temp)")
    ap.add_argument("--n-sequences", type=int, default=6)
    ap.add_argument("--frames", type=int, default=8)
    ap.add_argument("--n-points", type=int, default=256)
    ap.add_argument("--epochs", type=int, default=300)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    workdir = args.workdir or tempfile.mkdtemp(prefix="tochlearn-corpus-")
    cfg = CorpusConfig(n_sequences=args.n_sequences, frames=args.frames,
                       n_points=args.n_points, seed=args.seed)
    print(f"building corpus in {workdir} ...")
    corpus = build_dataset(cfg, workdir)
    print(f"{len(corpus)} paired sequences")

    net, history = train(TrainingConfig(epochs=args.epochs, lr=args.lr,
                                        seed=args.seed), corpus,
                         verbose=True)
    manifest = export(net, corpus, Path(args.out_dir))
    print(f"loss {history[0]:.3f} -> {history[-1]:.3f}")
    print(f"wrote {manifest}")


if __name__ == "__main__":
    main()
