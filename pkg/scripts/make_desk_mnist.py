"""Write a small MNIST train/test split in IDX format.

Source: the 5000-image MNIST subset bundled with ``mlxtend`` (500 images per
digit, drawn from the standard training set).  Within each digit the first
80% of samples, in file order, become the training split and the rest the
test split.  The output directory then works with ``tnvqc train --data-dir``.

    python scripts/make_desk_mnist.py data/mnist-desk
"""

from __future__ import annotations

import argparse
import gzip
import sys
from pathlib import Path

import numpy as np

from tnvqc.data import TEST_FILES, TRAIN_FILES, write_idx_images, write_idx_labels


def _bundled_csv() -> Path:
    import mlxtend.data

    return Path(mlxtend.data.__file__).parent / "data" / "mnist_5k.csv.gz"


def build(out_dir: Path, csv_path: Path | None = None, train_fraction: float = 0.8) -> tuple[int, int]:
    csv_path = csv_path or _bundled_csv()
    with gzip.open(csv_path, "rt") as fh:
        table = np.loadtxt(fh, delimiter=",", dtype=np.int64)
    images, labels = table[:, :-1].astype(np.uint8), table[:, -1].astype(np.uint8)
    train_idx, test_idx = [], []
    for digit in range(10):
        idx = np.flatnonzero(labels == digit)
        cut = int(round(train_fraction * len(idx)))
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    train_idx, test_idx = np.sort(train_idx), np.sort(test_idx)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_idx_images(out_dir / TRAIN_FILES[0], images[train_idx])
    write_idx_labels(out_dir / TRAIN_FILES[1], labels[train_idx])
    write_idx_images(out_dir / TEST_FILES[0], images[test_idx])
    write_idx_labels(out_dir / TEST_FILES[1], labels[test_idx])
    return len(train_idx), len(test_idx)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--csv", type=Path, default=None, help="mnist_5k.csv.gz (default: mlxtend's copy)")
    args = parser.parse_args(argv)
    n_train, n_test = build(args.out_dir, args.csv)
    print(f"wrote {n_train} training and {n_test} test images to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
