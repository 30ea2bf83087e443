"""MNIST IDX file reading/writing and two-digit filtering."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError
from .features import N_PIXELS, normalize_pixels

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28

TRAIN_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
TEST_FILES = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")

__all__ = [
    "LabeledDataset",
    "load_idx_images",
    "load_idx_labels",
    "write_idx_images",
    "write_idx_labels",
    "filter_binary",
    "load_split",
]


@dataclass(frozen=True)
class LabeledDataset:
    """Normalized images (one row each) with binary labels."""

    images: np.ndarray
    labels: np.ndarray
    split_name: str
    source_digits: tuple[int, int]
    raw: np.ndarray | None = None

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise InputError("images and labels differ in length")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise InputError("labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.labels)


def _read_bytes(path) -> bytes:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    opener = gzip.open if head == b"\x1f\x8b" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _header(buf: bytes, n_words: int) -> tuple[int, ...]:
    need = 4 * n_words
    if len(buf) < need:
        raise FormatError(f"truncated IDX header: {len(buf)} of {need} bytes", offset=len(buf))
    return struct.unpack(f">{n_words}I", buf[:need])


def load_idx_images(path) -> np.ndarray:
    """Read an IDX3 image file into a ``(count, 784)`` uint8 array."""
    buf = _read_bytes(path)
    magic = _header(buf, 1)[0]
    if magic != IMAGE_MAGIC:
        raise FormatError(f"bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}", offset=0)
    _, count, rows, cols = _header(buf, 4)
    if rows != IMAGE_SIDE:
        raise FormatError(f"row count {rows} != {IMAGE_SIDE}", offset=8)
    if cols != IMAGE_SIDE:
        raise FormatError(f"column count {cols} != {IMAGE_SIDE}", offset=12)
    payload = count * rows * cols
    if len(buf) - 16 < payload:
        raise FormatError(f"truncated image payload: header promises {count} images", offset=len(buf))
    return np.frombuffer(buf, dtype=np.uint8, count=payload, offset=16).reshape(count, rows * cols)


def load_idx_labels(path) -> np.ndarray:
    """Read an IDX1 label file into a uint8 array."""
    buf = _read_bytes(path)
    magic = _header(buf, 1)[0]
    if magic != LABEL_MAGIC:
        raise FormatError(f"bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}", offset=0)
    _, count = _header(buf, 2)
    if len(buf) - 8 < count:
        raise FormatError(f"truncated label payload: header promises {count} labels", offset=len(buf))
    return np.frombuffer(buf, dtype=np.uint8, count=count, offset=8).copy()


def write_idx_images(path, images) -> None:
    images = np.asarray(images, dtype=np.uint8).reshape(-1, N_PIXELS)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4I", IMAGE_MAGIC, len(images), IMAGE_SIDE, IMAGE_SIDE))
        fh.write(images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8).ravel()
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2I", LABEL_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def filter_binary(images, labels, digit_a: int = 3, digit_b: int = 6, split_name: str = "train") -> LabeledDataset:
    """Keep two digits, in file order, relabelled ``digit_a -> 0`` and ``digit_b -> 1``."""
    if digit_a == digit_b:
        raise InputError("the two digits must differ")
    labels = np.asarray(labels)
    images = np.asarray(images)
    keep = np.flatnonzero((labels == digit_a) | (labels == digit_b))
    if keep.size == 0:
        raise InputError(f"no samples with digits {digit_a} or {digit_b}")
    raw = images[keep]
    return LabeledDataset(
        images=normalize_pixels(raw),
        labels=(labels[keep] == digit_b).astype(np.int64),
        split_name=split_name,
        source_digits=(digit_a, digit_b),
        raw=raw,
    )


def _locate(data_dir: Path, name: str) -> Path:
    for candidate in (data_dir / name, data_dir / (name + ".gz")):
        if candidate.exists():
            return candidate
    # torchvision-style names use a dot before "idx"
    dotted = name.replace("-idx", ".idx")
    for candidate in (data_dir / dotted, data_dir / (dotted + ".gz")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{name} not found in {data_dir}")


def load_split(data_dir, split: str, digits: tuple[int, int] = (3, 6)) -> LabeledDataset:
    """Load the train or test split from a directory of standard MNIST files."""
    if split not in ("train", "test"):
        raise InputError(f"unknown split {split!r}")
    data_dir = Path(data_dir)
    img_name, lab_name = TRAIN_FILES if split == "train" else TEST_FILES
    images = load_idx_images(_locate(data_dir, img_name))
    labels = load_idx_labels(_locate(data_dir, lab_name))
    if len(images) != len(labels):
        raise FormatError(f"{len(images)} images but {len(labels)} labels")
    return filter_binary(images, labels, *digits, split_name=split)
