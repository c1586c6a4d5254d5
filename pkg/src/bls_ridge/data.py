"""Dataset loading: MNIST IDX files, CSV tables and synthetic blobs.

All loaders return a :class:`Dataset` whose inputs lie in ``[0, 1]`` and
whose targets are one-hot rows.
"""

from __future__ import annotations

import csv
import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DATA_ENV",
    "IDX_IMAGES_MAGIC",
    "IDX_LABELS_MAGIC",
    "IdxError",
    "IdxMagicError",
    "IdxTruncatedError",
    "IdxCountMismatchError",
    "CsvFormatError",
    "Dataset",
    "one_hot",
    "data_dir",
    "mnist_paths",
    "load_mnist",
    "read_idx",
    "write_idx",
    "load_idx",
    "load_csv",
    "save_csv",
    "synth_blobs",
]

#: Environment variable naming the dataset cache directory.
DATA_ENV = "BLS_RIDGE_DATA"

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    """Malformed IDX file."""


class IdxMagicError(IdxError):
    """The magic number does not match the expected IDX type."""


class IdxTruncatedError(IdxError):
    """The file is shorter than its header declares."""


class IdxCountMismatchError(IdxError):
    """Image and label files hold different numbers of items."""


class CsvFormatError(ValueError):
    """Ragged rows or non-numeric cells in a CSV file."""


@dataclass
class Dataset:
    """Inputs ``X`` (``l x d`` in ``[0, 1]``), one-hot ``Y`` (``l x c``) and integer ``labels``."""

    X: np.ndarray
    Y: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if not (self.X.shape[0] == self.Y.shape[0] == self.labels.shape[0]):
            raise ValueError(
                f"row counts differ: X {self.X.shape}, Y {self.Y.shape}, "
                f"labels {self.labels.shape}"
            )

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_classes(self) -> int:
        return self.Y.shape[1]

    def subset(self, index) -> "Dataset":
        idx = np.arange(len(self))[index] if isinstance(index, slice) else np.asarray(index)
        return Dataset(self.X[idx], self.Y[idx], self.labels[idx])

    def head(self, n: int) -> "Dataset":
        return self.subset(slice(0, n))

    def split(self, n_train: int, seed: int | None = None) -> tuple["Dataset", "Dataset"]:
        """First ``n_train`` rows (after an optional seeded shuffle) and the rest."""
        if not 0 < n_train < len(self):
            raise ValueError(f"n_train must be in (0, {len(self)}), got {n_train}")
        order = np.arange(len(self))
        if seed is not None:
            order = np.random.default_rng(seed).permutation(len(self))
        return self.subset(order[:n_train]), self.subset(order[n_train:])


def one_hot(labels, n_classes: int | None = None) -> np.ndarray:
    """Return the ``l x c`` indicator matrix for integer ``labels``."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be non-negative")
    c = int(labels.max()) + 1 if n_classes is None else n_classes
    if labels.size and labels.max() >= c:
        raise ValueError(f"label {labels.max()} out of range for {c} classes")
    Y = np.zeros((labels.size, c))
    Y[np.arange(labels.size), labels] = 1.0
    return Y


# -- IDX ------------------------------------------------------------------

def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx(path, expected_magic: int) -> np.ndarray:
    """Parse an unsigned-byte IDX file into a ``uint8`` array of its declared shape."""
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IdxTruncatedError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise IdxMagicError(
            f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxTruncatedError(f"{path}: header declares {ndim} dims but file ends early")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header < size:
        raise IdxTruncatedError(
            f"{path}: expected {size} data bytes, found {len(raw) - header}"
        )
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    """Write a ``uint8`` array as an IDX file (used for fixtures and caching)."""
    array = np.asarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.tobytes())


def load_idx(images_path, labels_path, n_classes: int = 10) -> Dataset:
    """Load an IDX image/label pair, scaling pixels by ``1/255``."""
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise IdxCountMismatchError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    lab = labels.astype(np.int64)
    return Dataset(X, one_hot(lab, n_classes), lab)


def data_dir() -> Path:
    """Dataset cache directory: ``$BLS_RIDGE_DATA`` or ``~/.cache/bls-ridge``."""
    env = os.environ.get(DATA_ENV)
    return Path(env) if env else Path.home() / ".cache" / "bls-ridge"


_MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def mnist_paths(split: str = "train", root=None) -> tuple[Path, Path]:
    """Paths of the MNIST image and label files under ``root/mnist``.

    A gzipped copy (``.gz`` suffix) is used when the plain file is absent.
    """
    base = Path(root) if root is not None else data_dir()
    out = []
    for name in _MNIST_FILES[split]:
        p = base / "mnist" / name
        if not p.exists() and p.with_name(name + ".gz").exists():
            p = p.with_name(name + ".gz")
        out.append(p)
    return out[0], out[1]


def load_mnist(split: str = "train", root=None) -> Dataset:
    images, labels = mnist_paths(split, root)
    if not images.exists() or not labels.exists():
        raise FileNotFoundError(
            f"MNIST {split} files not found under {images.parent}; "
            f"set {DATA_ENV} to the directory containing mnist/"
        )
    return load_idx(images, labels)


# -- CSV ------------------------------------------------------------------

def _minmax(X: np.ndarray) -> np.ndarray:
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    out = np.zeros_like(X)
    nz = span > 0
    out[:, nz] = (X[:, nz] - lo[nz]) / span[nz]
    return out


def load_csv(path, label_column: int = -1, *, header: bool = False,
             scale: bool = True) -> Dataset:
    """Load a numeric CSV table.

    Features are min-max scaled per column (a constant column becomes all
    zeros).  Labels are mapped to ``0..c-1`` in order of first appearance.

    Parameters
    ----------
    path : path-like
    label_column : int, default -1
        Index of the label column; negative values count from the end.
    header : bool, default False
        Skip the first row.
    scale : bool, default True
        Apply min-max scaling.  Disable only for data already in ``[0, 1]``.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if header:
        rows = rows[1:]
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise CsvFormatError(f"{path}: need a label column and at least one feature")
    col = label_column % width
    feats, raw_labels = [], []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CsvFormatError(f"{path}: row {i} has {len(row)} cells, expected {width}")
        raw_labels.append(row[col].strip())
        try:
            feats.append([float(v) for j, v in enumerate(row) if j != col])
        except ValueError as exc:
            raise CsvFormatError(f"{path}: row {i}: {exc}") from None
    X = np.array(feats, dtype=np.float64)
    if not np.isfinite(X).all():
        raise CsvFormatError(f"{path}: non-finite feature value")
    codes: dict[str, int] = {}
    labels = np.array([codes.setdefault(v, len(codes)) for v in raw_labels], dtype=np.int64)
    if scale:
        X = _minmax(X)
    elif X.size and (X.min() < 0 or X.max() > 1):
        raise CsvFormatError(f"{path}: unscaled features outside [0, 1]")
    return Dataset(X, one_hot(labels, len(codes)), labels)


def save_csv(path, data: Dataset) -> None:
    """Write features then the label, at full precision, with no header."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for x, lab in zip(data.X, data.labels):
            w.writerow([repr(float(v)) for v in x] + [str(int(lab))])


# -- synthetic ------------------------------------------------------------

def synth_blobs(seed: int, l: int, d: int, c: int, separation: float = 5.0,
                sigma: float = 1.0) -> Dataset:
    """Gaussian class blobs, min-max scaled to ``[0, 1]``.

    Class centres are random unit directions times ``separation * sigma``;
    labels cycle through ``0..c-1`` so every class is present when ``c <= l``.
    """
    if l < 1 or d < 1 or c < 1 or c > l:
        raise ValueError(f"invalid counts l={l}, d={d}, c={c} (need 1 <= c <= l)")
    if separation < 0 or sigma <= 0:
        raise ValueError("separation must be >= 0 and sigma > 0")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((c, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    labels = rng.permutation(np.arange(l) % c)
    X = dirs[labels] * (separation * sigma) + sigma * rng.standard_normal((l, d))
    return Dataset(_minmax(X), one_hot(labels, c), labels.astype(np.int64))
