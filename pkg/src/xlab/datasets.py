"""IDX ingestion for the 28x28 grayscale dataset family.

Files may be raw IDX or gzip-compressed (detected by the gzip magic, not
the file name). Pixels come out normalized to [0,1]; labels are validated
against the 10-class range. Datasets are located through a registry that
maps a name to its four files, either by convention under a data root
(``<root>/<name>/train-images-idx3-ubyte[.gz]`` etc., with ``t10k-`` or
``test-`` prefixes for the evaluation split) or through an INI registry
file with one section per dataset.
"""

import configparser
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError, FormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
KNOWN_NAMES = ("mnist", "kmnist", "fashion_mnist", "notmnist")

_TRAIN_IMAGES = "train-images-idx3-ubyte"
_TRAIN_LABELS = "train-labels-idx1-ubyte"
_TEST_IMAGES = ("t10k-images-idx3-ubyte", "test-images-idx3-ubyte")
_TEST_LABELS = ("t10k-labels-idx1-ubyte", "test-labels-idx1-ubyte")


@dataclass(frozen=True)
class LabeledImageSet:
    """Images in [0,1]^(N,28,28,1) with integer labels in 0..9."""

    images: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise DatasetError(
                f"{self.name or 'dataset'}: {self.images.shape[0]} images but "
                f"{self.labels.shape[0]} labels"
            )

    def __len__(self):
        return self.images.shape[0]


@dataclass(frozen=True)
class DatasetRegistryEntry:
    name: str
    train_images: Path
    train_labels: Path
    test_images: Path
    test_labels: Path


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_be32(fh, path, what):
    raw = fh.read(4)
    if len(raw) != 4:
        raise FormatError(f"{path}: truncated while reading {what}")
    return struct.unpack(">I", raw)[0]


def load_idx_images(path):
    """Read an IDX image file into a [N,28,28,1] float32 tensor in [0,1]."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"image file not found: {path}")
    with _open_maybe_gzip(path) as fh:
        magic = _read_be32(fh, path, "magic")
        if magic != IMAGE_MAGIC:
            raise FormatError(f"{path}: bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
        count = _read_be32(fh, path, "image count")
        rows = _read_be32(fh, path, "row count")
        cols = _read_be32(fh, path, "column count")
        if (rows, cols) != (28, 28):
            raise FormatError(f"{path}: expected 28x28 images, got {rows}x{cols}")
        raw = fh.read(count * rows * cols)
        if len(raw) != count * rows * cols:
            raise FormatError(f"{path}: truncated pixel data ({len(raw)} of {count * rows * cols} bytes)")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after pixel data")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(count, 28, 28, 1)
    return pixels.astype(np.float32) / np.float32(255.0)


def load_idx_labels(path):
    """Read an IDX label file into an int64 array, values validated in 0..9."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"label file not found: {path}")
    with _open_maybe_gzip(path) as fh:
        magic = _read_be32(fh, path, "magic")
        if magic != LABEL_MAGIC:
            raise FormatError(f"{path}: bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
        count = _read_be32(fh, path, "label count")
        raw = fh.read(count)
        if len(raw) != count:
            raise FormatError(f"{path}: truncated label data ({len(raw)} of {count} bytes)")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after label data")
    labels = np.frombuffer(raw, dtype=np.uint8)
    if labels.size and labels.max() > 9:
        raise FormatError(f"{path}: label {labels.max()} outside 0..9")
    return labels.astype(np.int64)


def save_idx_images(path, images):
    """Write [N,28,28,1] pixels in [0,1] back to IDX bytes (inverse of load)."""
    images = np.asarray(images)
    if images.ndim != 4 or images.shape[1:] != (28, 28, 1):
        raise DatasetError(f"expected [N,28,28,1] images, got shape {images.shape}")
    data = np.round(images * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, images.shape[0], 28, 28))
        fh.write(data.tobytes())


def save_idx_labels(path, labels):
    labels = np.asarray(labels)
    if labels.ndim != 1 or (labels.size and (labels.min() < 0 or labels.max() > 9)):
        raise DatasetError("labels must be a 1-D array with values in 0..9")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.astype(np.uint8).tobytes())


def _find_conventional(root: Path, name: str):
    base = root / name
    if not base.is_dir():
        return None

    def pick(candidates):
        for stem in candidates:
            for suffix in ("", ".gz"):
                p = base / (stem + suffix)
                if p.exists():
                    return p
        return None

    paths = (
        pick([_TRAIN_IMAGES]),
        pick([_TRAIN_LABELS]),
        pick(list(_TEST_IMAGES)),
        pick(list(_TEST_LABELS)),
    )
    if any(p is None for p in paths):
        return None
    return DatasetRegistryEntry(name, *paths)


class DatasetRegistry:
    """Maps dataset names to their four IDX files."""

    def __init__(self, entries=None):
        self._entries = dict(entries or {})

    @classmethod
    def from_data_root(cls, root, names=None):
        """Discover datasets laid out conventionally under a directory.

        With names=None every subdirectory holding the four conventional
        files is registered (the standard corpus uses mnist, kmnist,
        fashion_mnist and notmnist).
        """
        root = Path(root)
        if names is None:
            names = sorted(p.name for p in root.iterdir() if p.is_dir()) if root.is_dir() else []
        entries = {}
        for name in names:
            entry = _find_conventional(root, name)
            if entry is not None:
                entries[name] = entry
        return cls(entries)

    @classmethod
    def from_config_file(cls, path):
        """Read an INI file with one [name] section per dataset.

        Each section needs train_images, train_labels, test_images and
        test_labels keys; relative paths resolve against the file's folder.
        """
        path = Path(path)
        if not path.exists():
            raise DatasetError(f"registry file not found: {path}")
        parser = configparser.ConfigParser()
        parser.read(path)
        entries = {}
        for name in parser.sections():
            section = parser[name]
            missing = [k for k in ("train_images", "train_labels", "test_images", "test_labels")
                       if k not in section]
            if missing:
                raise DatasetError(f"registry entry [{name}] is missing {', '.join(missing)}")
            base = path.parent
            entries[name] = DatasetRegistryEntry(
                name,
                base / section["train_images"],
                base / section["train_labels"],
                base / section["test_images"],
                base / section["test_labels"],
            )
        return cls(entries)

    def names(self):
        return sorted(self._entries)

    def __contains__(self, name):
        return name in self._entries

    def entry(self, name) -> DatasetRegistryEntry:
        if name not in self._entries:
            known = ", ".join(self.names()) or "none"
            raise DatasetError(f"unknown dataset {name!r} (registered: {known})")
        return self._entries[name]


def load_dataset(registry: DatasetRegistry, name: str):
    """Load (train, validation) splits; validation is the standard test split."""
    entry = registry.entry(name)
    train = LabeledImageSet(
        load_idx_images(entry.train_images), load_idx_labels(entry.train_labels), name=name
    )
    val = LabeledImageSet(
        load_idx_images(entry.test_images), load_idx_labels(entry.test_labels), name=name
    )
    return train, val
