import gzip

import numpy as np
import pytest
from sklearn.datasets import load_digits

from xlab.datasets import DatasetRegistry, DatasetRegistryEntry, save_idx_images, save_idx_labels
from xlab.network import Conv, Dense, Flatten, MaxPool, NetworkConfig


def tiny_architecture():
    """Down-scaled stack for fast tests: 8x8 -> 6x6x2 -> 4x4x3 -> 2x2x3 -> 12 -> 8 -> 4."""
    return NetworkConfig(
        input_shape=(8, 8, 1),
        layers=(
            Conv(2, activation="relu"),
            Conv(3, activation="relu"),
            MaxPool(),
            Flatten(),
            Dense(8, activation="relu"),
            Dense(4, activation="softmax"),
        ),
    )


@pytest.fixture
def tiny_config():
    return tiny_architecture()


def upscale_digits():
    """The 8x8 sklearn digits rendered at 28x28: a tiny stand-in corpus.

    Real MNIST-family IDX files are not bundled; this gives the pipeline
    genuine image structure to chew on at test scale.
    """
    digits = load_digits()
    small = digits.images / 16.0  # [N,8,8] in [0,1]
    big = np.kron(small, np.ones((3, 3)))  # [N,24,24]
    padded = np.pad(big, ((0, 0), (2, 2), (2, 2)))
    return padded[..., None].astype(np.float32), digits.target.astype(np.int64)


@pytest.fixture(scope="session")
def digits_data():
    images, labels = upscale_digits()
    split = 1400
    return {
        "train_images": images[:split],
        "train_labels": labels[:split],
        "val_images": images[split:],
        "val_labels": labels[split:],
    }


def write_idx_dataset(root, name, train_images, train_labels, val_images, val_labels,
                      gzip_train=False):
    """Materialize a dataset in the conventional on-disk layout."""
    base = root / name
    base.mkdir(parents=True, exist_ok=True)
    ti = base / "train-images-idx3-ubyte"
    tl = base / "train-labels-idx1-ubyte"
    vi = base / "t10k-images-idx3-ubyte"
    vl = base / "t10k-labels-idx1-ubyte"
    save_idx_images(ti, train_images)
    save_idx_labels(tl, train_labels)
    save_idx_images(vi, val_images)
    save_idx_labels(vl, val_labels)
    if gzip_train:
        data = ti.read_bytes()
        gz = ti.with_suffix(ti.suffix + ".gz") if ti.suffix else ti.parent / (ti.name + ".gz")
        with gzip.open(gz, "wb") as fh:
            fh.write(data)
        ti.unlink()
    return base


@pytest.fixture(scope="session")
def digits_root(tmp_path_factory, digits_data):
    root = tmp_path_factory.mktemp("digits-data")
    write_idx_dataset(
        root, "digits",
        digits_data["train_images"], digits_data["train_labels"],
        digits_data["val_images"], digits_data["val_labels"],
    )
    return root


@pytest.fixture(scope="session")
def digits_registry(digits_root):
    return DatasetRegistry.from_data_root(digits_root, names=("digits",))


@pytest.fixture(scope="session")
def digits_victim(digits_registry):
    """A small victim trained once and shared by the pipeline tests."""
    from xlab.datasets import load_dataset
    from xlab.extraction import train_victim

    train_set, val_set = load_dataset(digits_registry, "digits")
    sub_images = train_set.images[:640]
    sub_labels = train_set.labels[:640]

    from xlab.datasets import LabeledImageSet

    sub = LabeledImageSet(sub_images, sub_labels, name="digits")
    config, params, accuracy, history = train_victim(sub, val_set, epochs=2, seed=11)
    return {"config": config, "params": params, "accuracy": accuracy,
            "history": history, "val_set": val_set, "train_set": sub}
