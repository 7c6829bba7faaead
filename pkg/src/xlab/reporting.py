"""Analysis outputs: confusion matrices, class distributions, report files.

Argmax ties always break toward the lowest class index so that every count
in these outputs is reproducible.
"""

import csv
import json
import platform
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .version import __version__


def confusion_matrix(predictions, truth, num_classes=10):
    """Count matrix where entry [t][p] counts samples of truth t predicted p."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or predictions.ndim != 1:
        raise ShapeError(
            f"predictions {predictions.shape} and truth {truth.shape} must be equal-length 1-D"
        )
    joint = truth.astype(np.int64) * num_classes + predictions.astype(np.int64)
    counts = np.bincount(joint, minlength=num_classes * num_classes)
    return counts.reshape(num_classes, num_classes)


def argmax_distribution(responses, num_classes=10):
    """Per-class counts of the row argmax (ties to the lowest index)."""
    responses = np.asarray(responses)
    if responses.ndim != 2:
        raise ShapeError(f"responses must be [N,K], got shape {responses.shape}")
    return np.bincount(responses.argmax(axis=1), minlength=num_classes)


def write_confusion_csv(path, matrix):
    """10 rows x 10 columns; header names the predicted class per column."""
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"pred_{k}" for k in range(matrix.shape[1])])
        for row in matrix:
            writer.writerow([int(v) for v in row])


def write_classdist_csv(path, counts):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "count"])
        for k, v in enumerate(counts):
            writer.writerow([k, int(v)])


def write_betasweep_csv(path, rows):
    """One row per inverse temperature: beta, accuracy, loss."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "accuracy", "loss"])
        for row in rows:
            writer.writerow([repr(float(row["beta"])), repr(float(row["accuracy"])),
                             repr(float(row["loss"]))])


def write_distributions_csv(path, rows):
    """One row per noise kind: kind, accuracy."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "accuracy"])
        for row in rows:
            writer.writerow([row["kind"], repr(float(row["accuracy"]))])


def write_history_csv(path, history):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "accuracy"])
        for i, entry in enumerate(history):
            writer.writerow([i + 1, repr(float(entry["loss"])), repr(float(entry["accuracy"]))])


def emit_report(report, out_dir, formats=("json", "csv")):
    """Materialize a report into out_dir; returns {artifact name: path}.

    JSON carries the full document; CSV emits the confusion matrix and the
    class distribution (plus per-epoch histories) for plotting.
    """
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    if "json" in formats:
        path = out_dir / "report.json"
        with open(path, "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written["report"] = path
    if "csv" in formats:
        write_confusion_csv(out_dir / "confusion.csv", report.confusion)
        write_classdist_csv(out_dir / "classdist.csv", report.class_distribution)
        written["confusion"] = out_dir / "confusion.csv"
        written["classdist"] = out_dir / "classdist.csv"
        for name, history in report.histories.items():
            path = out_dir / f"history_{name}.csv"
            write_history_csv(path, history)
            written[f"history_{name}"] = path
    return written


@dataclass
class RunManifest:
    """Everything needed to re-run a pipeline invocation bit-exactly."""

    command: str
    seeds: dict
    config: dict
    dataset_sizes: dict = field(default_factory=dict)
    stage_seconds: dict = field(default_factory=dict)
    artifact_versions: dict = field(
        default_factory=lambda: {"checkpoint": 1, "stimulus": 1, "report": 1}
    )
    software: str = field(
        default_factory=lambda: f"xlab {__version__} / python {platform.python_version()}"
    )

    def to_json_dict(self):
        return {
            "command": self.command,
            "seeds": self.seeds,
            "config": self.config,
            "datasetSizes": self.dataset_sizes,
            "stageSeconds": self.stage_seconds,
            "artifactVersions": self.artifact_versions,
            "software": self.software,
        }

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
