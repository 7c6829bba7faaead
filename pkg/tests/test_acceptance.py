"""Acceptance criteria, one test per criterion, each printing PASS or FAIL.

Criteria that need the real 28x28 corpora (mnist, kmnist, fashion_mnist,
notmnist) look for IDX files under $XLAB_DATA_ROOT (default ./data) and
skip with an explicit reason when the files are absent — this sandbox has
no network access to fetch them. Set XLAB_ACCEPT_FULL=1 to run the
full-protocol variants (hours of CPU time).

Summary of stated tolerances:
  1. gradcheck: 100 random parameters, rel err <= 1e-2 (float32, h=1e-3)
  2. Ising 3x3 beta=0.5 J=+1: TV(empirical 1e6 samples, exact) <= 0.02
  3. mnist victim: >= 98% (12 epochs) or >= 97% (3-epoch desk run)
  4. reduced protocol on mnist: bernoulli 76.58% +- 10pts, ising >= 88%,
     uniform < 30%, ordering holds (normal/gumbel may swap)
  5. full protocol on mnist: post-extraction 95.93% +- 3pts (optional)
  6. hardness ratios strictly ordered mnist > kmnist > fashion > notmnist
  7. beta sweep on mnist: argmax accuracy at beta in {0.2,0.3,0.4}, beating
     beta=0.0 and beta=0.9
  8. reruns with identical seeds are bit-identical
  9. invariant suite (softmax, shapes, weights, reports, round trips)
"""

import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import test_ising as ising_oracle
from xlab.cli import main as cli_main
from xlab.datasets import DatasetRegistry, load_dataset
from xlab.extraction import (
    beta_sweep,
    check_table_ordering,
    compare_distributions,
    make_config,
    run_extraction,
    train_victim,
)
from xlab.noise import gen_ising_set, image_stream, ising_sample

pytestmark = pytest.mark.acceptance

RUN_FULL = os.environ.get("XLAB_ACCEPT_FULL", "") == "1"
SEEDS = dict(victim_seed=1, noise_seed=2, extract_seed=3)


def verdict(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {number} {name}: {status}{suffix}")
    assert ok, f"criterion {number} {name}{suffix}"


def skip(number, name, reason):
    print(f"ACCEPTANCE {number} {name}: SKIP ({reason})")
    pytest.skip(f"criterion {number}: {reason}")


def data_registry():
    root = Path(os.environ.get("XLAB_DATA_ROOT", "data"))
    return DatasetRegistry.from_data_root(root)


def require_datasets(number, name, *names):
    registry = data_registry()
    missing = [n for n in names if n not in registry]
    if missing:
        skip(number, name,
             f"dataset files for {', '.join(missing)} not found under "
             f"$XLAB_DATA_ROOT; place the IDX files there to run this criterion")
    return registry


_victims = {}


def mnist_victim(registry, epochs=12):
    key = epochs
    if key not in _victims:
        train_set, val_set = load_dataset(registry, "mnist")
        config, params, accuracy, _ = train_victim(
            train_set, val_set, epochs=epochs, seed=SEEDS["victim_seed"])
        _victims[key] = (config, params, accuracy, val_set)
    return _victims[key]


def test_criterion_1_gradient_correctness():
    from test_gradcheck import fd_check

    worst = fd_check(np.float32, h=1e-3, floor=1e-2, seed=12345, n_checks=100)
    verdict(1, "gradient correctness", worst <= 1e-2, f"worst rel err {worst:.2e}")


@pytest.mark.slow
def test_criterion_2_ising_sampler_exactness():
    n = 1_000_000
    beta, coupling = 0.5, 1
    probs = ising_oracle.exact_lattice_distribution(3, 3, beta, coupling)
    counts = np.zeros(512, dtype=np.int64)
    weights = 1 << np.arange(9)
    for i in range(n):
        img = ising_sample(3, 3, beta, coupling, 200, image_stream(2024, i))
        counts[int((img.ravel().astype(np.int64) * weights).sum())] += 1
    tv = 0.5 * np.abs(counts / n - probs).sum()
    verdict(2, "ising sampler exactness", tv <= 0.02, f"TV {tv:.4f} over 512 states")


@pytest.mark.slow
def test_criterion_3_victim_accuracy():
    name = "victim accuracy"
    registry = require_datasets(3, name, "mnist")
    if RUN_FULL:
        _, _, accuracy, _ = mnist_victim(registry, epochs=12)
        verdict(3, name, accuracy >= 0.98, f"12-epoch accuracy {accuracy:.4f}")
    else:
        train_set, val_set = load_dataset(registry, "mnist")
        _, _, accuracy, _ = train_victim(train_set, val_set, epochs=3,
                                         seed=SEEDS["victim_seed"])
        verdict(3, name, accuracy >= 0.97, f"3-epoch accuracy {accuracy:.4f}")


@pytest.mark.slow
def test_criterion_4_reduced_protocol_distributions():
    name = "reduced-protocol distribution table"
    registry = require_datasets(4, name, "mnist")
    config, params, _, val_set = mnist_victim(registry)
    rows = compare_distributions(
        config, params, val_set, count=60000, epochs=10,
        noise_seed=SEEDS["noise_seed"], extract_seed=SEEDS["extract_seed"])
    acc = {r["kind"]: r["accuracy"] for r in rows}
    detail = ", ".join(f"{k}={v:.4f}" for k, v in acc.items())
    ok = (
        abs(acc["bernoulli_half"] - 0.7658) <= 0.10
        and acc["ising"] >= 0.88
        and acc["uniform"] < 0.30
        and check_table_ordering(rows)
    )
    verdict(4, name, ok, detail)


@pytest.mark.slow
def test_criterion_5_full_protocol_headline():
    name = "full-protocol headline"
    if not RUN_FULL:
        skip(5, name, "optional full 600000-sample/50-epoch run; "
                      "criterion 4 stands in (set XLAB_ACCEPT_FULL=1)")
    registry = require_datasets(5, name, "mnist")
    config = make_config("mnist", kind="bernoulli_sweep", protocol="full", **SEEDS)
    report = run_extraction(config, registry)
    ok = abs(report.post_accuracy - 0.9593) <= 0.03
    verdict(5, name, ok, f"post-extraction accuracy {report.post_accuracy:.4f}")


@pytest.mark.slow
def test_criterion_6_hardness_ordering():
    name = "hardness ordering"
    datasets = ("mnist", "kmnist", "fashion_mnist", "notmnist")
    registry = require_datasets(6, name, *datasets)
    ratios = {}
    for dataset in datasets:
        config = make_config(dataset, kind="bernoulli_sweep", protocol="reduced", **SEEDS)
        report = run_extraction(config, registry)
        ratios[dataset] = report.ratio
    ordered = (ratios["mnist"] > ratios["kmnist"] > ratios["fashion_mnist"]
               > ratios["notmnist"])
    detail = " > ".join(f"{d}={ratios[d]:.4f}" for d in datasets)
    verdict(6, name, ordered, detail)


@pytest.mark.slow
def test_criterion_7_occams_hill():
    name = "accuracy peak at intermediate beta"
    registry = require_datasets(7, name, "mnist")
    config, params, _, val_set = mnist_victim(registry)
    batch = gen_ising_set(70000, seed=SEEDS["noise_seed"])
    rows = beta_sweep(config, params, batch, val_set, epochs=10,
                      seed=SEEDS["extract_seed"])
    acc = {round(r["beta"], 1): r["accuracy"] for r in rows}
    best = max(acc, key=acc.get)
    ok = best in (0.2, 0.3, 0.4) and acc[best] > acc[0.0] and acc[best] > acc[0.9]
    detail = ", ".join(f"b{b:.1f}={a:.4f}" for b, a in sorted(acc.items()))
    verdict(7, name, ok, f"peak at beta={best}; {detail}")


@pytest.mark.slow
def test_criterion_8_determinism(tmp_path, digits_root):
    name = "bit-identical reruns"
    base = ["--data-root", str(digits_root)]

    def run(command_args, out):
        code = cli_main(command_args + [*base, "--out", str(out)])
        assert code == 0, f"command failed: {command_args}"
        return out

    train_args = ["train-victim", "--dataset", "digits", "--epochs", "1", "--seed", "7"]
    v_a = run(train_args, tmp_path / "v-a")
    v_b = run(train_args, tmp_path / "v-b")
    victim_ok = (v_a / "victim.xlab").read_bytes() == (v_b / "victim.xlab").read_bytes()

    extract_args = ["extract", "--dataset", "digits", "--noise", "bernoulli-sweep",
                    "--count", "200", "--victim-epochs", "1", "--extract-epochs", "1",
                    "--victim-seed", "7", "--noise-seed", "8", "--extract-seed", "9"]
    e_a = run(extract_args, tmp_path / "e-a")
    e_b = run(extract_args, tmp_path / "e-b")
    report_ok = (e_a / "report.json").read_bytes() == (e_b / "report.json").read_bytes()
    clone_ok = (e_a / "extracted.xlab").read_bytes() == (e_b / "extracted.xlab").read_bytes()
    stimuli_ok = (e_a / "stimuli.xstm").read_bytes() == (e_b / "stimuli.xstm").read_bytes()

    verdict(8, name, victim_ok and report_ok and clone_ok and stimuli_ok,
            f"victim={victim_ok}, report={report_ok}, clone={clone_ok}, stimuli={stimuli_ok}")


def test_criterion_9_invariant_suites(tmp_path):
    from xlab.checkpoint import load_checkpoint, save_checkpoint
    from xlab.datasets import load_idx_images, save_idx_images
    from xlab.layers import softmax
    from xlab.losses import compute_class_weights, one_hot
    from xlab.network import default_architecture, init_params

    failures = []

    # softmax normalization and shift invariance; logits land on the 2^-10
    # grid so the +16 shift is exact in float32 and only softmax is measured
    rng = np.random.default_rng(0)
    logits = rng.uniform(-50, 50, size=(256, 10)).astype(np.float32)
    logits = np.round(logits * 1024) / np.float32(1024)
    probs = softmax(logits)
    if np.abs(probs.sum(axis=1) - 1).max() >= 1e-6:
        failures.append("softmax normalization")
    if np.abs(probs - softmax(logits + np.float32(16.0))).max() >= 1e-6:
        failures.append("softmax shift invariance")

    # architecture shape chain
    config = default_architecture()
    shapes = config.layer_shapes()
    expected = [(26, 26, 32), (24, 24, 64), (12, 12, 64)]
    if shapes[:3] != expected or (9216,) not in shapes or shapes[-1] != (10,):
        failures.append("shape chain")

    # class-weight identity when every class appears
    labels = np.concatenate([np.arange(10), rng.integers(0, 10, 500)])
    weights = compute_class_weights(one_hot(labels, 10))
    counts = np.bincount(labels, minlength=10)
    if not math.isclose((counts * weights).sum(), len(labels), rel_tol=1e-12):
        failures.append("class-weight identity")

    # report consistency identities
    matrix = rng.integers(0, 40, size=(10, 10))
    post = float(np.trace(matrix) / matrix.sum())
    pre = 0.875
    from xlab.extraction import hardness_ratio

    if hardness_ratio(pre, post) != post / pre:
        failures.append("hardness ratio identity")

    # IDX round trip
    pixels = rng.integers(0, 256, size=(5, 28, 28, 1), dtype=np.uint8) / np.float32(255)
    idx_path = tmp_path / "imgs"
    save_idx_images(idx_path, pixels.astype(np.float32))
    if not np.array_equal(load_idx_images(idx_path), pixels.astype(np.float32)):
        failures.append("IDX round trip")

    # checkpoint round trip
    params = init_params(config, rng)
    ckpt = tmp_path / "model.xlab"
    save_checkpoint(ckpt, config, params)
    config2, params2 = load_checkpoint(ckpt)
    if config2 != config or not all(
        np.array_equal(a, b) for pair, pair2 in zip(params, params2) for a, b in zip(pair, pair2)
    ):
        failures.append("checkpoint round trip")

    verdict(9, "invariant suites", not failures, ", ".join(failures) or "all identities hold")
