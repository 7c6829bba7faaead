"""End-to-end extraction pipeline.

Train a victim on real data, query it with noise stimuli, fit a clone on
the stimulus/response pairs with argmax-derived class re-weighting, then
score both models on the victim's validation split. The clone uses the
victim architecture minus its dropout layers so it can overfit the
stimuli. Everything is deterministic given the three seeds (victim, noise,
extraction).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .datasets import load_dataset
from .errors import ConfigError, PipelineError, ShapeError
from .losses import LOG_EPS, compute_class_weights, one_hot
from .network import NetworkConfig, default_architecture
from .noise import NoiseSpec, StimulusBatch, generate
from .reporting import argmax_distribution, confusion_matrix
from .training import predict, train
from .validation import check_probability_rows

# Stimulus count and clone-training epochs for the two standard protocols.
PROTOCOLS = {
    "full": {"count": 600000, "extract_epochs": 50},
    "reduced": {"count": 60000, "extract_epochs": 10},
}


def derive_seed(seed: int, index: int) -> int:
    """Stable child seed for stage `index` of a named seed."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(index,)).generate_state(1)[0])


@dataclass
class StimulusResponseSet:
    """Noise stimuli paired with the victim's softmax responses."""

    stimuli: StimulusBatch
    responses: np.ndarray

    def __post_init__(self):
        if len(self.stimuli) != self.responses.shape[0]:
            raise ShapeError(
                f"{len(self.stimuli)} stimuli but {self.responses.shape[0]} responses"
            )
        check_probability_rows(self.responses, self.responses.shape[1], tol=1e-5)

    def __len__(self):
        return self.responses.shape[0]


@dataclass(frozen=True)
class ExtractionConfig:
    """Full description of one extraction run."""

    dataset: str
    noise: NoiseSpec
    victim_epochs: int = 12
    extract_epochs: int = 50
    batch_size: int = 128
    learning_rate: float = 1.0
    rho: float = 0.95
    epsilon: float = 1e-7
    soft_targets: bool = True
    victim_seed: int = 1
    extract_seed: int = 3

    def __post_init__(self):
        if self.victim_epochs < 1 or self.extract_epochs < 1:
            raise ConfigError("victim_epochs and extract_epochs must both be >= 1")

    @property
    def seeds(self):
        return {"victim": self.victim_seed, "noise": self.noise.seed, "extract": self.extract_seed}

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "noise": self.noise.to_dict(),
            "victimEpochs": self.victim_epochs,
            "extractEpochs": self.extract_epochs,
            "batchSize": self.batch_size,
            "learningRate": self.learning_rate,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "softTargets": self.soft_targets,
        }


def make_config(dataset, kind="bernoulli_sweep", protocol="full", *, victim_seed=1,
                noise_seed=2, extract_seed=3, **noise_kwargs) -> ExtractionConfig:
    """Convenience constructor applying a named protocol preset."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r} (one of {', '.join(PROTOCOLS)})")
    preset = PROTOCOLS[protocol]
    noise = NoiseSpec(kind=kind, count=preset["count"], seed=noise_seed, **noise_kwargs)
    return ExtractionConfig(
        dataset=dataset,
        noise=noise,
        extract_epochs=preset["extract_epochs"],
        victim_seed=victim_seed,
        extract_seed=extract_seed,
    )


@dataclass
class ExtractionReport:
    """Outcome of one run: accuracies, hardness ratio, distributions, histories."""

    config: dict
    seeds: dict
    pre_accuracy: float
    post_accuracy: float
    ratio: float
    class_distribution: list
    confusion: list
    histories: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "config": self.config,
            "seeds": self.seeds,
            "accuracies": {"preExtraction": self.pre_accuracy, "postExtraction": self.post_accuracy},
            "ratio": self.ratio,
            "classDistribution": [int(v) for v in self.class_distribution],
            "confusionMatrix": [[int(v) for v in row] for row in self.confusion],
            "histories": self.histories,
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(
            config=d["config"],
            seeds=d["seeds"],
            pre_accuracy=d["accuracies"]["preExtraction"],
            post_accuracy=d["accuracies"]["postExtraction"],
            ratio=d["ratio"],
            class_distribution=d["classDistribution"],
            confusion=d["confusionMatrix"],
            histories=d["histories"],
        )


def hardness_ratio(pre: float, post: float) -> float:
    """Post- over pre-extraction validation accuracy; higher = easier to steal."""
    if pre <= 0:
        raise ConfigError(f"pre-extraction accuracy must be positive, got {pre}")
    return post / pre


def train_victim(train_set, val_set, *, epochs=12, batch_size=128, learning_rate=1.0,
                 rho=0.95, epsilon=1e-7, seed=1, verbose=0):
    """Fit the dropout-enabled architecture on real data.

    Returns (config, params, validation_accuracy, history).
    """
    config = default_architecture(include_dropout=True)
    params, history = train(
        config, train_set.images, train_set.labels,
        epochs=epochs, batch_size=batch_size, lr=learning_rate, rho=rho, epsilon=epsilon,
        seed=seed, verbose=verbose,
    )
    probs = predict(config, params, val_set.images)
    accuracy = float((probs.argmax(axis=1) == val_set.labels).mean())
    return config, params, accuracy, history


def query_victim(config: NetworkConfig, params, stimuli: StimulusBatch,
                 batch_size=256) -> StimulusResponseSet:
    """Collect the victim's softmax output for every stimulus (no dropout)."""
    responses = predict(config, params, stimuli.images, batch_size=batch_size)
    return StimulusResponseSet(stimuli=stimuli, responses=responses)


def evaluate_victim(config: NetworkConfig, params, val_set) -> float:
    """Validation accuracy of a (possibly reloaded) victim model."""
    probs = predict(config, params, val_set.images)
    return float((probs.argmax(axis=1) == val_set.labels).mean())


def train_extractor(victim_config: NetworkConfig, pairs: StimulusResponseSet, *,
                    epochs, batch_size=128, learning_rate=1.0, rho=0.95, epsilon=1e-7,
                    soft_targets=True, seed=3, verbose=0):
    """Fit the clone (victim architecture minus dropout) on stimulus/response pairs.

    Targets are the full softmax rows by default; with soft_targets=False
    the clone trains on one-hot argmax labels instead. Either way the loss
    is re-weighted by balanced class weights from the response argmax.
    """
    clone_config = victim_config.without_dropout()
    weights = compute_class_weights(pairs.responses)
    if soft_targets:
        targets = pairs.responses
    else:
        targets = one_hot(pairs.responses.argmax(axis=1), clone_config.num_classes)
    params, history = train(
        clone_config, pairs.stimuli.images, targets,
        epochs=epochs, batch_size=batch_size, lr=learning_rate, rho=rho, epsilon=epsilon,
        class_weights=weights, seed=seed, verbose=verbose,
    )
    return clone_config, params, weights, history


def _validation_metrics(config, params, val_set):
    """Confusion matrix, accuracy (trace over total), and mean CE loss."""
    probs = predict(config, params, val_set.images)
    matrix = confusion_matrix(probs.argmax(axis=1), val_set.labels)
    accuracy = float(np.trace(matrix) / matrix.sum())
    truth = one_hot(val_set.labels, probs.shape[1])
    loss = float(-(truth * np.log(probs.astype(np.float64) + LOG_EPS)).sum(axis=1).mean())
    return matrix, accuracy, loss


def run_extraction(config: ExtractionConfig, registry, *, victim=None, stimuli=None,
                   splits=None, verbose=0, timings=None, artifacts=None) -> ExtractionReport:
    """Execute the whole pipeline described by `config`.

    `victim` may carry a pre-trained (network config, params, pre_accuracy,
    history) tuple, `stimuli` a pre-generated StimulusBatch, and `splits` a
    pre-loaded (train, val) pair; matching stages are then skipped. Any
    stage failure raises PipelineError tagged with the stage name.
    `timings`, when given a dict, collects per-stage wall-clock seconds;
    `artifacts`, when given a dict, receives the trained models and the
    stimulus/response pairs for persistence.
    """

    def stage(name, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, str(exc)) from exc
        if timings is not None:
            timings[name] = time.perf_counter() - start
        return result

    if splits is None:
        splits = stage("load-dataset", lambda: load_dataset(registry, config.dataset))
    train_set, val_set = splits

    if victim is None:
        victim = stage(
            "train-victim",
            lambda: train_victim(
                train_set, val_set,
                epochs=config.victim_epochs, batch_size=config.batch_size,
                learning_rate=config.learning_rate, rho=config.rho, epsilon=config.epsilon,
                seed=config.victim_seed, verbose=verbose,
            ),
        )
    victim_config, victim_params, pre_accuracy, victim_history = victim

    if stimuli is None:
        stimuli = stage("generate-stimuli", lambda: generate(config.noise))
    pairs = stage("query-victim", lambda: query_victim(victim_config, victim_params, stimuli))

    clone_config, clone_params, _, extract_history = stage(
        "train-extraction",
        lambda: train_extractor(
            victim_config, pairs,
            epochs=config.extract_epochs, batch_size=config.batch_size,
            learning_rate=config.learning_rate, rho=config.rho, epsilon=config.epsilon,
            soft_targets=config.soft_targets, seed=config.extract_seed, verbose=verbose,
        ),
    )

    def build_report():
        matrix, post_accuracy, _ = _validation_metrics(clone_config, clone_params, val_set)
        return ExtractionReport(
            config=config.to_dict(),
            seeds=config.seeds,
            pre_accuracy=pre_accuracy,
            post_accuracy=post_accuracy,
            ratio=hardness_ratio(pre_accuracy, post_accuracy),
            class_distribution=[int(v) for v in argmax_distribution(pairs.responses)],
            confusion=[[int(v) for v in row] for row in matrix],
            histories={"victim": victim_history, "extraction": extract_history},
        )

    report = stage("evaluate", build_report)
    if artifacts is not None:
        artifacts["victim"] = (victim_config, victim_params)
        artifacts["clone"] = (clone_config, clone_params)
        artifacts["pairs"] = pairs
    return report


def beta_sweep(victim_config, victim_params, batch: StimulusBatch, val_set, *,
               epochs=10, batch_size=128, learning_rate=1.0, rho=0.95, epsilon=1e-7,
               soft_targets=True, seed=3, verbose=0):
    """Train one clone per inverse-temperature stratum, score each on validation.

    Returns rows [{"beta", "accuracy", "loss"}, ...] in ascending beta — the
    data behind the accuracy/loss-versus-correlation curves. Requires at
    least two distinct strata.
    """
    strata = list(batch.strata())
    if len(strata) < 2:
        raise ConfigError(f"beta sweep needs >= 2 strata, got {len(strata)}")
    rows = []
    for k, (beta, idx) in enumerate(strata):
        stratum = StimulusBatch(images=batch.images[idx], kind=batch.kind,
                                params=batch.params[idx], spec=None)
        pairs = query_victim(victim_config, victim_params, stratum)
        clone_config, clone_params, _, _ = train_extractor(
            victim_config, pairs,
            epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
            rho=rho, epsilon=epsilon, soft_targets=soft_targets,
            seed=derive_seed(seed, k), verbose=verbose,
        )
        _, accuracy, loss = _validation_metrics(clone_config, clone_params, val_set)
        rows.append({"beta": float(beta), "accuracy": accuracy, "loss": loss})
        if verbose:
            print(f"beta {beta:.1f}  accuracy {accuracy:.4f}  loss {loss:.4f}")
    return rows


DISTRIBUTION_KINDS = ("uniform", "normal", "gumbel", "bernoulli_half", "ising")


def compare_distributions(victim_config, victim_params, val_set, *,
                          kinds=DISTRIBUTION_KINDS, count=60000, epochs=10,
                          batch_size=128, learning_rate=1.0, rho=0.95, epsilon=1e-7,
                          soft_targets=True, noise_seed=2, extract_seed=3, verbose=0):
    """Reduced-protocol extraction once per noise kind against a shared victim.

    Returns rows [{"kind", "accuracy", "loss"}, ...] in the order given.
    """
    rows = []
    for k, kind in enumerate(kinds):
        spec = NoiseSpec(kind=kind, count=count, seed=derive_seed(noise_seed, k))
        batch = generate(spec)
        pairs = query_victim(victim_config, victim_params, batch)
        clone_config, clone_params, _, _ = train_extractor(
            victim_config, pairs,
            epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
            rho=rho, epsilon=epsilon, soft_targets=soft_targets,
            seed=derive_seed(extract_seed, k), verbose=verbose,
        )
        _, accuracy, loss = _validation_metrics(clone_config, clone_params, val_set)
        rows.append({"kind": kind, "accuracy": accuracy, "loss": loss})
        if verbose:
            print(f"{kind}: accuracy {accuracy:.4f}")
    return rows


def check_table_ordering(rows, allow_adjacent_swap=("normal", "gumbel")) -> bool:
    """True when accuracies rise along uniform < normal < gumbel < bernoulli < ising.

    The named adjacent pair may swap (their accuracies sit close together).
    """
    acc = {row["kind"]: row["accuracy"] for row in rows}
    order = [k for k in DISTRIBUTION_KINDS if k in acc]
    values = [acc[k] for k in order]
    ok = all(a < b for a, b in zip(values, values[1:]))
    if ok:
        return True
    if allow_adjacent_swap and all(k in acc for k in allow_adjacent_swap):
        swapped = dict(acc)
        a, b = allow_adjacent_swap
        swapped[a], swapped[b] = swapped[b], swapped[a]
        values = [swapped[k] for k in order]
        return all(x < y for x, y in zip(values, values[1:]))
    return False
