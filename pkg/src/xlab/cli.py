"""Command-line front end.

One subcommand per pipeline stage plus the two headline experiments.
Expensive artifacts (victim checkpoints, stimulus files) are written to the
run directory and can be fed back via --reuse-victim / --stimuli-file. All
randomness flows from the three named seeds. Exit codes: 0 success, 1
usage error, 2 runtime error.
"""

import configparser
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import DatasetRegistry, load_dataset
from .errors import ConfigError, XlabError
from .extraction import (
    DISTRIBUTION_KINDS,
    PROTOCOLS,
    ExtractionConfig,
    beta_sweep,
    check_table_ordering,
    compare_distributions,
    evaluate_victim,
    run_extraction,
    train_victim,
)
from .noise import DEFAULT_BETA_GRID, NoiseSpec, gen_ising_set, load_stimuli, save_stimuli
from .reporting import RunManifest, emit_report, write_betasweep_csv, write_distributions_csv
from .version import __version__

# CLI spellings for the stimulus distributions.
NOISE_NAMES = {
    "bernoulli-sweep": "bernoulli_sweep",
    "uniform": "uniform",
    "normal": "normal",
    "gumbel": "gumbel",
    "bernoulli": "bernoulli_half",
    "ising": "ising",
}

ENV_DATA_ROOT = "XLAB_DATA_ROOT"


def _load_cli_config(path):
    """Read defaults from an INI file ([xlab] section)."""
    defaults = {"data_root": "data", "output_root": "runs",
                "victim_seed": 1, "noise_seed": 2, "extract_seed": 3}
    if path is None:
        candidate = Path("xlab.cfg")
        if not candidate.exists():
            return defaults
        path = candidate
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if parser.has_section("xlab"):
        section = parser["xlab"]
        defaults["data_root"] = section.get("data_root", defaults["data_root"])
        defaults["output_root"] = section.get("output_root", defaults["output_root"])
        for key in ("victim_seed", "noise_seed", "extract_seed"):
            if key in section:
                defaults[key] = section.getint(key)
    return defaults


def _apply_threads(threads):
    if threads is None:
        return
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    import numba
    from threadpoolctl import threadpool_limits

    threadpool_limits(limits=threads)
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


class _Ctx:
    def __init__(self, config_path, data_root, output_root, threads):
        cfg = _load_cli_config(config_path)
        env_root = os.environ.get(ENV_DATA_ROOT)
        self.data_root = Path(data_root or env_root or cfg["data_root"])
        self.output_root = Path(output_root or cfg["output_root"])
        self.seeds = {k: cfg[k] for k in ("victim_seed", "noise_seed", "extract_seed")}
        _apply_threads(threads)

    def registry(self, registry_file):
        if registry_file:
            return DatasetRegistry.from_config_file(registry_file)
        return DatasetRegistry.from_data_root(self.data_root)

    def run_dir(self, explicit, default_name):
        path = Path(explicit) if explicit else self.output_root / default_name
        path.mkdir(parents=True, exist_ok=True)
        return path


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="INI file with [xlab] defaults (data_root, output_root, seeds).")(fn)
    fn = click.option("--data-root", default=None,
                      help=f"Directory holding the datasets (or ${ENV_DATA_ROOT}).")(fn)
    fn = click.option("--registry", "registry_file", type=click.Path(), default=None,
                      help="INI registry mapping dataset names to their four IDX files.")(fn)
    fn = click.option("--output-root", default=None, help="Base directory for run outputs.")(fn)
    fn = click.option("--out", default=None, help="Run directory (overrides --output-root).")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Cap internal parallelism (results do not change).")(fn)
    fn = click.option("--verbose", "-v", is_flag=True, default=False)(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="xlab")
def cli():
    """Model-extraction laboratory: victims, noise stimuli, extracted clones."""


@cli.command("train-victim")
@click.option("--dataset", required=True, help="Registered dataset name (e.g. mnist).")
@click.option("--epochs", default=12, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--lr", default=1.0, show_default=True, help="Adadelta learning rate.")
@click.option("--seed", default=None, type=int, help="Victim seed (default from config).")
@_common_options
def cmd_train_victim(dataset, epochs, batch_size, lr, seed, config_path, data_root,
                     registry_file, output_root, out, threads, verbose):
    """Train the dropout-enabled victim and write its checkpoint."""
    ctx = _Ctx(config_path, data_root, output_root, threads)
    seed = ctx.seeds["victim_seed"] if seed is None else seed
    run_dir = ctx.run_dir(out, f"train-victim-{dataset}-s{seed}")
    registry = ctx.registry(registry_file)

    t0 = time.perf_counter()
    train_set, val_set = load_dataset(registry, dataset)
    t1 = time.perf_counter()
    config, params, accuracy, history = train_victim(
        train_set, val_set, epochs=epochs, batch_size=batch_size, learning_rate=lr,
        seed=seed, verbose=verbose,
    )
    t2 = time.perf_counter()

    ckpt = run_dir / "victim.xlab"
    save_checkpoint(ckpt, config, params)
    manifest = RunManifest(
        command="train-victim",
        seeds={"victim": seed},
        config={"dataset": dataset, "epochs": epochs, "batchSize": batch_size,
                "learningRate": lr},
        dataset_sizes={dataset: {"train": len(train_set), "validation": len(val_set)}},
        stage_seconds={"load-dataset": t1 - t0, "train-victim": t2 - t1},
    )
    manifest_path = manifest.write(run_dir / "manifest.json")
    click.echo(f"checkpoint: {ckpt}")
    click.echo(f"validation accuracy: {accuracy:.4f}")
    click.echo(f"manifest: {manifest_path}")


def _load_victim(path, val_set):
    config, params = load_checkpoint(path)
    accuracy = evaluate_victim(config, params, val_set)
    return config, params, accuracy, []


@cli.command("extract")
@click.option("--dataset", required=True)
@click.option("--noise", "noise_name", default="bernoulli-sweep", show_default=True,
              type=click.Choice(sorted(NOISE_NAMES)), help="Stimulus distribution.")
@click.option("--protocol", default="full", show_default=True,
              type=click.Choice(sorted(PROTOCOLS)),
              help="full = 600000 stimuli / 50 epochs; reduced = 60000 / 10.")
@click.option("--count", default=None, type=int, help="Override the stimulus count.")
@click.option("--extract-epochs", default=None, type=int, help="Override the clone epochs.")
@click.option("--victim-epochs", default=12, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--soft-targets/--hard-targets", default=True, show_default=True,
              help="Train the clone on softmax rows or on one-hot argmax labels.")
@click.option("--sweeps", default=200, show_default=True, help="Metropolis sweeps per Ising image.")
@click.option("--coupling", default=1, type=int, show_default=True,
              help="Ising neighbor coupling sign (+1 or -1).")
@click.option("--clip", is_flag=True, default=False, help="Clip unbounded noise into [0,1].")
@click.option("--victim-seed", default=None, type=int)
@click.option("--noise-seed", default=None, type=int)
@click.option("--extract-seed", default=None, type=int)
@click.option("--reuse-victim", "reuse_victim", type=click.Path(), default=None,
              help="Checkpoint of an already trained victim.")
@click.option("--stimuli-file", type=click.Path(), default=None,
              help="Previously generated stimulus file (.xstm).")
@_common_options
def cmd_extract(dataset, noise_name, protocol, count, extract_epochs, victim_epochs,
                batch_size, soft_targets, sweeps, coupling, clip, victim_seed, noise_seed,
                extract_seed, reuse_victim, stimuli_file, config_path, data_root,
                registry_file, output_root, out, threads, verbose):
    """Run the whole extraction pipeline and write its report."""
    ctx = _Ctx(config_path, data_root, output_root, threads)
    victim_seed = ctx.seeds["victim_seed"] if victim_seed is None else victim_seed
    noise_seed = ctx.seeds["noise_seed"] if noise_seed is None else noise_seed
    extract_seed = ctx.seeds["extract_seed"] if extract_seed is None else extract_seed
    kind = NOISE_NAMES[noise_name]
    preset = PROTOCOLS[protocol]
    stimuli = load_stimuli(stimuli_file) if stimuli_file else None
    if stimuli is not None and stimuli.spec is not None:
        # a reused stimulus file is authoritative about how it was generated
        spec = stimuli.spec
    else:
        spec = NoiseSpec(
            kind=kind,
            count=count if count is not None else preset["count"],
            sweeps=sweeps,
            coupling=coupling,
            clip=clip,
            seed=noise_seed,
        )
    config = ExtractionConfig(
        dataset=dataset,
        noise=spec,
        victim_epochs=victim_epochs,
        extract_epochs=extract_epochs if extract_epochs is not None else preset["extract_epochs"],
        batch_size=batch_size,
        soft_targets=soft_targets,
        victim_seed=victim_seed,
        extract_seed=extract_seed,
    )
    run_dir = ctx.run_dir(
        out, f"extract-{dataset}-{noise_name}-{protocol}-v{victim_seed}n{noise_seed}e{extract_seed}"
    )
    registry = ctx.registry(registry_file)
    train_set, val_set = load_dataset(registry, dataset)

    victim = _load_victim(reuse_victim, val_set) if reuse_victim else None

    timings, artifacts = {}, {}
    report = run_extraction(config, registry, victim=victim, stimuli=stimuli,
                            splits=(train_set, val_set), verbose=verbose,
                            timings=timings, artifacts=artifacts)

    victim_config, victim_params = artifacts["victim"]
    clone_config, clone_params = artifacts["clone"]
    pairs = artifacts["pairs"]
    if not reuse_victim:
        save_checkpoint(run_dir / "victim.xlab", victim_config, victim_params)
    if not stimuli_file:
        save_stimuli(run_dir / "stimuli.xstm", pairs.stimuli)
    np.save(run_dir / "responses.npy", pairs.responses)
    save_checkpoint(run_dir / "extracted.xlab", clone_config, clone_params)
    emit_report(report, run_dir)

    manifest = RunManifest(
        command="extract",
        seeds=report.seeds,
        config=report.config,
        dataset_sizes={dataset: {"train": len(train_set), "validation": len(val_set)}},
        stage_seconds=timings,
    )
    manifest_path = manifest.write(run_dir / "manifest.json")
    click.echo(f"pre-extraction accuracy:  {report.pre_accuracy:.4f}")
    click.echo(f"post-extraction accuracy: {report.post_accuracy:.4f}")
    click.echo(f"hardness ratio:           {report.ratio:.4f}")
    click.echo(f"manifest: {manifest_path}")


@cli.command("sweep-beta")
@click.option("--dataset", required=True)
@click.option("--count-per-beta", default=7000, show_default=True)
@click.option("--betas", default=",".join(str(b) for b in DEFAULT_BETA_GRID),
              show_default=True, help="Comma-separated inverse temperatures (need >= 2).")
@click.option("--sweeps", default=200, show_default=True)
@click.option("--coupling", default=1, type=int, show_default=True,
              help="Ising neighbor coupling sign (+1 or -1).")
@click.option("--epochs", default=10, show_default=True, help="Clone epochs per stratum.")
@click.option("--victim-epochs", default=12, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--victim-seed", default=None, type=int)
@click.option("--noise-seed", default=None, type=int)
@click.option("--extract-seed", default=None, type=int)
@click.option("--reuse-victim", "reuse_victim", type=click.Path(), default=None)
@_common_options
def cmd_sweep_beta(dataset, count_per_beta, betas, sweeps, coupling, epochs, victim_epochs,
                   batch_size, victim_seed, noise_seed, extract_seed, reuse_victim,
                   config_path, data_root, registry_file, output_root, out, threads, verbose):
    """Train one clone per inverse temperature and tabulate accuracy/loss."""
    ctx = _Ctx(config_path, data_root, output_root, threads)
    victim_seed = ctx.seeds["victim_seed"] if victim_seed is None else victim_seed
    noise_seed = ctx.seeds["noise_seed"] if noise_seed is None else noise_seed
    extract_seed = ctx.seeds["extract_seed"] if extract_seed is None else extract_seed
    try:
        beta_grid = tuple(float(b) for b in betas.split(",") if b.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"cannot parse --betas {betas!r}: {exc}") from exc
    if len(beta_grid) < 2:
        raise ConfigError("the sweep needs at least 2 beta values")

    run_dir = ctx.run_dir(out, f"sweep-beta-{dataset}-v{victim_seed}n{noise_seed}e{extract_seed}")
    registry = ctx.registry(registry_file)
    train_set, val_set = load_dataset(registry, dataset)

    timings = {}
    t0 = time.perf_counter()
    if reuse_victim:
        victim_config, victim_params, pre_accuracy, _ = _load_victim(reuse_victim, val_set)
    else:
        victim_config, victim_params, pre_accuracy, _ = train_victim(
            train_set, val_set, epochs=victim_epochs, batch_size=batch_size,
            seed=victim_seed, verbose=verbose,
        )
        save_checkpoint(run_dir / "victim.xlab", victim_config, victim_params)
    timings["victim"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    batch = gen_ising_set(count_per_beta * len(beta_grid), beta_grid=beta_grid,
                          coupling=coupling, sweeps=sweeps, seed=noise_seed)
    timings["generate-stimuli"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rows = beta_sweep(victim_config, victim_params, batch, val_set,
                      epochs=epochs, batch_size=batch_size, seed=extract_seed, verbose=verbose)
    timings["sweep"] = time.perf_counter() - t0

    csv_path = run_dir / "betasweep.csv"
    write_betasweep_csv(csv_path, rows)
    best = max(rows, key=lambda r: r["accuracy"])
    manifest = RunManifest(
        command="sweep-beta",
        seeds={"victim": victim_seed, "noise": noise_seed, "extract": extract_seed},
        config={"dataset": dataset, "countPerBeta": count_per_beta,
                "betaGrid": list(beta_grid), "sweeps": sweeps, "coupling": coupling,
                "epochs": epochs, "victimEpochs": victim_epochs, "batchSize": batch_size,
                "preExtractionAccuracy": pre_accuracy},
        dataset_sizes={dataset: {"train": len(train_set), "validation": len(val_set)}},
        stage_seconds=timings,
    )
    manifest_path = manifest.write(run_dir / "manifest.json")
    for row in rows:
        click.echo(f"beta {row['beta']:.2f}  accuracy {row['accuracy']:.4f}  loss {row['loss']:.4f}")
    click.echo(f"best beta: {best['beta']:.2f} (accuracy {best['accuracy']:.4f})")
    click.echo(f"table: {csv_path}")
    click.echo(f"manifest: {manifest_path}")


@cli.command("compare-distributions")
@click.option("--dataset", required=True)
@click.option("--count", default=60000, show_default=True, help="Stimuli per distribution.")
@click.option("--epochs", default=10, show_default=True)
@click.option("--victim-epochs", default=12, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--check-ordering", is_flag=True, default=False,
              help="Print PASS/FAIL for uniform < normal < gumbel < bernoulli < ising "
                   "(the adjacent normal/gumbel pair may swap).")
@click.option("--victim-seed", default=None, type=int)
@click.option("--noise-seed", default=None, type=int)
@click.option("--extract-seed", default=None, type=int)
@click.option("--reuse-victim", "reuse_victim", type=click.Path(), default=None)
@_common_options
def cmd_compare_distributions(dataset, count, epochs, victim_epochs, batch_size,
                              check_ordering, victim_seed, noise_seed, extract_seed,
                              reuse_victim, config_path, data_root, registry_file,
                              output_root, out, threads, verbose):
    """Reduced-protocol extraction for each noise distribution, one shared victim."""
    ctx = _Ctx(config_path, data_root, output_root, threads)
    victim_seed = ctx.seeds["victim_seed"] if victim_seed is None else victim_seed
    noise_seed = ctx.seeds["noise_seed"] if noise_seed is None else noise_seed
    extract_seed = ctx.seeds["extract_seed"] if extract_seed is None else extract_seed
    run_dir = ctx.run_dir(
        out, f"compare-distributions-{dataset}-v{victim_seed}n{noise_seed}e{extract_seed}"
    )
    registry = ctx.registry(registry_file)
    train_set, val_set = load_dataset(registry, dataset)

    timings = {}
    t0 = time.perf_counter()
    if reuse_victim:
        victim_config, victim_params, pre_accuracy, _ = _load_victim(reuse_victim, val_set)
    else:
        victim_config, victim_params, pre_accuracy, _ = train_victim(
            train_set, val_set, epochs=victim_epochs, batch_size=batch_size,
            seed=victim_seed, verbose=verbose,
        )
        save_checkpoint(run_dir / "victim.xlab", victim_config, victim_params)
    timings["victim"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rows = compare_distributions(
        victim_config, victim_params, val_set,
        count=count, epochs=epochs, batch_size=batch_size,
        noise_seed=noise_seed, extract_seed=extract_seed, verbose=verbose,
    )
    timings["compare"] = time.perf_counter() - t0

    csv_path = run_dir / "distributions.csv"
    write_distributions_csv(csv_path, rows)
    manifest = RunManifest(
        command="compare-distributions",
        seeds={"victim": victim_seed, "noise": noise_seed, "extract": extract_seed},
        config={"dataset": dataset, "count": count, "epochs": epochs,
                "victimEpochs": victim_epochs, "batchSize": batch_size,
                "kinds": list(DISTRIBUTION_KINDS), "preExtractionAccuracy": pre_accuracy},
        dataset_sizes={dataset: {"train": len(train_set), "validation": len(val_set)}},
        stage_seconds=timings,
    )
    manifest_path = manifest.write(run_dir / "manifest.json")
    for row in rows:
        click.echo(f"{row['kind']:<15} accuracy {row['accuracy']:.4f}")
    if check_ordering:
        verdict = "PASS" if check_table_ordering(rows) else "FAIL"
        click.echo(f"ordering uniform < normal < gumbel < bernoulli < ising: {verdict}")
    click.echo(f"table: {csv_path}")
    click.echo(f"manifest: {manifest_path}")


def main(argv=None):
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 2
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except XlabError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
