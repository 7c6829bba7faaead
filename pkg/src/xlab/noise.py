"""Stimulus image generators.

Five families: a Bernoulli success-probability sweep, i.i.d. uniform /
normal / Gumbel / fair-coin pixels, and Ising-lattice samples over a grid
of inverse temperatures. Every image draws from its own Philox stream
derived from (seed, image index), so generation order and parallel
scheduling cannot change the output, and a whole batch is reproducible
bit-for-bit from its NoiseSpec.
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import kernels
from .binio import read_preamble, read_tensor, write_preamble, write_tensor
from .errors import ConfigError, FormatError

STIMULUS_MAGIC = b"XSTM"
STIMULUS_VERSION = 1

# Sweep grids: ten Bernoulli success probabilities, ten inverse temperatures.
DEFAULT_P_GRID = tuple(round(0.01 + 0.1 * i, 2) for i in range(10))
DEFAULT_BETA_GRID = tuple(round(0.1 * i, 1) for i in range(10))

IID_KINDS = ("uniform", "normal", "gumbel", "bernoulli_half")
KINDS = ("bernoulli_sweep",) + IID_KINDS + ("ising",)


@dataclass(frozen=True)
class NoiseSpec:
    """Everything needed to regenerate a stimulus batch."""

    kind: str
    count: int
    dims: tuple = (28, 28)
    p_grid: Optional[tuple] = None
    beta_grid: Optional[tuple] = None
    coupling: int = 1          # +1 favors aligned neighbor pixels, -1 anti-aligned
    sweeps: int = 200
    clip: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r} (one of {', '.join(KINDS)})")
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")
        if self.coupling not in (1, -1):
            raise ConfigError(f"coupling must be +1 or -1, got {self.coupling}")
        if self.sweeps < 1:
            raise ConfigError(f"sweeps must be >= 1, got {self.sweeps}")

    def resolved_grid(self):
        if self.kind == "bernoulli_sweep":
            return tuple(self.p_grid) if self.p_grid is not None else DEFAULT_P_GRID
        if self.kind == "ising":
            return tuple(self.beta_grid) if self.beta_grid is not None else DEFAULT_BETA_GRID
        return None

    def to_dict(self):
        d = asdict(self)
        d["dims"] = list(self.dims)
        d["p_grid"] = list(self.p_grid) if self.p_grid is not None else None
        d["beta_grid"] = list(self.beta_grid) if self.beta_grid is not None else None
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            count=d["count"],
            dims=tuple(d["dims"]),
            p_grid=tuple(d["p_grid"]) if d.get("p_grid") is not None else None,
            beta_grid=tuple(d["beta_grid"]) if d.get("beta_grid") is not None else None,
            coupling=d.get("coupling", 1),
            sweeps=d.get("sweeps", 200),
            clip=d.get("clip", False),
            seed=d.get("seed", 0),
        )


@dataclass
class StimulusBatch:
    """Generated images plus their per-image generation tags.

    params holds the swept parameter for each image (Bernoulli p or Ising
    beta; 0.5 for the fair coin, 0 for the unparameterized kinds).
    """

    images: np.ndarray
    kind: str
    params: np.ndarray
    spec: Optional[NoiseSpec] = None

    def __len__(self):
        return self.images.shape[0]

    def strata(self):
        """Yield (parameter value, index array) per distinct tag, ascending.

        The value is the shortest decimal that round-trips the stored
        float32 tag (so a 0.3 grid point comes back as 0.3).
        """
        for value in np.unique(self.params):
            decimal = float(np.format_float_positional(value, unique=True))
            yield decimal, np.nonzero(self.params == value)[0]


def image_stream(seed: int, index: int) -> np.random.Generator:
    """The dedicated Philox stream of image `index` under `seed`."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def _iid_pixels(kind, shape, rng):
    if kind == "uniform":
        return rng.random(shape, dtype=np.float32)
    if kind == "normal":
        return rng.standard_normal(shape, dtype=np.float32)
    if kind == "gumbel":
        u = rng.random(shape)
        np.maximum(u, np.finfo(np.float64).tiny, out=u)
        return (-np.log(-np.log(u))).astype(np.float32)
    if kind == "bernoulli_half":
        return (rng.random(shape) < 0.5).astype(np.float32)
    raise ConfigError(f"unknown i.i.d. noise kind {kind!r}")


def gen_bernoulli_sweep(count, p_grid=DEFAULT_P_GRID, seed=0, dims=(28, 28)):
    """Binary images stratified over success probabilities, equal strata.

    Stratum order follows p_grid; each pixel is an independent Bernoulli(p)
    draw from the image's own stream.
    """
    p_grid = tuple(p_grid)
    if count % len(p_grid):
        raise ConfigError(f"count {count} is not divisible by the {len(p_grid)} grid values")
    per = count // len(p_grid)
    h, w = dims
    images = np.empty((count, h, w, 1), dtype=np.float32)
    params = np.empty(count, dtype=np.float32)
    i = 0
    for p in p_grid:
        for _ in range(per):
            rng = image_stream(seed, i)
            images[i] = (rng.random((h, w, 1)) < p).astype(np.float32)
            params[i] = p
            i += 1
    spec = NoiseSpec(kind="bernoulli_sweep", count=count, dims=dims, p_grid=p_grid, seed=seed)
    return StimulusBatch(images=images, kind="bernoulli_sweep", params=params, spec=spec)


def gen_iid(kind, count, seed=0, dims=(28, 28), clip=False):
    """Images with every pixel i.i.d. from one named distribution.

    Gumbel uses the inverse-CDF form -ln(-ln(U)). Normal and Gumbel values
    are unbounded; pass clip=True to clamp them into [0,1].
    """
    if kind not in IID_KINDS:
        raise ConfigError(f"gen_iid kind must be one of {', '.join(IID_KINDS)}, got {kind!r}")
    h, w = dims
    images = np.empty((count, h, w, 1), dtype=np.float32)
    for i in range(count):
        images[i] = _iid_pixels(kind, (h, w, 1), image_stream(seed, i))
    if clip:
        np.clip(images, 0.0, 1.0, out=images)
    tag = 0.5 if kind == "bernoulli_half" else 0.0
    params = np.full(count, tag, dtype=np.float32)
    spec = NoiseSpec(kind=kind, count=count, dims=dims, clip=clip, seed=seed)
    return StimulusBatch(images=images, kind=kind, params=params, spec=spec)


def ising_sample(width, height, beta, coupling=1, sweeps=200, rng=None):
    """One binary image from a Metropolis chain on a width x height lattice.

    Spins start as independent fair coins, run `sweeps` full raster sweeps
    of single-flip Metropolis targeting the Gibbs density of
    E(x) = -coupling * sum_edges x_i x_j (4-neighborhood, free boundaries),
    then map -1 -> 0 and +1 -> 1.
    """
    if beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    if sweeps < 1:
        raise ConfigError(f"sweeps must be >= 1, got {sweeps}")
    if rng is None:
        rng = np.random.default_rng()
    spins = np.where(rng.random((height, width)) < 0.5, -1, 1).astype(np.int8)
    kernels.metropolis_sweeps(spins, float(beta), float(coupling), int(sweeps), rng)
    return ((spins + 1) // 2).astype(np.float32)


def gen_ising_set(count, beta_grid=DEFAULT_BETA_GRID, coupling=1, sweeps=200, seed=0, dims=(28, 28)):
    """Equal strata of Ising samples per inverse temperature, tagged by beta."""
    beta_grid = tuple(beta_grid)
    if count % len(beta_grid):
        raise ConfigError(f"count {count} is not divisible by the {len(beta_grid)} grid values")
    per = count // len(beta_grid)
    h, w = dims
    images = np.empty((count, h, w, 1), dtype=np.float32)
    params = np.empty(count, dtype=np.float32)
    i = 0
    for beta in beta_grid:
        for _ in range(per):
            images[i, :, :, 0] = ising_sample(w, h, beta, coupling, sweeps, image_stream(seed, i))
            params[i] = beta
            i += 1
    spec = NoiseSpec(
        kind="ising", count=count, dims=dims, beta_grid=beta_grid,
        coupling=coupling, sweeps=sweeps, seed=seed,
    )
    return StimulusBatch(images=images, kind="ising", params=params, spec=spec)


def generate(spec: NoiseSpec) -> StimulusBatch:
    """Generate the batch a NoiseSpec describes."""
    if spec.kind == "bernoulli_sweep":
        return gen_bernoulli_sweep(spec.count, spec.resolved_grid(), spec.seed, spec.dims)
    if spec.kind == "ising":
        return gen_ising_set(
            spec.count, spec.resolved_grid(), spec.coupling, spec.sweeps, spec.seed, spec.dims
        )
    return gen_iid(spec.kind, spec.count, spec.seed, spec.dims, spec.clip)


def save_stimuli(path, batch: StimulusBatch):
    """Persist a batch (magic "XSTM"): descriptor, tags, then the images."""
    descriptor = {
        "kind": batch.kind,
        "count": int(len(batch)),
        "spec": batch.spec.to_dict() if batch.spec is not None else None,
    }
    with open(path, "wb") as fh:
        write_preamble(fh, STIMULUS_MAGIC, STIMULUS_VERSION, descriptor)
        write_tensor(fh, batch.params)
        write_tensor(fh, batch.images)


def load_stimuli(path) -> StimulusBatch:
    with open(path, "rb") as fh:
        descriptor = read_preamble(fh, STIMULUS_MAGIC, STIMULUS_VERSION)
        params = read_tensor(fh)
        images = read_tensor(fh)
        if fh.read(1):
            raise FormatError("trailing bytes after stimulus tensors")
    if images.shape[0] != descriptor["count"] or params.shape[0] != descriptor["count"]:
        raise FormatError(
            f"stimulus file count {descriptor['count']} does not match stored tensors"
        )
    spec = NoiseSpec.from_dict(descriptor["spec"]) if descriptor.get("spec") else None
    return StimulusBatch(images=images, kind=descriptor["kind"], params=params, spec=spec)
