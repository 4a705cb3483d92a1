"""Synthetic manifold datasets and their latent-coordinate ground truth.

The main generator draws tuples of circular phases from a binary splitting
tree, producing hierarchically correlated angles embedded pairwise as
(cos, sin) coordinates. Companions generate a unit circle and Gaussian
bump ("object") manifolds, and a circular 2-D co-occurrence histogram
summarises how phase pairs populate the torus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "PhaseSample",
    "ManifoldSample",
    "Histogram2D",
    "Dataset",
    "gen_hierarchical_phases",
    "gen_circle",
    "gen_object_manifold",
    "cooccurrence",
    "embed_phases",
    "phases_array",
    "embedded_array",
    "circular_concentration",
    "rayleigh_uniformity_pvalue",
    "make_dataset",
]


@dataclass
class PhaseSample:
    """A tuple of circular phases plus its (cos, sin)-pair embedding."""

    phases: tuple[float, ...]
    embedded: np.ndarray


@dataclass
class ManifoldSample:
    """A latent coordinate and the data vector it maps to."""

    latent: np.ndarray
    data: np.ndarray


@dataclass
class Histogram2D:
    """Circular 2-D count histogram over a pair of angles."""

    bins: np.ndarray
    x_range: tuple[float, float] = (0.0, TWO_PI)
    y_range: tuple[float, float] = (0.0, TWO_PI)

    @property
    def total(self) -> int:
        return int(self.bins.sum())


@dataclass
class Dataset:
    """Array view of a generated dataset with its provenance.

    ``latent`` holds the ground-truth coordinates (phases or manifold
    parameters), ``data`` the vectors the network trains on.
    """

    generator: str
    seed: int
    params: dict = field(default_factory=dict)
    latent: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    data: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    @property
    def count(self) -> int:
        return self.latent.shape[0]


def _rng_of(seed) -> np.random.Generator:
    if hasattr(seed, "uniform"):
        return seed
    return np.random.default_rng(seed)


def embed_phases(phases: np.ndarray) -> np.ndarray:
    """Embed each phase as a (cos, sin) pair: shape (..., P) -> (..., 2P)."""
    phases = np.asarray(phases, dtype=float)
    out = np.empty(phases.shape[:-1] + (2 * phases.shape[-1],))
    out[..., 0::2] = np.cos(phases)
    out[..., 1::2] = np.sin(phases)
    return out


def gen_hierarchical_phases(seed, count: int, depth: int = 2) -> list[PhaseSample]:
    """Draw phase tuples from a binary splitting tree of circular phases.

    The root phase is uniform on [0, 2*pi). Each tree level splits every
    phase ``phi`` into ``(phi - alpha, phi + beta)`` with ``alpha`` and
    ``beta`` drawn independently and uniformly from [0, pi/2]; the leaves
    after ``depth`` levels form the sample (4 leaves at the default depth).
    Leaf phases are reduced into [0, 2*pi) and embedded pairwise.
    """
    if count < 1:
        raise ValueError("cannot generate an empty dataset (count must be >= 1)")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rng = _rng_of(seed)
    phases = rng.uniform(0.0, TWO_PI, (count, 1))
    for _ in range(depth):
        width = phases.shape[1]
        alpha = rng.uniform(0.0, np.pi / 2, (count, width))
        beta = rng.uniform(0.0, np.pi / 2, (count, width))
        split = np.empty((count, 2 * width))
        split[:, 0::2] = phases - alpha
        split[:, 1::2] = phases + beta
        phases = split
    phases = np.mod(phases, TWO_PI)
    embedded = embed_phases(phases)
    return [
        PhaseSample(phases=tuple(row), embedded=emb)
        for row, emb in zip(phases, embedded)
    ]


def gen_circle(seed, count: int) -> list[ManifoldSample]:
    """Points (cos t, sin t) with t uniform on [0, 2*pi); latent is (t,)."""
    if count < 1:
        raise ValueError("cannot generate an empty dataset (count must be >= 1)")
    rng = _rng_of(seed)
    theta = rng.uniform(0.0, TWO_PI, count)
    data = embed_phases(theta[:, None])
    return [
        ManifoldSample(latent=np.array([t]), data=row)
        for t, row in zip(theta, data)
    ]


def gen_object_manifold(sigma: float, positions, grid) -> list[ManifoldSample]:
    """Gaussian bump of width ``sigma`` sampled at ``grid`` locations.

    For each object position ``a`` the data vector has components
    exp(-(i - a)^2 / (2 sigma^2)) at every grid location ``i``.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    samples = []
    for a in positions:
        data = np.exp(-((grid - a) ** 2) / (2.0 * sigma**2))
        samples.append(ManifoldSample(latent=np.array([float(a)]), data=data))
    return samples


def phases_array(samples: list[PhaseSample]) -> np.ndarray:
    return np.array([s.phases for s in samples])


def embedded_array(samples: list[PhaseSample]) -> np.ndarray:
    return np.array([s.embedded for s in samples])


def cooccurrence(samples: list[PhaseSample], i: int, j: int, bins: int) -> Histogram2D:
    """Circular 2-D histogram of the phase pair (i, j); indices are 1-based."""
    if not samples:
        raise ValueError("cooccurrence needs a non-empty sample list")
    width = len(samples[0].phases)
    if not (1 <= i <= width) or not (1 <= j <= width):
        raise ValueError(f"phase indices must be in 1..{width}, got ({i}, {j})")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    phases = phases_array(samples)
    h = TWO_PI / bins
    xi = (np.floor(phases[:, i - 1] / h).astype(int)) % bins
    yj = (np.floor(phases[:, j - 1] / h).astype(int)) % bins
    counts = np.zeros((bins, bins), dtype=int)
    np.add.at(counts, (xi, yj), 1)
    return Histogram2D(bins=counts)


def circular_concentration(angles: np.ndarray) -> float:
    """Resultant length |mean exp(i*angle)|: 1 for identical angles, 0 for uniform."""
    angles = np.asarray(angles, dtype=float)
    return float(np.abs(np.exp(1j * angles).mean()))


def rayleigh_uniformity_pvalue(angles: np.ndarray) -> float:
    """P-value of the Rayleigh test for circular uniformity.

    Small values reject uniformity. Uses the standard fourth-order series
    approximation of the null distribution of n * Rbar^2.
    """
    angles = np.asarray(angles, dtype=float)
    n = angles.size
    if n < 2:
        raise ValueError("need at least 2 angles")
    rbar = circular_concentration(angles)
    z = n * rbar**2
    p = np.exp(-z) * (
        1.0
        + (2.0 * z - z**2) / (4.0 * n)
        - (24.0 * z - 132.0 * z**2 + 76.0 * z**3 - 9.0 * z**4) / (288.0 * n**2)
    )
    return float(min(max(p, 0.0), 1.0))


def make_dataset(generator: str, count: int, seed: int, params: dict | None = None) -> Dataset:
    """Build an array-backed dataset by generator name (CLI entry point)."""
    params = dict(params or {})
    if generator == "hier-phases":
        depth = int(params.get("depth", 2))
        samples = gen_hierarchical_phases(seed, count, depth=depth)
        return Dataset(
            generator=generator,
            seed=seed,
            params={"depth": depth},
            latent=phases_array(samples),
            data=embedded_array(samples),
        )
    if generator == "circle":
        circle = gen_circle(seed, count)
        return Dataset(
            generator=generator,
            seed=seed,
            params={},
            latent=np.array([s.latent for s in circle]),
            data=np.array([s.data for s in circle]),
        )
    if generator == "object":
        sigma = float(params.get("sigma", 1.0))
        lo = float(params.get("low", 0.0))
        hi = float(params.get("high", 4.0))
        grid = params.get("grid", list(range(-5, 6)))
        positions = np.linspace(lo, hi, count)
        samples = gen_object_manifold(sigma, positions, grid)
        return Dataset(
            generator=generator,
            seed=seed,
            params={"sigma": sigma, "low": lo, "high": hi, "grid": list(grid)},
            latent=np.array([s.latent for s in samples]),
            data=np.array([s.data for s in samples]),
        )
    raise ValueError(f"unknown dataset generator {generator!r}")
