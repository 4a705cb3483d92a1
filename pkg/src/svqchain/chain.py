"""Feed-forward chains of quantizer stages and their training loop.

Each stage encodes the previous stage's code probability vector (the raw
data for stage 1), so the forward pass is deterministic. The network
objective is a weighted sum of the per-stage distortions; training is
plain gradient descent on that weighted total, with gradients flowing
from every stage objective back into all upstream parameters unless the
schedule disables cross-stage flow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .stage import (
    StageGradients,
    StageObjective,
    SvqStage,
    code_responses,
    stage_backward,
)

__all__ = [
    "ChainNetwork",
    "TrainingSchedule",
    "TrainingTrace",
    "TrainingDiverged",
    "StructureCheckFailed",
    "MultiSeedResult",
    "feedforward",
    "chain_objective",
    "chain_gradients",
    "train",
    "train_multi_seed",
    "detect_collapse",
]


class TrainingDiverged(RuntimeError):
    """Weighted objective became non-finite during training."""

    def __init__(self, epoch: int, stage: int):
        self.epoch = epoch
        self.stage = stage
        super().__init__(
            f"training diverged at epoch {epoch}: stage {stage} objective is non-finite"
        )


class StructureCheckFailed(RuntimeError):
    """No seed in a multi-seed run produced a network passing the check."""

    def __init__(self, seeds):
        self.seeds = list(seeds)
        super().__init__(
            f"structure check failed for all {len(self.seeds)} seeds tried: {self.seeds}"
        )


@dataclass
class ChainNetwork:
    """Ordered quantizer stages plus per-stage objective weights."""

    stages: list[SvqStage]
    lambdas: np.ndarray

    def __post_init__(self) -> None:
        if len(self.stages) < 1:
            raise ValueError("a chain needs at least one stage")
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        if self.lambdas.shape != (len(self.stages),):
            raise ValueError(
                f"need one weight per stage, got {self.lambdas.shape} for {len(self.stages)} stages"
            )
        if np.any(self.lambdas <= 0) or not np.all(np.isfinite(self.lambdas)):
            raise ValueError("stage weights must be positive and finite")
        for l in range(1, len(self.stages)):
            if self.stages[l].input_dim != self.stages[l - 1].m:
                raise ValueError(
                    f"stage {l + 1} input_dim {self.stages[l].input_dim} != "
                    f"stage {l} codebook size {self.stages[l - 1].m}"
                )

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        """Sizes of all layers, input layer first."""
        return (self.stages[0].input_dim,) + tuple(s.m for s in self.stages)

    @classmethod
    def build(
        cls,
        layer_sizes,
        sample_counts,
        lambdas=None,
        init_range: float = 0.1,
        seed=0,
    ) -> "ChainNetwork":
        """Build a chain from layer sizes (input first) and per-stage sample counts."""
        layer_sizes = tuple(int(v) for v in layer_sizes)
        sample_counts = tuple(int(v) for v in sample_counts)
        if len(layer_sizes) < 2:
            raise ValueError("layer_sizes must list the input layer and at least one stage")
        if len(sample_counts) != len(layer_sizes) - 1:
            raise ValueError("need one sample count per stage")
        if lambdas is None:
            lambdas = np.ones(len(sample_counts))
        rng = np.random.default_rng(seed)
        stages = [
            SvqStage.initialised(m, n, d, rng, init_range)
            for d, m, n in zip(layer_sizes[:-1], layer_sizes[1:], sample_counts)
        ]
        return cls(stages=stages, lambdas=np.asarray(lambdas, dtype=float))

    def copy(self) -> "ChainNetwork":
        return ChainNetwork(
            stages=[s.copy() for s in self.stages], lambdas=self.lambdas.copy()
        )


@dataclass
class TrainingSchedule:
    """Gradient-descent schedule: per-stage, per-parameter-family step sizes.

    Steps decay by ``decay`` per epoch once the epoch index passes the
    stage's ``decay_offsets`` entry; by default stage ``l`` (1-based)
    starts decaying after ``l * 10%`` of the epochs so that earlier stages
    settle first. ``batch_size=None`` means full-batch descent.
    """

    epochs: int
    steps_w: list[float]
    steps_b: list[float]
    steps_recon: list[float]
    decay: float = 0.99
    decay_offsets: list[int] | None = None
    batch_size: int | None = None
    init_range: float = 0.1
    seed: int = 0
    cross_stage: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (0.0 < self.decay <= 1.0):
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")
        for name in ("steps_w", "steps_b", "steps_recon"):
            vals = [float(v) for v in getattr(self, name)]
            setattr(self, name, vals)
            if any(v < 0 for v in vals):
                raise ValueError(f"{name} entries must be >= 0")

    def resolved_offsets(self, depth: int) -> list[int]:
        if self.decay_offsets is not None:
            if len(self.decay_offsets) != depth:
                raise ValueError("need one decay offset per stage")
            return [int(v) for v in self.decay_offsets]
        # stage l (1-based) holds its step for the first l*10% of epochs
        return [-(-((l + 1) * self.epochs) // 10) for l in range(depth)]

    def step(self, family: str, stage_index: int, epoch: int, offsets: list[int]) -> float:
        base = {"w": self.steps_w, "b": self.steps_b, "recon": self.steps_recon}[family][
            stage_index
        ]
        return base * self.decay ** max(0, epoch - offsets[stage_index])

    def for_depth(self, depth: int) -> "TrainingSchedule":
        """Broadcast single-entry step lists across ``depth`` stages."""
        def widen(vals):
            return vals * depth if len(vals) == 1 and depth > 1 else vals

        return replace(
            self,
            steps_w=widen(self.steps_w),
            steps_b=widen(self.steps_b),
            steps_recon=widen(self.steps_recon),
        )


@dataclass
class TrainingTrace:
    """Objective history: one record per epoch, taken before that epoch's update.

    ``final_*`` hold the objective of the trained network after the last
    update (equal to the last record when no update happened).
    """

    per_stage: np.ndarray  # (epochs, depth, 3): d1, d2, total
    weighted: np.ndarray  # (epochs,)
    final_per_stage: np.ndarray  # (depth, 3)
    final_weighted: float
    collapsed_stages: list[int] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return self.per_stage.shape[0]

    def initial_weighted(self) -> float:
        return float(self.weighted[0]) if self.epochs else self.final_weighted


def feedforward(chain: ChainNetwork, x0: np.ndarray) -> list[np.ndarray]:
    """Code probability vectors of every stage for input ``x0``.

    Stage ``l`` encodes stage ``l-1``'s probability vector, so each output
    sums to 1. Accepts a single vector or a batch (rows).
    """
    x = np.asarray(x0, dtype=float)
    single = x.ndim == 1
    outputs = []
    for stage in chain.stages:
        _, _, P = code_responses(stage, x)
        x = P
        outputs.append(P[0] if single else P)
    return outputs


def chain_objective(
    chain: ChainNetwork, batch: np.ndarray
) -> tuple[list[StageObjective], float]:
    """Per-stage objectives on a batch and their weighted total."""
    objs, weighted, _ = _forward_stats(chain, np.asarray(batch, dtype=float))
    return objs, weighted


def _forward_stats(chain: ChainNetwork, X: np.ndarray, keep: bool = False):
    """Forward pass collecting objectives; optionally keep per-stage caches."""
    if X.size == 0:
        raise ValueError("chain objective needs a non-empty batch")
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != chain.stages[0].input_dim:
        raise ValueError(
            f"batch dimension {X.shape[1]} != stage 1 input_dim {chain.stages[0].input_dim}"
        )
    objs: list[StageObjective] = []
    caches = []
    x = X
    for stage in chain.stages:
        Q, Z, P = code_responses(stage, x)
        diff = x[:, None, :] - stage.recon[None, :, :]
        e_sq = np.einsum("bmd,bmd->bm", diff, diff)
        resid = x - P @ stage.recon
        d1 = float((P * e_sq).sum(axis=1).mean())
        d2 = float((resid * resid).sum(axis=1).mean())
        n = stage.n
        objs.append(
            StageObjective(d1=d1, d2=d2, total=(2.0 / n) * d1 + (2.0 * (n - 1) / n) * d2)
        )
        if keep:
            caches.append((x, Q, Z, P, e_sq, resid))
        x = P
    weighted = float(sum(lam * o.total for lam, o in zip(chain.lambdas, objs)))
    return objs, weighted, caches


def chain_gradients(
    chain: ChainNetwork, batch: np.ndarray, cross_stage: bool = True
) -> tuple[list[StageGradients], list[StageObjective], float]:
    """Gradients of the weighted total for every stage's parameters.

    With ``cross_stage`` set, stage parameters receive gradient from all
    downstream stage objectives through the chained probability vectors;
    otherwise each stage sees only its own weighted objective.
    """
    X = np.asarray(batch, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    objs, weighted, caches = _forward_stats(chain, X, keep=True)
    grads: list[StageGradients | None] = [None] * chain.depth
    G = None
    for l in range(chain.depth - 1, -1, -1):
        x, Q, Z, P, e_sq, resid = caches[l]
        gw, gb, gr, gx = stage_backward(
            chain.stages[l], x, Q, Z, P, float(chain.lambdas[l]), G, e_sq, resid
        )
        grads[l] = StageGradients(weights=gw, biases=gb, recon=gr)
        G = gx if cross_stage else None
    return grads, objs, weighted


def detect_collapse(chain: ChainNetwork, X: np.ndarray, tol: float = 1e-3) -> list[int]:
    """Indices (0-based) of stages mapping all inputs to nearly one posterior.

    A stage is flagged when every posterior in the batch lies within
    total-variation ``tol/2`` of the batch mean posterior, which bounds all
    pairwise total-variation distances by ``tol``.
    """
    flagged = []
    outputs = feedforward(chain, np.asarray(X, dtype=float))
    for l, P in enumerate(outputs):
        centre = P.mean(axis=0)
        tv = 0.5 * np.abs(P - centre).sum(axis=1)
        if tv.max() <= tol / 2:
            flagged.append(l)
    return flagged


def _reinitialised(chain: ChainNetwork, rng: np.random.Generator, init_range: float) -> ChainNetwork:
    stages = [
        SvqStage.initialised(s.m, s.n, s.input_dim, rng, init_range) for s in chain.stages
    ]
    return ChainNetwork(stages=stages, lambdas=chain.lambdas.copy())


def train(
    chain: ChainNetwork, data: np.ndarray, schedule: TrainingSchedule
) -> tuple[ChainNetwork, TrainingTrace]:
    """Train a chain by gradient descent on the weighted total objective.

    The chain argument fixes the architecture only: parameters are drawn
    fresh, uniformly from ``[-init_range, init_range]`` with the schedule's
    seed, so a (chain spec, data, schedule) triple is fully reproducible.
    Raises :class:`TrainingDiverged` if the objective becomes non-finite.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training data must be a non-empty 2-D array")
    schedule = schedule.for_depth(chain.depth)
    for name in ("steps_w", "steps_b", "steps_recon"):
        if len(getattr(schedule, name)) != chain.depth:
            raise ValueError(f"{name} must list one step size per stage")
    offsets = schedule.resolved_offsets(chain.depth)
    rng = np.random.default_rng(schedule.seed)
    net = _reinitialised(chain, rng, schedule.init_range)

    depth = chain.depth
    per_stage = np.zeros((schedule.epochs, depth, 3))
    weighted_hist = np.zeros(schedule.epochs)
    batch_size = schedule.batch_size or X.shape[0]

    def record(epoch: int, objs, weighted: float) -> None:
        for l, o in enumerate(objs):
            per_stage[epoch, l] = (o.d1, o.d2, o.total)
            if not np.isfinite(o.total):
                raise TrainingDiverged(epoch=epoch, stage=l + 1)
        weighted_hist[epoch] = weighted

    def apply(grads, epoch: int) -> None:
        for l, (stage, g) in enumerate(zip(net.stages, grads)):
            stage.weights -= schedule.step("w", l, epoch, offsets) * g.weights
            stage.biases -= schedule.step("b", l, epoch, offsets) * g.biases
            stage.recon -= schedule.step("recon", l, epoch, offsets) * g.recon

    for epoch in range(schedule.epochs):
        if batch_size >= X.shape[0]:
            grads, objs, weighted = chain_gradients(net, X, schedule.cross_stage)
            record(epoch, objs, weighted)
            apply(grads, epoch)
        else:
            objs, weighted, _ = _forward_stats(net, X)
            record(epoch, objs, weighted)
            order = rng.permutation(X.shape[0])
            for start in range(0, X.shape[0], batch_size):
                sl = order[start : start + batch_size]
                grads, _, _ = chain_gradients(net, X[sl], schedule.cross_stage)
                apply(grads, epoch)

    objs, weighted, _ = _forward_stats(net, X)
    final = np.array([(o.d1, o.d2, o.total) for o in objs])
    if not np.isfinite(weighted):
        bad = next(l for l, o in enumerate(objs) if not np.isfinite(o.total))
        raise TrainingDiverged(epoch=schedule.epochs, stage=bad + 1)
    collapsed = detect_collapse(net, X)
    if collapsed:
        warnings.warn(
            f"stages {[l + 1 for l in collapsed]} map all inputs to one posterior",
            RuntimeWarning,
            stacklevel=2,
        )
    trace = TrainingTrace(
        per_stage=per_stage,
        weighted=weighted_hist,
        final_per_stage=final,
        final_weighted=weighted,
        collapsed_stages=collapsed,
    )
    return net, trace


@dataclass
class MultiSeedResult:
    chain: ChainNetwork
    trace: TrainingTrace
    seed: int
    seeds_tried: list[int]


def train_multi_seed(
    chain: ChainNetwork,
    data: np.ndarray,
    schedule: TrainingSchedule,
    seeds,
    check,
) -> MultiSeedResult:
    """Train with each seed in turn, returning the first run passing ``check``.

    ``check(trained_chain, data) -> bool`` judges the self-organised
    structure. Raises :class:`StructureCheckFailed` when no seed passes.
    """
    tried = []
    for seed in seeds:
        tried.append(int(seed))
        candidate, trace = train(chain, data, replace(schedule, seed=int(seed)))
        if check(candidate, data):
            return MultiSeedResult(
                chain=candidate, trace=trace, seed=int(seed), seeds_tried=tried
            )
    raise StructureCheckFailed(tried)
