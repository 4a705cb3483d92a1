"""Stochastic vector quantizer chains for learning manifold structure."""

from .chain import (
    ChainNetwork,
    MultiSeedResult,
    StructureCheckFailed,
    TrainingDiverged,
    TrainingSchedule,
    TrainingTrace,
    chain_gradients,
    chain_objective,
    detect_collapse,
    feedforward,
    train,
    train_multi_seed,
)
from .datasets import (
    Dataset,
    Histogram2D,
    ManifoldSample,
    PhaseSample,
    circular_concentration,
    cooccurrence,
    embed_phases,
    gen_circle,
    gen_hierarchical_phases,
    gen_object_manifold,
    make_dataset,
    rayleigh_uniformity_pvalue,
)
from .stage import (
    McEstimate,
    StageGradients,
    StageObjective,
    SvqStage,
    exact_distortion,
    mc_distortion,
    posterior,
    reconstruct,
    stage_gradients,
    stage_objective,
)

__version__ = "0.1.0"

__all__ = [
    "ChainNetwork",
    "Dataset",
    "Histogram2D",
    "ManifoldSample",
    "McEstimate",
    "MultiSeedResult",
    "PhaseSample",
    "StageGradients",
    "StageObjective",
    "StructureCheckFailed",
    "SvqStage",
    "TrainingDiverged",
    "TrainingSchedule",
    "TrainingTrace",
    "chain_gradients",
    "chain_objective",
    "circular_concentration",
    "cooccurrence",
    "detect_collapse",
    "embed_phases",
    "exact_distortion",
    "feedforward",
    "gen_circle",
    "gen_hierarchical_phases",
    "gen_object_manifold",
    "make_dataset",
    "mc_distortion",
    "posterior",
    "rayleigh_uniformity_pvalue",
    "reconstruct",
    "stage_gradients",
    "stage_objective",
    "train",
    "train_multi_seed",
]
