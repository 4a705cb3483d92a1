"""Single stochastic vector quantizer stage.

A stage encodes an input vector as a probability vector over ``m`` code
indices (normalised sigmoid responses) and decodes a histogram of ``n``
code samples as a linear combination of per-code reconstruction vectors.
The training objective is the expected squared reconstruction error with
the histogram fluctuations summed out analytically, which splits into a
per-code term ``d1`` and a mean-reconstruction term ``d2``:

    total = (2/n) * d1 + (2*(n-1)/n) * d2

``exact_distortion`` (histogram enumeration) and ``mc_distortion``
(multinomial Monte Carlo) provide independent oracles for the same
expectation and exist purely to validate ``stage_objective``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import factorial

import numpy as np

__all__ = [
    "SvqStage",
    "StageObjective",
    "StageGradients",
    "McEstimate",
    "posterior",
    "reconstruct",
    "stage_objective",
    "stage_gradients",
    "exact_distortion",
    "mc_distortion",
]


@dataclass
class SvqStage:
    """One encoder/decoder: code weights, biases and reconstruction vectors.

    ``weights`` and ``recon`` have shape ``(m, input_dim)``; ``biases`` has
    shape ``(m,)``. ``n`` is the number of code samples the decoder may
    draw, which sets the weighting between the two objective terms.
    """

    m: int
    n: int
    input_dim: int
    weights: np.ndarray
    biases: np.ndarray
    recon: np.ndarray

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1 or self.input_dim < 1:
            raise ValueError(
                f"m, n and input_dim must be >= 1, got ({self.m}, {self.n}, {self.input_dim})"
            )
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        self.recon = np.asarray(self.recon, dtype=float)
        if self.weights.shape != (self.m, self.input_dim):
            raise ValueError(f"weights shape {self.weights.shape} != ({self.m}, {self.input_dim})")
        if self.biases.shape != (self.m,):
            raise ValueError(f"biases shape {self.biases.shape} != ({self.m},)")
        if self.recon.shape != (self.m, self.input_dim):
            raise ValueError(f"recon shape {self.recon.shape} != ({self.m}, {self.input_dim})")
        for name, arr in (("weights", self.weights), ("biases", self.biases), ("recon", self.recon)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in stage {name}")

    @classmethod
    def initialised(
        cls, m: int, n: int, input_dim: int, rng: np.random.Generator, init_range: float = 0.1
    ) -> "SvqStage":
        """Stage with all parameters drawn uniformly from [-init_range, init_range]."""
        return cls(
            m=m,
            n=n,
            input_dim=input_dim,
            weights=rng.uniform(-init_range, init_range, (m, input_dim)),
            biases=rng.uniform(-init_range, init_range, m),
            recon=rng.uniform(-init_range, init_range, (m, input_dim)),
        )

    def copy(self) -> "SvqStage":
        return SvqStage(
            m=self.m,
            n=self.n,
            input_dim=self.input_dim,
            weights=self.weights.copy(),
            biases=self.biases.copy(),
            recon=self.recon.copy(),
        )


@dataclass
class StageObjective:
    """Objective value of one stage on a batch.

    ``d1`` is the batch mean of the code-weighted squared errors,
    ``d2`` the batch mean squared error of the mean reconstruction;
    both are unweighted. ``total = (2/n)*d1 + (2*(n-1)/n)*d2``.
    """

    d1: float
    d2: float
    total: float


@dataclass
class StageGradients:
    """Gradients of ``stage_objective(...).total`` for one stage."""

    weights: np.ndarray
    biases: np.ndarray
    recon: np.ndarray


@dataclass
class McEstimate:
    estimate: float
    stderr: float


def _sigmoid(a: np.ndarray) -> np.ndarray:
    # exp is only ever taken of non-positive arguments
    out = np.empty_like(a, dtype=float)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def _as_batch(stage: SvqStage, x: np.ndarray, name: str = "x") -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != stage.input_dim:
        raise ValueError(f"{name} has shape {x.shape}, expected (..., {stage.input_dim})")
    return x, single


def code_responses(stage: SvqStage, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unnormalised sigmoid responses Q, their sums Z and probabilities P.

    Accepts a single vector or a batch; always returns 2-D arrays.
    """
    X, _ = _as_batch(stage, x)
    A = X @ stage.weights.T + stage.biases
    Q = _sigmoid(A)
    Z = Q.sum(axis=1)
    P = Q / Z[:, None]
    return Q, Z, P


def posterior(stage: SvqStage, x: np.ndarray) -> np.ndarray:
    """Probability vector over the stage's code indices for input ``x``.

    Each entry is a sigmoid response divided by the sum of all responses,
    so the result is strictly positive and sums to 1. A batch of inputs
    yields a row per input.
    """
    _, single = _as_batch(stage, x)
    _, _, P = code_responses(stage, x)
    return P[0] if single else P


def reconstruct(stage: SvqStage, p: np.ndarray) -> np.ndarray:
    """Linear decode: probability-weighted sum of reconstruction vectors."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != stage.m:
        raise ValueError(f"posterior length {p.shape[-1]} != codebook size {stage.m}")
    return p @ stage.recon


def _objective_terms(stage: SvqStage, X: np.ndarray, P: np.ndarray) -> tuple[float, float]:
    diff = X[:, None, :] - stage.recon[None, :, :]
    e_sq = np.einsum("bmd,bmd->bm", diff, diff)
    d1 = float((P * e_sq).sum(axis=1).mean())
    resid = X - P @ stage.recon
    d2 = float((resid * resid).sum(axis=1).mean())
    return d1, d2


def stage_objective(stage: SvqStage, batch: np.ndarray) -> StageObjective:
    """Two-term distortion of the stage on a batch of input vectors."""
    X = np.asarray(batch, dtype=float)
    if X.size == 0:
        raise ValueError("stage_objective needs a non-empty batch")
    if X.ndim == 1:
        X = X[None, :]
    X, _ = _as_batch(stage, X, "batch")
    _, _, P = code_responses(stage, X)
    d1, d2 = _objective_terms(stage, X, P)
    n = stage.n
    total = (2.0 / n) * d1 + (2.0 * (n - 1) / n) * d2
    return StageObjective(d1=d1, d2=d2, total=total)


def stage_backward(
    stage: SvqStage,
    X: np.ndarray,
    Q: np.ndarray,
    Z: np.ndarray,
    P: np.ndarray,
    lam: float,
    G: np.ndarray | None,
    e_sq: np.ndarray | None = None,
    resid: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backward pass through one stage.

    ``G`` is the gradient of any downstream objective with respect to this
    stage's output probabilities (per sample, batch-mean convention), or
    None. ``e_sq`` and ``resid`` may carry the forward pass's squared code
    errors and mean-reconstruction residuals to avoid recomputation.
    Returns (grad_weights, grad_biases, grad_recon, grad_input) where
    grad_input propagates both the direct dependence of the stage objective
    on its input and the chained dependence through the probabilities.
    """
    B = X.shape[0]
    n = stage.n
    R = stage.recon

    if e_sq is None:
        diff = X[:, None, :] - R[None, :, :]
        e_sq = np.einsum("bmd,bmd->bm", diff, diff)
    if resid is None:
        resid = X - P @ R

    dP = (lam / B) * ((2.0 / n) * e_sq - (4.0 * (n - 1) / n) * (resid @ R.T))
    if G is not None:
        dP = dP + G
    Qp = Q * (1.0 - Q)
    S = (Qp / Z[:, None]) * (dP - (P * dP).sum(axis=1, keepdims=True))

    grad_b = S.sum(axis=0)
    grad_w = S.T @ X
    grad_r = (lam / B) * (
        (4.0 / n) * (P.sum(axis=0)[:, None] * R - P.T @ X)
        - (4.0 * (n - 1) / n) * (P.T @ resid)
    )
    grad_x = (lam * 4.0 / B) * resid + S @ stage.weights
    return grad_w, grad_b, grad_r, grad_x


def stage_gradients(stage: SvqStage, batch: np.ndarray) -> StageGradients:
    """Analytic gradients of ``stage_objective(...).total``.

    Exact derivatives through both objective terms and the normalised
    sigmoid probabilities; validated against central finite differences.
    """
    X = np.asarray(batch, dtype=float)
    if X.size == 0:
        raise ValueError("stage_gradients needs a non-empty batch")
    if X.ndim == 1:
        X = X[None, :]
    X, _ = _as_batch(stage, X, "batch")
    Q, Z, P = code_responses(stage, X)
    gw, gb, gr, _ = stage_backward(stage, X, Q, Z, P, lam=1.0, G=None)
    return StageGradients(weights=gw, biases=gb, recon=gr)


def _histograms(m: int, n: int):
    for combo in product(range(n + 1), repeat=m):
        if sum(combo) == n:
            yield combo


def exact_distortion(stage: SvqStage, x: np.ndarray) -> float:
    """Exact expected decode distortion by enumerating all code histograms.

    Sums 2*||x - sum_y (nu_y/n) recon[y]||^2 over every histogram ``nu`` of
    ``n`` code samples, weighted by its multinomial probability under the
    stage posterior. Only feasible for small (m, n); used as an oracle.
    """
    x = np.asarray(x, dtype=float)
    p = posterior(stage, x)
    n = stage.n
    total = 0.0
    for nu in _histograms(stage.m, n):
        coeff = factorial(n)
        prob = 1.0
        for nu_y, p_y in zip(nu, p):
            coeff //= factorial(nu_y)
            prob *= p_y**nu_y
        xhat = np.asarray(nu, dtype=float) @ stage.recon / n
        delta = x - xhat
        total += coeff * prob * 2.0 * float(delta @ delta)
    return total


def mc_distortion(stage: SvqStage, x: np.ndarray, trials: int, seed) -> McEstimate:
    """Monte Carlo estimate of the expected decode distortion at ``x``.

    Draws ``trials`` multinomial histograms of ``n`` code samples from the
    stage posterior and averages 2*||x - histogram decode||^2. Returns the
    estimate with its standard error.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    p = posterior(stage, x)
    counts = rng.multinomial(stage.n, p, size=trials)
    xhat = counts @ stage.recon / stage.n
    delta = x[None, :] - xhat
    vals = 2.0 * np.einsum("bd,bd->b", delta, delta)
    est = float(vals.mean())
    if trials == 1:
        return McEstimate(estimate=est, stderr=0.0)
    stderr = float(vals.std(ddof=1) / np.sqrt(trials))
    return McEstimate(estimate=est, stderr=stderr)
