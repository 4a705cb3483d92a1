import numpy as np

from svqchain.stage import SvqStage


def random_stage(rng: np.random.Generator, m: int, n: int, d: int, scale: float = 0.8) -> SvqStage:
    return SvqStage(
        m=m,
        n=n,
        input_dim=d,
        weights=rng.uniform(-scale, scale, (m, d)),
        biases=rng.uniform(-scale, scale, m),
        recon=rng.uniform(-scale, scale, (m, d)),
    )


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> np.ndarray:
    """Per-coordinate relative error with a floor on the denominator.

    The floor keeps coordinates whose true gradient is essentially zero
    from dividing rounding noise by rounding noise; for such coordinates
    the check degenerates to an absolute tolerance of floor * rtol, far
    above the ~1e-11 truncation error of central differences.
    """
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def fd_gradient(f, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar ``f()`` w.r.t. ``arr`` in place."""
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        saved = arr[idx]
        arr[idx] = saved + h
        fp = f()
        arr[idx] = saved - h
        fm = f()
        arr[idx] = saved
        grad[idx] = (fp - fm) / (2.0 * h)
    return grad
