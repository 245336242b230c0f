import numpy as np


def _aligned(p: np.ndarray, q: np.ndarray):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    size = max(p.size, q.size)
    return np.pad(p, (0, size - p.size)), np.pad(q, (0, size - q.size))


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """½ Σ_n |p_n − q_n|; shorter vectors are zero-padded."""
    a, b = _aligned(p, q)
    return float(min(1.0, 0.5 * np.abs(a - b).sum()))


def kolmogorov_smirnov(p: np.ndarray, q: np.ndarray) -> float:
    """Largest absolute difference between the two cumulative distributions."""
    a, b = _aligned(p, q)
    return float(np.max(np.abs(np.cumsum(a) - np.cumsum(b))))
