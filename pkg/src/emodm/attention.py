"""Histogram-based mutual information between decision variables and objectives.

Densities are estimated on equal-width histograms spanning each sample's
observed range, with ceil(sqrt(N)) bins by default. Mutual information uses
natural logarithms (nats). The per-variable attention weights are the softmax
of the average normalized mutual information against all objectives; the
scalar signature is what gets compared when matching a new problem against
trained ones. The signature is the maximum NMI over all variable/objective
pairs: at these sample sizes the histogram estimator carries a large uniform
bias, so the mean over pairs collapses to the bias level for every problem
and separates nothing, while the strongest single dependence still reflects
problem structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problems import Population


def default_bins(n_samples: int) -> int:
    """ceil(sqrt(N)) equal-width bins (10 for N=100)."""
    return max(2, math.ceil(math.sqrt(n_samples)))


@dataclass
class AttentionWeights:
    """Per-variable simplex weights plus the scalar signature of one snapshot."""

    step: int
    w: np.ndarray
    avg_nmi: np.ndarray
    signature: float


def _bin_indices(samples: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width bin index per sample; a zero-width range collapses to one bin."""
    lo = samples.min()
    width = samples.max() - lo
    if width == 0.0:
        return np.zeros(samples.shape[0], dtype=np.intp)
    idx = np.floor((samples - lo) / width * bins).astype(np.intp)
    return np.minimum(idx, bins - 1)


def _joint_counts(xi: np.ndarray, yi: np.ndarray, bins: int) -> np.ndarray:
    flat = np.bincount(xi * bins + yi, minlength=bins * bins)
    return flat.reshape(bins, bins)


def _mi_from_counts(counts: np.ndarray) -> float:
    # Marginals come from integer counts and the final sum is exactly rounded
    # (fsum), so transposing the histogram (swapping the arguments) changes
    # nothing: the result is symmetric to the last bit.
    n = counts.sum()
    p_xy = counts / n
    p_x = counts.sum(axis=1, keepdims=True) / n
    p_y = counts.sum(axis=0, keepdims=True) / n
    mask = p_xy > 0.0
    ratio = np.ones_like(p_xy)
    np.divide(p_xy, p_x * p_y, out=ratio, where=mask)
    return math.fsum((p_xy[mask] * np.log(ratio[mask])).tolist())


def _entropy_from_counts(counts_1d: np.ndarray) -> float:
    n = counts_1d.sum()
    p = counts_1d[counts_1d > 0] / n
    return float(-np.sum(p * np.log(p)))


def mutual_information(x_samples: np.ndarray, y_samples: np.ndarray, bins: int) -> float:
    """Histogram mutual information in nats; symmetric and >= 0 up to float error."""
    x_samples = np.asarray(x_samples, dtype=float)
    y_samples = np.asarray(y_samples, dtype=float)
    _check_samples(x_samples, y_samples, bins)
    xi = _bin_indices(x_samples, bins)
    yi = _bin_indices(y_samples, bins)
    return _mi_from_counts(_joint_counts(xi, yi, bins))


def normalized_mi(x_samples: np.ndarray, y_samples: np.ndarray, bins: int) -> float:
    """MI normalized by the geometric mean of the marginal entropies, in [0, 1].

    Zero by convention when either marginal entropy is zero (a constant sample
    carries no information).
    """
    x_samples = np.asarray(x_samples, dtype=float)
    y_samples = np.asarray(y_samples, dtype=float)
    _check_samples(x_samples, y_samples, bins)
    xi = _bin_indices(x_samples, bins)
    yi = _bin_indices(y_samples, bins)
    counts = _joint_counts(xi, yi, bins)
    hx = _entropy_from_counts(counts.sum(axis=1))
    hy = _entropy_from_counts(counts.sum(axis=0))
    if hx <= 0.0 or hy <= 0.0:
        return 0.0
    return _mi_from_counts(counts) / math.sqrt(hx * hy)


def _check_samples(x: np.ndarray, y: np.ndarray, bins: int) -> None:
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D sample vectors of equal length")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("samples must be finite")


def nmi_matrix(decisions: np.ndarray, objectives: np.ndarray, bins: int) -> np.ndarray:
    """d x m matrix of normalized MI between each variable and each objective."""
    n, d = decisions.shape
    m = objectives.shape[1]
    x_idx = np.column_stack([_bin_indices(decisions[:, i], bins) for i in range(d)])
    y_idx = np.column_stack([_bin_indices(objectives[:, j], bins) for j in range(m)])
    hx = np.array([_entropy_from_counts(np.bincount(x_idx[:, i], minlength=bins)) for i in range(d)])
    hy = np.array([_entropy_from_counts(np.bincount(y_idx[:, j], minlength=bins)) for j in range(m)])
    out = np.zeros((d, m))
    for i in range(d):
        if hx[i] <= 0.0:
            continue
        for j in range(m):
            if hy[j] <= 0.0:
                continue
            mi = _mi_from_counts(_joint_counts(x_idx[:, i], y_idx[:, j], bins))
            out[i, j] = mi / math.sqrt(hx[i] * hy[j])
    return out


def nmi_signature(decisions: np.ndarray, objectives: np.ndarray, bins: int) -> float:
    """Scalar dependency signature: the largest NMI over all variable/objective pairs."""
    return float(nmi_matrix(decisions, objectives, bins).max())


def _softmax(v: np.ndarray) -> np.ndarray:
    e = np.exp(v - v.max())
    return e / e.sum()


def compute_attention(pop: Population, bins: int | None = None) -> AttentionWeights:
    """Attention weights and signature for one evaluated population snapshot."""
    if pop.objectives is None:
        raise ValueError("compute_attention needs objectives")
    if pop.n < 2:
        raise ValueError("need at least 2 rows")
    if bins is None:
        bins = default_bins(pop.n)
    matrix = nmi_matrix(pop.decisions, pop.objectives, bins)
    avg = matrix.mean(axis=1)
    return AttentionWeights(
        step=pop.step,
        w=_softmax(avg),
        avg_nmi=avg,
        signature=float(matrix.max()),
    )


def apply_attention(pop: Population, w: np.ndarray) -> Population:
    """Scale each decision column by its weight; objectives are dropped
    because they no longer correspond to the rescaled coordinates."""
    w = np.asarray(w, dtype=float)
    if w.shape != (pop.d,):
        raise ValueError(f"weight vector must have length {pop.d}, got {w.shape}")
    return Population(
        step=pop.step,
        decisions=pop.decisions * w,
        objectives=None,
        space_tag=pop.space_tag,
    )
