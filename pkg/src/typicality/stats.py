"""Two-sample testing and exact distances between finite laws."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import stats as sps

from .measures import FiniteLaw

# Group-count representation is used for the permutation null when the
# pooled sample has at most this many distinct values.
_MAX_GROUPS = 400


class TwoSample(NamedTuple):
    statistic: float
    pvalue: float
    coordinate_statistics: np.ndarray
    coordinate_pvalues: np.ndarray


def bonferroni(pvalues) -> float:
    p = np.asarray(pvalues, dtype=float).ravel()
    if p.size == 0:
        return 1.0
    return float(min(1.0, p.size * p.min()))


def _ks_from_counts(ca: np.ndarray, counts: np.ndarray, n_a: int, n_b: int) -> np.ndarray:
    """KS statistics for rows of per-value counts of the first sample."""
    fa = np.cumsum(ca, axis=-1) / n_a
    fb = np.cumsum(counts - ca, axis=-1) / n_b
    return np.max(np.abs(fa - fb), axis=-1)


def ks_permutation(a, b, rng, threshold: float = 0.01, n_perm: int = 199, max_perm: int = 20000) -> tuple[float, float]:
    """Two-sample KS statistic with a permutation-calibrated p-value.

    Without ties the permutation law of the statistic is the exact
    distribution-free KS law, so for samples with many distinct values
    ``scipy.stats.ks_2samp`` supplies the p-value (a few ties only make it
    conservative).  For discrete samples (at most 400 distinct values) the
    permutation null is simulated from the value counts, and the number of
    permutations grows while the p-value is within a factor five of
    ``threshold``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n_a, n_b = len(a), len(b)
    vals, inv, counts = np.unique(np.concatenate([a, b]), return_inverse=True, return_counts=True)
    if len(vals) == 1:
        return 0.0, 1.0
    ca = np.bincount(inv[:n_a], minlength=len(vals))
    stat = float(_ks_from_counts(ca, counts, n_a, n_b))
    if len(vals) > _MAX_GROUPS:
        method = "exact" if n_a * n_b <= 10**6 and len(vals) == n_a + n_b else "asymp"
        return stat, float(sps.ks_2samp(a, b, method=method).pvalue)

    eps = 1e-12
    exceed, done, target = 0, 0, n_perm
    while True:
        draws = rng.multivariate_hypergeometric(counts, n_a, size=target - done, method="marginals")
        exceed += int(np.sum(_ks_from_counts(draws, counts, n_a, n_b) >= stat - eps))
        done = target
        p = (1 + exceed) / (1 + done)
        if p > 5 * threshold or done >= max_perm:
            return stat, float(p)
        target = min(max_perm, max(done * 4, int(50 / threshold)))


def two_sample_test(a, b, alpha: float = 0.01, rng=None, m_cells: int = 1) -> TwoSample:
    """Per-coordinate KS tests combined by Bonferroni.

    ``a`` and ``b`` are ``(n,)`` or ``(n, k)`` arrays.  ``m_cells`` is the
    number of other comparisons sharing ``alpha``; it only sets how far the
    permutation null is refined.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a.reshape(len(a), -1)
    b = b.reshape(len(b), -1)
    if a.shape[1] != b.shape[1]:
        raise ValueError("samples have different dimensions")
    if min(len(a), len(b)) < 2:
        raise ValueError("two-sample test needs at least two observations per side")
    if rng is None:
        rng = np.random.default_rng(0)
    k = a.shape[1]
    threshold = alpha / (k * m_cells)
    st, pv = np.empty(k), np.empty(k)
    for j in range(k):
        st[j], pv[j] = ks_permutation(a[:, j], b[:, j], rng, threshold)
    return TwoSample(float(st.max()), bonferroni(pv), st, pv)


def tv_distance_exact(p, q) -> float:
    """Total variation ``1/2 sum |p - q|`` between finite laws or dicts."""
    p = p.probabilities() if isinstance(p, FiniteLaw) else dict(p)
    q = q.probabilities() if isinstance(q, FiniteLaw) else dict(q)
    keys = set(p) | set(q)
    return 0.5 * float(sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys))
