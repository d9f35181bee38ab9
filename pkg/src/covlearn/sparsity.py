"""Hard-threshold selection of the K largest elements or K largest peaks.

Both modes are deterministic: value ties are broken toward the lowest
index, which keeps seeded Monte-Carlo runs exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SupportSet:
    """Ordered set of distinct atom indices.

    Order is meaningful (greedy solvers record selection order); equality
    of dataclass instances is order-sensitive, use :meth:`same_atoms` for
    set comparison.
    """

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise ValueError("atom indices must be nonnegative")
        if len(set(idx)) != len(idx):
            raise ValueError("atom indices must be distinct")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return i in self.indices

    @property
    def sorted_indices(self) -> tuple:
        return tuple(sorted(self.indices))

    def as_set(self) -> frozenset:
        return frozenset(self.indices)

    def same_atoms(self, other) -> bool:
        other_idx = other.indices if isinstance(other, SupportSet) else other
        return frozenset(self.indices) == frozenset(other_idx)


def peak_mask(values: np.ndarray) -> np.ndarray:
    """Boolean mask of local maxima: v[i] > v[i-1] and v[i] >= v[i+1].

    Virtual boundary values are -inf, so either endpoint can be a peak.
    The strict-left/weak-right rule picks the first index of any plateau.
    """
    v = np.asarray(values, dtype=np.float64)
    prev = np.concatenate(([-np.inf], v[:-1]))
    nxt = np.concatenate((v[1:], [-np.inf]))
    return (v > prev) & (v >= nxt)


def _largest_first(values: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Candidate indices ordered by descending value, lowest index on ties."""
    order = np.argsort(-values[candidates], kind="stable")
    return candidates[order]


def hard_threshold(gamma, k: int, peak: bool = False):
    """Keep the K largest elements (or K largest peaks) of a power vector.

    Parameters
    ----------
    gamma : array_like
        Nonnegative power vector.
    k : int
        Number of entries to retain.
    peak : bool
        False selects the K largest elements; True selects the K largest
        local peaks. If the vector has fewer than K peaks, the remaining
        slots are filled with the largest not-yet-selected entries so the
        support always has exactly K indices.

    Returns
    -------
    (thresholded, support)
        A copy of gamma zeroed off-support, and the :class:`SupportSet`
        (indices in ascending order).
    """
    g = np.asarray(gamma, dtype=np.float64)
    if g.ndim != 1:
        raise ValueError("power vector must be 1-D")
    if not np.all(np.isfinite(g)):
        raise ValueError("power vector entries must be finite")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > g.size:
        raise ValueError(f"k={k} exceeds the vector length {g.size}")

    all_idx = np.arange(g.size)
    if peak:
        peaks = _largest_first(g, all_idx[peak_mask(g)])
        chosen = list(peaks[:k])
        if len(chosen) < k:
            rest = np.setdiff1d(all_idx, peaks, assume_unique=True)
            chosen.extend(_largest_first(g, rest)[: k - len(chosen)])
        support_idx = np.sort(np.asarray(chosen, dtype=int))
    else:
        support_idx = np.sort(_largest_first(g, all_idx)[:k])

    out = np.zeros_like(g)
    out[support_idx] = g[support_idx]
    return out, SupportSet(tuple(support_idx))
