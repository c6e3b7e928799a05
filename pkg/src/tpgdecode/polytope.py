"""Parity-polytope constraints, the sparse Q/R/D matrices and the penalty.

Every check ``i`` with support ``A_i`` contributes one linear constraint per
odd-size subset ``S`` of ``A_i``::

    1 + sum_{t in S} (x_t - 1) - sum_{t in A_i \\ S} x_t <= 0

Constraints are numbered check by check, and within a check by increasing
subset size, then lexicographically. Column ``l`` of ``Q`` (``R``) is the
indicator of ``S`` (``A_i \\ S``) for the constraint numbered ``l``.

The constraint left-hand sides ("slacks") for a row vector ``x`` are
``1 + (x - 1) Q - x R``, which equals ``(1 - |S|) + x D`` with ``D = Q - R``;
the penalty is half the squared norm of their positive parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .code import ParityCheckMatrix

MAX_ROW_WEIGHT = 30


def odd_subsets(A) -> list[tuple[int, ...]]:
    """All odd-cardinality subsets of ``A`` in canonical order.

    >>> odd_subsets([1, 2, 3])
    [(1,), (2,), (3,), (1, 2, 3)]
    """
    A = sorted(A)
    if not A:
        raise ValueError("index set must be nonempty")
    if len(A) > MAX_ROW_WEIGHT:
        raise ValueError(
            f"row weight {len(A)} exceeds {MAX_ROW_WEIGHT}; "
            f"2^{len(A) - 1} constraints is not enumerable")
    return [S for size in range(1, len(A) + 1, 2) for S in combinations(A, size)]


@dataclass(frozen=True)
class ConstraintIndex:
    """Numbering of the (check, odd subset) pairs onto ``0..L-1``."""

    offsets: tuple[int, ...]
    subsets: tuple[tuple[tuple[int, ...], ...], ...]  # subsets[i] in rank order

    @property
    def L(self) -> int:
        return self.offsets[-1] + len(self.subsets[-1])

    def index(self, i: int, S) -> int:
        """Constraint number of subset ``S`` of check ``i`` (both 0-based)."""
        rank = self._ranks[i].get(tuple(sorted(S)))
        if rank is None:
            raise KeyError(f"{tuple(S)} is not an odd subset of check {i}")
        return self.offsets[i] + rank

    def pairs(self):
        """Yield ``(l, i, S)`` in constraint order."""
        for i, family in enumerate(self.subsets):
            for rank, S in enumerate(family):
                yield self.offsets[i] + rank, i, S

    @property
    def _ranks(self) -> list[dict]:
        cached = self.__dict__.get("_rank_maps")
        if cached is None:
            cached = [{S: r for r, S in enumerate(fam)} for fam in self.subsets]
            object.__setattr__(self, "_rank_maps", cached)
        return cached


def build_constraint_index(H: ParityCheckMatrix) -> ConstraintIndex:
    subsets = tuple(tuple(odd_subsets(row)) for row in H.rows)
    offsets = [0]
    for family in subsets[:-1]:
        offsets.append(offsets[-1] + len(family))
    return ConstraintIndex(offsets=tuple(offsets), subsets=subsets)


@dataclass(frozen=True)
class PolytopeMatrices:
    """Sparse n x L matrices Q, R and D = Q - R, plus the slack offsets.

    ``offset[l] = 1 - |S|`` so that slacks are ``offset + x @ D``.
    """

    Q: sp.csc_array
    R: sp.csc_array
    D: sp.csc_array
    offset: np.ndarray
    index: ConstraintIndex

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def L(self) -> int:
        return self.D.shape[1]


def build_qrd(H: ParityCheckMatrix, idx: ConstraintIndex | None = None) -> PolytopeMatrices:
    if idx is None:
        idx = build_constraint_index(H)
    q_rows, q_cols, r_rows, r_cols = [], [], [], []
    offset = np.empty(idx.L)
    for l, i, S in idx.pairs():
        rest = [j for j in H.rows[i] if j not in S]
        q_rows.extend(S)
        q_cols.extend([l] * len(S))
        r_rows.extend(rest)
        r_cols.extend([l] * len(rest))
        offset[l] = 1.0 - len(S)
    shape = (H.n, idx.L)
    Q = sp.csc_array((np.ones(len(q_rows)), (q_rows, q_cols)), shape=shape)
    R = sp.csc_array((np.ones(len(r_rows)), (r_rows, r_cols)), shape=shape)
    D = sp.csc_array(Q - R)
    for M in (Q, R, D):
        M.sort_indices()
    return PolytopeMatrices(Q=Q, R=R, D=D, offset=offset, index=idx)


def _check_finite(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("search point has non-finite entries")
    return x


def slack(x, mats: PolytopeMatrices) -> np.ndarray:
    """Constraint left-hand sides ``1 + (x-1)Q - xR``; positive means violated.

    ``x`` may be a length-n vector or a (B, n) batch.
    """
    x = _check_finite(x)
    return mats.offset + x @ mats.D


def penalty(x, mats: PolytopeMatrices) -> float | np.ndarray:
    v = np.maximum(slack(x, mats), 0.0)
    return 0.5 * np.sum(v * v, axis=-1)


def penalty_gradient(x, mats: PolytopeMatrices, u: np.ndarray | None = None) -> np.ndarray:
    """``relu(slack) D^T``. Pass a precomputed slack ``u`` to skip recomputing it."""
    if u is None:
        u = slack(x, mats)
    return np.maximum(u, 0.0) @ mats.D.T


def objective(x, llr, beta: float, mats: PolytopeMatrices):
    if beta < 0:
        raise ValueError("beta must be non-negative")
    x = _check_finite(x)
    return np.sum(np.asarray(llr) * x, axis=-1) + beta * penalty(x, mats)


def objective_gradient(x, llr, beta: float, mats: PolytopeMatrices) -> np.ndarray:
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return np.asarray(llr, dtype=float) + beta * penalty_gradient(x, mats)


def dense_grid(M) -> str:
    """ASCII dump of a sparse matrix: rows are bits, columns constraints."""
    A = M.toarray().astype(int)
    width = 2 if A.min() < 0 else 1
    return "\n".join(" ".join(f"{v:>{width}d}" for v in row) for row in A)
