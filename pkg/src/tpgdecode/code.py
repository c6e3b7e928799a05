"""Binary linear codes defined by sparse parity-check matrices.

Parity-check matrices are stored as support lists (0-based internally), with
alist text I/O (1-based externally), GF(2) null-space bases for codeword
sampling and syndrome checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class AlistError(ValueError):
    """Malformed alist text. ``lineno`` is 1-based, or None for EOF errors."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse binary m x n parity-check matrix (checks x bits).

    ``rows[i]`` is the sorted support of check ``i`` and ``cols[j]`` the
    sorted list of checks touching bit ``j``; both 0-based.
    """

    m: int
    n: int
    rows: tuple[tuple[int, ...], ...]
    cols: tuple[tuple[int, ...], ...] = field(repr=False)

    def __post_init__(self):
        if len(self.rows) != self.m or len(self.cols) != self.n:
            raise ValueError("support lists do not match the declared shape")
        for i, row in enumerate(self.rows):
            if not row:
                raise ValueError(f"check {i} has empty support")
            if any(j < 0 or j >= self.n for j in row):
                raise ValueError(f"check {i} has an out-of-range bit index")
        if _transpose(self.rows, self.n) != self.cols:
            raise ValueError("row and column supports are inconsistent")

    @classmethod
    def from_rows(cls, rows, n: int) -> "ParityCheckMatrix":
        rows = tuple(tuple(sorted(set(int(j) for j in r))) for r in rows)
        return cls(m=len(rows), n=n, rows=rows, cols=_transpose(rows, n))

    @classmethod
    def from_dense(cls, H) -> "ParityCheckMatrix":
        H = np.asarray(H) % 2
        if H.ndim != 2:
            raise ValueError("H must be two-dimensional")
        return cls.from_rows([np.flatnonzero(r) for r in H], H.shape[1])

    @property
    def max_row_weight(self) -> int:
        return max(len(r) for r in self.rows)

    @property
    def max_col_weight(self) -> int:
        return max((len(c) for c in self.cols), default=0)

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, row in enumerate(self.rows):
            H[i, list(row)] = 1
        return H

    def to_sparse(self) -> sp.csr_array:
        indptr = np.cumsum([0] + [len(r) for r in self.rows])
        indices = np.fromiter((j for r in self.rows for j in r), dtype=np.int64)
        data = np.ones(len(indices), dtype=np.int64)
        return sp.csr_array((data, indices, indptr), shape=(self.m, self.n))

    def syndrome(self, c) -> np.ndarray:
        """Return ``H c^T mod 2``. Accepts a length-n vector or a (B, n) batch."""
        c = np.asarray(c)
        if c.shape[-1] != self.n:
            raise ValueError(f"expected length {self.n}, got {c.shape[-1]}")
        return (self._sparse_cache() @ c.astype(np.int64).T).T % 2

    def _sparse_cache(self) -> sp.csr_array:
        cached = self.__dict__.get("_csr")
        if cached is None:
            cached = self.to_sparse()
            object.__setattr__(self, "_csr", cached)
        return cached


def _transpose(rows, n: int) -> tuple[tuple[int, ...], ...]:
    cols: list[list[int]] = [[] for _ in range(n)]
    for i, row in enumerate(rows):
        for j in row:
            cols[j].append(i)
    return tuple(tuple(c) for c in cols)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Basis of the GF(2) null space of H, one codeword per row."""

    k: int
    basis: np.ndarray  # (k, n) uint8

    @property
    def n(self) -> int:
        return self.basis.shape[1]


def parse_alist(text: str) -> ParityCheckMatrix:
    """Parse MacKay alist text into a :class:`ParityCheckMatrix`.

    Zero entries in the support lists are padding and are skipped. Both the
    column and the row support sections are read and must agree.
    """
    lines = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), 1)]
    lines = [(no, toks) for no, toks in lines if toks]
    pos = 0

    def next_ints(count: int | None, what: str) -> tuple[int, list[int]]:
        nonlocal pos
        if pos >= len(lines):
            raise AlistError(f"unexpected end of input while reading {what}")
        no, toks = lines[pos]
        pos += 1
        try:
            vals = [int(t) for t in toks]
        except ValueError:
            raise AlistError(f"non-integer token in {what}", no) from None
        if count is not None and len(vals) != count:
            raise AlistError(f"{what}: expected {count} integers, got {len(vals)}", no)
        return no, vals

    no, (n, m) = next_ints(2, "header 'n m'")
    if n < 1 or m < 1:
        raise AlistError("matrix dimensions must be positive", no)
    no, (max_cw, max_rw) = next_ints(2, "max weights")
    no_cw, col_w = next_ints(n, "column weights")
    no_rw, row_w = next_ints(m, "row weights")
    if max(col_w) > max_cw:
        raise AlistError("column weight exceeds declared maximum", no_cw)
    if max(row_w) > max_rw:
        raise AlistError("row weight exceeds declared maximum", no_rw)

    cols = []
    for j in range(n):
        no, vals = next_ints(None, f"support of column {j + 1}")
        support = [v for v in vals if v != 0]
        if len(support) != col_w[j]:
            raise AlistError(
                f"column {j + 1} lists {len(support)} entries but weight is {col_w[j]}", no)
        if any(v < 0 or v > m for v in support):
            raise AlistError(f"column {j + 1} has check index outside 1..{m}", no)
        cols.append(support)

    rows = []
    for i in range(m):
        no, vals = next_ints(None, f"support of row {i + 1}")
        support = [v for v in vals if v != 0]
        if len(support) != row_w[i]:
            raise AlistError(
                f"row {i + 1} lists {len(support)} entries but weight is {row_w[i]}", no)
        if any(v < 0 or v > n for v in support):
            raise AlistError(f"row {i + 1} has bit index outside 1..{n}", no)
        if not support:
            raise AlistError(f"row {i + 1} is empty", no)
        rows.append([v - 1 for v in support])

    H = ParityCheckMatrix.from_rows(rows, n)
    from_cols = tuple(tuple(sorted(v - 1 for v in c)) for c in cols)
    if from_cols != H.cols:
        raise AlistError("column supports disagree with row supports")
    return H


def format_alist(H: ParityCheckMatrix) -> str:
    """Render H as alist text (no zero padding)."""
    out = [
        f"{H.n} {H.m}",
        f"{H.max_col_weight} {H.max_row_weight}",
        " ".join(str(len(c)) for c in H.cols),
        " ".join(str(len(r)) for r in H.rows),
    ]
    out += [" ".join(str(i + 1) for i in c) or "0" for c in H.cols]
    out += [" ".join(str(j + 1) for j in r) for r in H.rows]
    return "\n".join(out) + "\n"


def load_alist(path) -> ParityCheckMatrix:
    return parse_alist(Path(path).read_text())


def gf2_nullspace(A) -> np.ndarray:
    """Rows spanning the GF(2) null space of a dense binary matrix.

    Gauss-Jordan elimination; one basis vector per free column.
    """
    A = (np.asarray(A) % 2).astype(np.uint8)
    m, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        hits = np.flatnonzero(A[r:, c])
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        ones = np.flatnonzero(A[:, c])
        ones = ones[ones != r]
        A[ones] ^= A[r]
        pivots.append(c)
        r += 1
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for q, pc in enumerate(pivots):
            basis[t, pc] = A[q, f]
    return basis


def gf2_generator(H: ParityCheckMatrix) -> GeneratorMatrix:
    basis = gf2_nullspace(H.to_dense())
    return GeneratorMatrix(k=basis.shape[0], basis=basis)


def random_codeword(G: GeneratorMatrix, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random codeword: a random GF(2) combination of the basis."""
    if G.k == 0:
        return np.zeros(G.n, dtype=np.uint8)
    coeffs = rng.integers(0, 2, size=G.k, dtype=np.uint8)
    return ((coeffs.astype(np.int64) @ G.basis) % 2).astype(np.uint8)


def syndrome_check(H: ParityCheckMatrix, c) -> bool:
    """True iff every check of H has even parity on ``c``."""
    c = np.asarray(c)
    if c.ndim != 1 or c.shape[0] != H.n:
        raise ValueError(f"expected a length-{H.n} vector, got shape {c.shape}")
    return not H.syndrome(c).any()


def design_rate(H: ParityCheckMatrix) -> float:
    if H.n <= H.m:
        raise ValueError("design rate requires n > m")
    return 1.0 - H.m / H.n
