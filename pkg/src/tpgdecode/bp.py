"""Flooding sum-product decoding on the Tanner graph (baseline).

One iteration is: variable-node update (channel LLR plus all incoming check
messages), hard decision and parity check, then the tanh-rule check-node
update. Check messages start at zero, so the first decision is the channel
hard decision. A bit whose total LLR is exactly zero is undecided and keeps
the word from counting as converged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .code import ParityCheckMatrix
from .decoder import DecodeResult

LLR_CLAMP = 30.0


@dataclass(frozen=True)
class BpConfig:
    max_iter: int = 100
    early_exit: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


class TannerGraph:
    """Edge lists of H in check-major order, with incidence matrices."""

    def __init__(self, H: ParityCheckMatrix):
        self.H = H
        self.edge_var = np.fromiter((j for r in H.rows for j in r), dtype=np.int64)
        lens = np.array([len(r) for r in H.rows])
        self.check_start = np.concatenate([[0], np.cumsum(lens)[:-1]])
        self.edge_check = np.repeat(np.arange(H.m), lens)
        E = self.edge_var.size
        # (E, n): sums edge messages into their variable
        self.var_inc = sp.csr_array((np.ones(E), (np.arange(E), self.edge_var)), shape=(E, H.n))

    @property
    def num_edges(self) -> int:
        return self.edge_var.size


def _check_update(v2c, graph: TannerGraph) -> np.ndarray:
    """Extrinsic tanh rule, computed in the log-magnitude domain."""
    t = np.tanh(np.clip(v2c, -LLR_CLAMP, LLR_CLAMP) / 2.0)
    mag = np.maximum(np.abs(t), 1e-300)
    logs = np.log(mag)
    neg = (t < 0).astype(np.int64)
    sum_logs = np.add.reduceat(logs, graph.check_start, axis=1)[:, graph.edge_check]
    parity = np.add.reduceat(neg, graph.check_start, axis=1)[:, graph.edge_check]
    ext_mag = np.exp(sum_logs - logs)
    ext_sign = np.where((parity - neg) % 2 == 1, -1.0, 1.0)
    # atanh(1 - 1e-16) ~ 18.7, already inside the clamp
    ext = ext_sign * np.minimum(ext_mag, 1.0 - 1e-16)
    return np.clip(2.0 * np.arctanh(ext), -LLR_CLAMP, LLR_CLAMP)


def bp_decode_batch(llr, graph: TannerGraph, cfg: BpConfig) -> list[DecodeResult]:
    llr = np.atleast_2d(np.asarray(llr, dtype=float))
    if not np.all(np.isfinite(llr)):
        raise ValueError("channel LLRs must be finite")
    B, n = llr.shape
    H = graph.H
    if n != H.n:
        raise ValueError(f"LLR length {n} does not match n={H.n}")
    c2v = np.zeros((B, graph.num_edges))
    est = np.zeros((B, n), dtype=np.uint8)
    converged = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=np.int64)
    act = np.arange(B)
    for it in range(cfg.max_iter):
        total = llr[act] + c2v[act] @ graph.var_inc
        chat = (total < 0).astype(np.uint8)
        est[act] = chat
        iters[act] += 1
        ok = ~H.syndrome(chat).any(axis=1) & ~(total == 0).any(axis=1)
        converged[act] = ok
        if cfg.early_exit:
            keep = ~ok
            act, total = act[keep], total[keep]
        if act.size == 0 or it == cfg.max_iter - 1:
            break
        v2c = np.clip(total[:, graph.edge_var] - c2v[act], -LLR_CLAMP, LLR_CLAMP)
        c2v[act] = _check_update(v2c, graph)
    return [DecodeResult(est[b].copy(), bool(converged[b]), int(iters[b]), 1) for b in range(B)]


def bp_decode(llr, H: ParityCheckMatrix | TannerGraph, cfg: BpConfig | None = None) -> DecodeResult:
    graph = H if isinstance(H, TannerGraph) else TannerGraph(H)
    return bp_decode_batch(np.asarray(llr, dtype=float)[None, :], graph, cfg or BpConfig())[0]
