"""Trainable projected gradient (TPG) decoding.

Each inner iteration takes a gradient step on ``y x^T + beta_t P(x)`` and
then soft-projects with a shifted sigmoid::

    r_t     = s_t - gamma_t * (y + beta_t * relu(slack(s_t)) D^T)
    s_{t+1} = sigmoid(alpha * (r_t - 0.5))

The thresholded ``s_{t+1}`` is checked against H after every iteration; on
failure after ``t_max`` iterations the search restarts from a fresh uniform
point, up to ``r_max`` times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .code import ParityCheckMatrix
from .polytope import PolytopeMatrices, penalty


@dataclass
class TpgParams:
    alpha: float
    beta: np.ndarray
    gamma: np.ndarray
    code_id: str = ""
    train_snr_db: float | None = None

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.beta = np.array(self.beta, dtype=float).reshape(-1)
        self.gamma = np.array(self.gamma, dtype=float).reshape(-1)
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta.shape != self.gamma.shape or self.beta.size == 0:
            raise ValueError("beta and gamma must be nonempty and equally long")
        if not (np.all(np.isfinite(self.beta)) and np.all(np.isfinite(self.gamma))):
            raise ValueError("parameters must be finite")

    @property
    def t_max(self) -> int:
        return self.beta.size

    @classmethod
    def constant(cls, t_max: int, alpha=4.0, beta=1.0, gamma=1.0, **kw) -> "TpgParams":
        return cls(alpha, np.full(t_max, float(beta)), np.full(t_max, float(gamma)), **kw)

    def extended(self, t_max: int) -> "TpgParams":
        """Truncate, or pad by repeating the last beta/gamma, to ``t_max`` iterations."""
        if t_max < 1:
            raise ValueError("t_max must be at least 1")
        idx = np.minimum(np.arange(t_max), self.t_max - 1)
        return TpgParams(self.alpha, self.beta[idx], self.gamma[idx],
                         code_id=self.code_id, train_snr_db=self.train_snr_db)

    def to_dict(self) -> dict:
        # float repr is the shortest string that round-trips exactly
        return {
            "alpha": self.alpha,
            "beta": [float(b) for b in self.beta],
            "gamma": [float(g) for g in self.gamma],
            "t_max": self.t_max,
            "code_id": self.code_id,
            "train_snr_db": self.train_snr_db,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TpgParams":
        p = cls(d["alpha"], d["beta"], d["gamma"], code_id=d.get("code_id", ""),
                train_snr_db=d.get("train_snr_db"))
        if "t_max" in d and int(d["t_max"]) != p.t_max:
            raise ValueError(f"t_max={d['t_max']} but {p.t_max} beta/gamma values given")
        return p

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "TpgParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class DecodeConfig:
    r_max: int = 1
    trajectory: bool = False
    best_of_restarts: bool = False

    def __post_init__(self):
        if self.r_max < 1:
            raise ValueError("r_max must be at least 1")


@dataclass
class DecodeResult:
    estimate: np.ndarray
    converged: bool
    inner_iterations_total: int
    restarts_used: int
    trajectory: list[float] | None = field(default=None, repr=False)


def gradient_step(s, y, gamma: float, beta: float, mats: PolytopeMatrices, u=None) -> np.ndarray:
    """One gradient step; ``u`` is the slack of ``s`` if already computed."""
    if u is None:
        u = mats.offset + s @ mats.D
    return s - gamma * (y + beta * (np.maximum(u, 0.0) @ mats.D.T))


def projection_step(r, alpha: float) -> np.ndarray:
    return expit(alpha * (np.asarray(r, dtype=float) - 0.5))


def threshold(s) -> np.ndarray:
    return (np.asarray(s) >= 0.5).astype(np.uint8)


def _nse(s, c_star) -> float:
    d = s - c_star
    return float(np.dot(d, d) / d.size)


def decode_batch(Y, H: ParityCheckMatrix, mats: PolytopeMatrices, params: TpgParams,
                 cfg: DecodeConfig, rngs, refs=None) -> list[DecodeResult]:
    """Decode the rows of ``Y`` independently.

    ``rngs[b]`` supplies the random initial points of word ``b`` only, so each
    result depends on its own word and generator and not on the batch.
    ``refs`` (transmitted codewords) is needed only for trajectory capture.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    B, n = Y.shape
    if n != H.n or mats.n != n:
        raise ValueError(f"received words have length {n}, code has n={H.n}")
    if len(rngs) != B:
        raise ValueError("need one generator per received word")
    capture = cfg.trajectory and refs is not None
    if capture:
        refs = np.atleast_2d(np.asarray(refs, dtype=float))
    alpha, beta, gamma, T = params.alpha, params.beta, params.gamma, params.t_max
    D, DT = mats.D, mats.D.T

    est = np.zeros((B, n), dtype=np.uint8)
    converged = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=np.int64)
    restarts = np.zeros(B, dtype=np.int64)
    trajs = [[] for _ in range(B)] if capture else None
    if cfg.best_of_restarts:
        best_val = np.full(B, np.inf)
        best_est = np.zeros((B, n), dtype=np.uint8)

    pending = np.arange(B)
    for _ in range(cfg.r_max):
        if pending.size == 0:
            break
        S = np.stack([rngs[b].random(n) for b in pending])
        Yp = Y[pending]
        restarts[pending] += 1
        if capture:
            for row, b in enumerate(pending):
                trajs[b].append(_nse(S[row], refs[b]))
        act = np.arange(pending.size)
        for t in range(T):
            s, y = S[act], Yp[act]
            u = mats.offset + s @ D
            r = s - gamma[t] * (y + beta[t] * (np.maximum(u, 0.0) @ DT))
            s_next = expit(alpha * (r - 0.5))
            words = pending[act]
            iters[words] += 1
            finite = np.isfinite(s_next).all(axis=1)
            chat = (s_next >= 0.5).astype(np.uint8)
            ok = finite & ~H.syndrome(chat).any(axis=1)
            est[words[finite]] = chat[finite]
            S[act] = s_next
            if capture:
                for row, b in enumerate(words):
                    if finite[row]:
                        trajs[b].append(_nse(s_next[row], refs[b]))
            converged[words[ok]] = True
            # non-finite rows abandon this restart
            act = act[finite & ~ok]
            if act.size == 0:
                break
        failed = pending[~converged[pending]]
        if cfg.best_of_restarts and failed.size:
            vals = np.sum(Y[failed] * est[failed], axis=1) + beta[-1] * penalty(est[failed], mats)
            better = vals < best_val[failed]
            best_val[failed[better]] = vals[better]
            best_est[failed[better]] = est[failed[better]]
        pending = failed

    if cfg.best_of_restarts and pending.size:
        est[pending] = best_est[pending]
    return [
        DecodeResult(est[b].copy(), bool(converged[b]), int(iters[b]), int(restarts[b]),
                     trajs[b] if capture else None)
        for b in range(B)
    ]


def decode(y, H: ParityCheckMatrix, mats: PolytopeMatrices, params: TpgParams,
           cfg: DecodeConfig, rng: np.random.Generator, c_star=None) -> DecodeResult:
    refs = None if c_star is None else [c_star]
    return decode_batch(np.asarray(y, dtype=float)[None, :], H, mats, params, cfg,
                        [rng], refs)[0]


def decode_trajectory(y, c_star, H: ParityCheckMatrix, mats: PolytopeMatrices,
                      params: TpgParams, rng: np.random.Generator, s1=None) -> list[float]:
    """Normalized squared error ``|s_t - c*|^2 / n`` along one full run.

    No early exit. Entry 0 is the initial point; one entry per iteration follows.
    """
    c_star = np.asarray(c_star, dtype=float)
    s = rng.random(H.n) if s1 is None else np.asarray(s1, dtype=float)
    y = np.asarray(y, dtype=float)
    out = [_nse(s, c_star)]
    for t in range(params.t_max):
        r = gradient_step(s, y, params.gamma[t], params.beta[t], mats)
        s = projection_step(r, params.alpha)
        out.append(_nse(s, c_star))
    return out
