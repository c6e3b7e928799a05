"""Incremental training of the TPG parameters by backpropagation and Adam.

The unrolled decoder ``g^t`` maps a received word to ``s_{t+1}`` after ``t``
iterations without early exit. Generation ``t`` minimizes the squared loss
``(1/K) sum_k |c_k - g^t(y_k)|^2`` over ``alpha, beta_1..t, gamma_1..t``
with fresh mini-batches for every update; generation ``t+1`` starts from the
result of generation ``t``.

Gradients are computed by a hand-written reverse pass over a tape of the
forward intermediates.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .channel import modulate, snr_to_sigma
from .code import GeneratorMatrix, ParityCheckMatrix, design_rate, gf2_generator, random_codeword
from .decoder import TpgParams
from .polytope import PolytopeMatrices

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    t_max: int = 25
    J: int = 500
    K: int = 50
    train_snr_db: float = 4.0
    learning_rate: float = 0.005
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    init_alpha: float = 4.0
    init_beta: float = 1.0
    init_gamma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.t_max < 1 or self.J < 1 or self.K < 1:
            raise ValueError("t_max, J and K must all be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")


@dataclass
class MiniBatch:
    c: np.ndarray   # (K, n) codewords
    y: np.ndarray   # (K, n) received words
    s1: np.ndarray  # (K, n) initial points in [0, 1]^n

    def __len__(self):
        return self.c.shape[0]


def make_minibatch(K: int, G: GeneratorMatrix, sigma: float, rng: np.random.Generator) -> MiniBatch:
    n = G.n
    c = np.stack([random_codeword(G, rng) for _ in range(K)]).astype(float)
    y = modulate(c) + (sigma / np.sqrt(2.0)) * rng.standard_normal((K, n))
    s1 = rng.random((K, n))
    return MiniBatch(c=c, y=y, s1=s1)


@dataclass
class Tape:
    """Per-iteration forward intermediates; ``s[t]`` is the input of iteration t."""

    s: list = field(default_factory=list)
    u: list = field(default_factory=list)      # slacks
    p: list = field(default_factory=list)      # relu(u) D^T
    r: list = field(default_factory=list)
    out: np.ndarray | None = None

    def active(self, t: int) -> np.ndarray:
        return self.u[t] > 0


def unrolled_forward(y, s1, alpha: float, beta, gamma, mats: PolytopeMatrices, t: int,
                     keep_tape: bool = True):
    """Run ``t`` TPG iterations from ``s1`` with no parity check.

    Works on a single word or a (K, n) batch. Returns ``(s_{t+1}, tape)``.
    """
    y = np.asarray(y, dtype=float)
    s = np.asarray(s1, dtype=float)
    D, DT = mats.D, mats.D.T
    tape = Tape()
    for i in range(t):
        u = mats.offset + s @ D
        p = np.maximum(u, 0.0) @ DT
        r = s - gamma[i] * (y + beta[i] * p)
        if keep_tape:
            tape.s.append(s)
            tape.u.append(u)
            tape.p.append(p)
            tape.r.append(r)
        s = expit(alpha * (r - 0.5))
        if not np.all(np.isfinite(s)):
            raise TrainingError(f"non-finite search point at iteration {i + 1}")
    tape.out = s
    return s, tape


def backward(tape: Tape, y, alpha: float, beta, gamma, mats: PolytopeMatrices, d_out):
    """Reverse pass. ``d_out`` is dLoss/ds_{t+1}; returns (d_alpha, d_beta, d_gamma)."""
    t = len(tape.r)
    y = np.asarray(y, dtype=float)
    D, DT = mats.D, mats.D.T
    d_alpha = 0.0
    d_beta = np.zeros(t)
    d_gamma = np.zeros(t)
    ds = d_out
    s_next = tape.out
    for i in reversed(range(t)):
        r, p, u = tape.r[i], tape.p[i], tape.u[i]
        dz = ds * s_next * (1.0 - s_next)
        d_alpha += float(np.sum(dz * (r - 0.5)))
        dr = alpha * dz
        d_gamma[i] = -float(np.sum(dr * (y + beta[i] * p)))
        dg = -gamma[i] * dr
        d_beta[i] = float(np.sum(dg * p))
        du = ((beta[i] * dg) @ D) * (u > 0)
        ds = dr + du @ DT
        if not (np.isfinite(d_alpha) and np.isfinite(d_beta[i]) and np.isfinite(d_gamma[i])):
            raise TrainingError(f"non-finite gradient at iteration {i + 1}")
        s_next = tape.s[i]
    return d_alpha, d_beta, d_gamma


def loss(batch: MiniBatch, alpha, beta, gamma, mats: PolytopeMatrices, t: int) -> float:
    out, _ = unrolled_forward(batch.y, batch.s1, alpha, beta, gamma, mats, t, keep_tape=False)
    return float(np.sum((batch.c - out) ** 2) / len(batch))


def loss_gradient(batch: MiniBatch, alpha, beta, gamma, mats: PolytopeMatrices, t: int):
    """Loss and its gradient w.r.t. ``alpha``, ``beta[:t]``, ``gamma[:t]``.

    Returns ``(loss, d_alpha, d_beta, d_gamma)``.
    """
    out, tape = unrolled_forward(batch.y, batch.s1, alpha, beta, gamma, mats, t)
    K = len(batch)
    diff = out - batch.c
    value = float(np.sum(diff * diff) / K)
    d_alpha, d_beta, d_gamma = backward(tape, batch.y, alpha, beta, gamma, mats, (2.0 / K) * diff)
    return value, d_alpha, d_beta, d_gamma


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size))


def adam_update(state: AdamState, theta, grad, lr: float,
                beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam step. Returns a new ``(state, theta)``."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if not (theta.shape == grad.shape == state.m.shape):
        raise ValueError(
            f"shape mismatch: theta {theta.shape}, grad {grad.shape}, state {state.m.shape}")
    step = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(m, v, step), theta


@dataclass
class TrainRecord:
    generation: int
    update_index: int
    loss: float
    wall_time: float


def _pack(alpha, beta, gamma, t):
    return np.concatenate([[alpha], beta[:t], gamma[:t]])


def incremental_train(cfg: TrainConfig, H: ParityCheckMatrix, mats: PolytopeMatrices,
                      start: TpgParams | None = None, on_record=None,
                      on_generation=None, code_id: str = "") -> tuple[TpgParams, list[TrainRecord]]:
    """Train generations 1..t_max (or continue after ``start.t_max``).

    Each generation gets a fresh Adam state. The newly exposed beta_t and
    gamma_t start from the trained beta_{t-1} and gamma_{t-1}.
    ``on_record(rec)`` sees every update, ``on_generation(t, params)`` every
    finished generation.
    """
    rng = np.random.default_rng(cfg.seed)
    G = gf2_generator(H)
    sigma = snr_to_sigma(cfg.train_snr_db, design_rate(H))
    alpha = cfg.init_alpha
    beta = np.full(cfg.t_max, cfg.init_beta)
    gamma = np.full(cfg.t_max, cfg.init_gamma)
    first = 1
    if start is not None:
        t0 = min(start.t_max, cfg.t_max)
        alpha = start.alpha
        beta[:t0] = start.beta[:t0]
        gamma[:t0] = start.gamma[:t0]
        first = t0 + 1

    records: list[TrainRecord] = []
    t_start = time.perf_counter()
    for t in range(first, cfg.t_max + 1):
        if t > 1:
            beta[t - 1] = beta[t - 2]
            gamma[t - 1] = gamma[t - 2]
        state = AdamState.zeros(1 + 2 * t)
        for j in range(cfg.J):
            batch = make_minibatch(cfg.K, G, sigma, rng)
            value, d_a, d_b, d_g = loss_gradient(batch, alpha, beta, gamma, mats, t)
            theta = _pack(alpha, beta, gamma, t)
            grad = np.concatenate([[d_a], d_b, d_g])
            state, theta = adam_update(state, theta, grad, cfg.learning_rate,
                                       cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            alpha = float(theta[0])
            beta[:t] = theta[1:1 + t]
            gamma[:t] = theta[1 + t:]
            if not alpha > 0:
                raise TrainingError(f"alpha became non-positive in generation {t}")
            rec = TrainRecord(t, j, value, time.perf_counter() - t_start)
            records.append(rec)
            if on_record is not None:
                on_record(rec)
        log.info("generation %d: loss %.6g alpha %.4f beta_t %.4f gamma_t %.4f",
                 t, records[-1].loss, alpha, beta[t - 1], gamma[t - 1])
        if on_generation is not None:
            on_generation(t, TpgParams(alpha, beta[:t], gamma[:t], code_id=code_id,
                                       train_snr_db=cfg.train_snr_db))
    params = TpgParams(alpha, beta, gamma, code_id=code_id, train_snr_db=cfg.train_snr_db)
    return params, records


@dataclass
class AuditEntry:
    instance: int
    name: str
    analytic: float
    numeric: float

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.analytic), abs(self.numeric), AUDIT_FLOOR)
        return abs(self.analytic - self.numeric) / scale


# denominators below this make the relative error an absolute one
AUDIT_FLOOR = 1e-3


def random_instance_code(n: int, rng: np.random.Generator, max_row_weight: int = 4) -> ParityCheckMatrix:
    """Random small parity-check matrix with m = n // 2 rows of weight 2..max_row_weight."""
    m = max(1, n // 2)
    hi = min(max_row_weight, n)
    rows = [rng.choice(n, size=rng.integers(2, hi + 1), replace=False) for _ in range(m)]
    return ParityCheckMatrix.from_rows(rows, n)


def _masks(batch, alpha, beta, gamma, mats, t):
    _, tape = unrolled_forward(batch.y, batch.s1, alpha, beta, gamma, mats, t)
    return [u > 0 for u in tape.u], min(float(np.min(np.abs(u))) for u in tape.u)


def gradient_audit(instances: int, rng: np.random.Generator, n_max: int = 24,
                   t_max: int = 5, K_max: int = 4, eps: float = 1e-6) -> list[AuditEntry]:
    """Compare ``loss_gradient`` with central differences on random instances.

    Instances where any slack lies within ``10 eps`` of zero, or where a
    perturbation flips a ReLU, are redrawn.
    """
    from .polytope import build_qrd

    entries: list[AuditEntry] = []
    done = 0
    while done < instances:
        n = int(rng.integers(6, n_max + 1))
        H = random_instance_code(n, rng)
        mats = build_qrd(H)
        G = gf2_generator(H)
        t = int(rng.integers(1, t_max + 1))
        K = int(rng.integers(1, K_max + 1))
        batch = make_minibatch(K, G, float(rng.uniform(0.5, 1.0)), rng)
        alpha = float(rng.uniform(2.0, 8.0))
        beta = rng.uniform(0.2, 3.0, t)
        gamma = rng.uniform(0.1, 1.5, t)
        masks, closest = _masks(batch, alpha, beta, gamma, mats, t)
        if closest <= 10 * eps:
            continue
        _, d_a, d_b, d_g = loss_gradient(batch, alpha, beta, gamma, mats, t)
        found = []
        kinked = False
        for name, analytic in [("alpha", d_a)] + [(f"beta_{i + 1}", d_b[i]) for i in range(t)] \
                + [(f"gamma_{i + 1}", d_g[i]) for i in range(t)]:
            vals = []
            for sgn in (1.0, -1.0):
                a, b, g = alpha, beta.copy(), gamma.copy()
                if name == "alpha":
                    a += sgn * eps
                else:
                    kind, idx = name.split("_")
                    (b if kind == "beta" else g)[int(idx) - 1] += sgn * eps
                pm, _ = _masks(batch, a, b, g, mats, t)
                if any((x != y).any() for x, y in zip(pm, masks)):
                    kinked = True
                vals.append(loss(batch, a, b, g, mats, t))
            found.append(AuditEntry(done, name, float(analytic), (vals[0] - vals[1]) / (2 * eps)))
        if kinked:
            continue
        entries.extend(found)
        done += 1
    return entries
