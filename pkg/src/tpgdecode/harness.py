"""Monte-Carlo BER and average-iteration sweeps for TPG and BP.

Word ``w`` of every operating point draws its codeword and noise from
``default_rng([seed, w])`` and its TPG initial points from
``default_rng([seed, w, 1])``. The noise direction is therefore shared by all
decoders, restart budgets and SNR points (only its scale changes), and
results do not depend on the batch size or the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bp import BpConfig, TannerGraph, bp_decode_batch
from .channel import llr_exact, llr_tpg, modulate, snr_to_sigma
from .code import ParityCheckMatrix, design_rate, gf2_generator, load_alist, random_codeword
from .decoder import DecodeConfig, TpgParams, decode_batch
from .polytope import build_qrd

CSV_FIELDS = ["decoder", "snr_db", "r_max", "bits_sent", "bit_errors", "ber",
              "words_sent", "word_errors", "avg_iter"]


class ConfigError(ValueError):
    pass


def builtin_codes() -> list[str]:
    return sorted(p.name[:-6] for p in resources.files("tpgdecode.data").iterdir()
                  if p.name.endswith(".alist"))


def resolve_code(spec) -> tuple[ParityCheckMatrix, str]:
    """Load a code from a path or a bundled code name. Returns (H, code_id)."""
    path = Path(spec)
    if not path.exists():
        bundled = resources.files("tpgdecode.data") / f"{spec}.alist"
        if not bundled.is_file():
            raise ConfigError(f"code file not found: {spec} (bundled: {', '.join(builtin_codes())})")
        path = Path(str(bundled))
    return load_alist(path), path.name.removesuffix(".alist")


def resolve_params(spec) -> TpgParams:
    path = Path(spec)
    if not path.exists():
        bundled = resources.files("tpgdecode.data") / f"{spec}.json"
        if not bundled.is_file():
            raise ConfigError(f"params file not found: {spec}")
        path = Path(str(bundled))
    return TpgParams.load(path)


@dataclass
class SweepConfig:
    code: str
    snr_points: list[float]
    params: str | None = None
    decoders: tuple[str, ...] = ("tpg",)
    r_max: tuple[int, ...] = (1,)
    t_max: int | None = None           # extend/truncate the trained schedule
    min_errors: int = 100
    max_words: int = 10_000_000
    seed: int = 0
    codeword_mode: str = "random"      # or "zero"
    bp_max_iter: int = 100
    bp_llr: str = "exact"              # "exact": 4y/sigma^2, "tpg": 2y/sigma^2
    batch_size: int = 64
    threads: int | None = None

    def __post_init__(self):
        if not self.snr_points:
            raise ConfigError("at least one SNR point is required")
        if self.min_errors < 1 or self.max_words < 1:
            raise ConfigError("min_errors and max_words must be at least 1")
        bad = set(self.decoders) - {"tpg", "bp"}
        if bad:
            raise ConfigError(f"unknown decoders: {sorted(bad)}")
        if "tpg" in self.decoders and self.params is None:
            raise ConfigError("TPG decoding needs a params file")
        if self.codeword_mode not in ("random", "zero"):
            raise ConfigError("codeword_mode must be 'random' or 'zero'")
        if self.bp_llr not in ("exact", "tpg"):
            raise ConfigError("bp_llr must be 'exact' or 'tpg'")
        if any(r < 1 for r in self.r_max):
            raise ConfigError("r_max values must be at least 1")


@dataclass
class BerRecord:
    decoder: str
    snr_db: float
    r_max: int | None
    bits_sent: int
    bit_errors: int
    ber: float
    words_sent: int
    word_errors: int
    avg_iter: float
    stop: str = field(default="", compare=False)

    @property
    def avg_inner_iterations(self) -> float:
        return self.avg_iter


def _worker_count(cfg: SweepConfig) -> int:
    if cfg.threads is not None:
        return max(1, cfg.threads)
    env = os.environ.get("TPG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"TPG_THREADS must be an integer, got {env!r}") from None
    return 1


class _Point:
    """Everything needed to simulate words at one SNR for one decoder."""

    def __init__(self, ctx, decoder: str, snr_db: float, r_max: int | None):
        self.ctx, self.decoder, self.snr_db, self.r_max = ctx, decoder, snr_db, r_max
        self.sigma = snr_to_sigma(snr_db, ctx.rho)

    def run(self, start: int, stop: int):
        ctx = self.ctx
        n = ctx.H.n
        words = range(start, stop)
        C = np.zeros((len(words), n), dtype=np.uint8)
        Z = np.empty((len(words), n))
        for row, w in enumerate(words):
            rng = np.random.default_rng([ctx.cfg.seed, w])
            if ctx.cfg.codeword_mode == "random":
                C[row] = random_codeword(ctx.G, rng)
            Z[row] = rng.standard_normal(n)
        Y = modulate(C) + (self.sigma / np.sqrt(2.0)) * Z
        if self.decoder == "tpg":
            rngs = [np.random.default_rng([ctx.cfg.seed, w, 1]) for w in words]
            res = decode_batch(Y, ctx.H, ctx.mats, ctx.params, DecodeConfig(r_max=self.r_max),
                               rngs)
        else:
            conv = llr_exact if ctx.cfg.bp_llr == "exact" else llr_tpg
            res = bp_decode_batch(conv(Y, self.sigma), ctx.graph,
                                  BpConfig(max_iter=ctx.cfg.bp_max_iter))
        est = np.stack([r.estimate for r in res])
        bit_err = np.count_nonzero(est != C, axis=1)
        iters = np.array([r.inner_iterations_total for r in res])
        return bit_err, iters


class _Context:
    def __init__(self, cfg: SweepConfig):
        self.cfg = cfg
        self.H, self.code_id = resolve_code(cfg.code)
        self.rho = design_rate(self.H)
        self.G = gf2_generator(self.H)
        self.params = None
        if "tpg" in cfg.decoders:
            params = resolve_params(cfg.params)
            if params.code_id and params.code_id != self.code_id:
                raise ConfigError(
                    f"params were trained for {params.code_id!r}, not {self.code_id!r}")
            self.params = params.extended(cfg.t_max) if cfg.t_max else params
            self.mats = build_qrd(self.H)
        if "bp" in cfg.decoders:
            self.graph = TannerGraph(self.H)


def _simulate(point: _Point, cfg: SweepConfig, pool) -> BerRecord:
    n = point.ctx.H.n
    bits = words = errors = word_errors = iters = 0
    stop = "max_words"
    next_word = 0
    B = cfg.batch_size
    workers = pool._max_workers if pool is not None else 1
    done = False
    while not done and next_word < cfg.max_words:
        spans = []
        for _ in range(workers):
            if next_word >= cfg.max_words:
                break
            end = min(next_word + B, cfg.max_words)
            spans.append((next_word, end))
            next_word = end
        if pool is None:
            results = [point.run(*s) for s in spans]
        else:
            results = list(pool.map(lambda s: point.run(*s), spans))
        for bit_err, it in results:
            # stop exactly at the word that reaches min_errors
            cum = errors + np.cumsum(bit_err)
            hit = np.flatnonzero(cum >= cfg.min_errors)
            take = hit[0] + 1 if hit.size else bit_err.size
            errors += int(bit_err[:take].sum())
            word_errors += int(np.count_nonzero(bit_err[:take]))
            iters += int(it[:take].sum())
            words += int(take)
            if hit.size:
                stop, done = "min_errors", True
                break
    bits = words * n
    return BerRecord(point.decoder, point.snr_db, point.r_max, bits, errors,
                     errors / bits, words, word_errors, iters / words, stop)


def run_ber_sweep(cfg: SweepConfig) -> list[BerRecord]:
    """One record per (decoder, r_max, SNR); BP records have r_max None."""
    ctx = _Context(cfg)
    workers = _worker_count(cfg)
    records = []
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for dec in cfg.decoders:
            for r_max in (cfg.r_max if dec == "tpg" else (None,)):
                for snr in cfg.snr_points:
                    records.append(_simulate(_Point(ctx, dec, snr, r_max), cfg, pool))
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def run_avg_iterations(cfg: SweepConfig) -> list[BerRecord]:
    """TPG-only sweep; ``avg_iter`` counts gradient steps per word, early exit on."""
    if "tpg" not in cfg.decoders:
        raise ConfigError("average-iteration runs need the tpg decoder")
    sub = SweepConfig(**{**asdict(cfg), "decoders": ("tpg",)})
    return run_ber_sweep(sub)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def records_to_jsonl(records) -> str:
    return "".join(json.dumps(asdict(r)) + "\n" for r in records)


def emit_results(records, path=None, fmt: str = "csv") -> str:
    """Serialize records as CSV or JSON lines; write to ``path`` if given."""
    if not records:
        raise ValueError("no records to emit")
    if fmt == "csv":
        text = records_to_csv(records)
    elif fmt == "jsonl":
        text = records_to_jsonl(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(text: str) -> list[BerRecord]:
    rows = csv.DictReader(io.StringIO(text))
    if rows.fieldnames != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {rows.fieldnames}")
    out = []
    for row in rows:
        out.append(BerRecord(
            decoder=row["decoder"], snr_db=float(row["snr_db"]),
            r_max=int(row["r_max"]) if row["r_max"] else None,
            bits_sent=int(row["bits_sent"]), bit_errors=int(row["bit_errors"]),
            ber=float(row["ber"]), words_sent=int(row["words_sent"]),
            word_errors=int(row["word_errors"]), avg_iter=float(row["avg_iter"])))
    return out
