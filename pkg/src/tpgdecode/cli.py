"""Command-line entry point ``tpg``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .decoder import DecodeConfig, TpgParams, decode_batch
from .harness import ConfigError, SweepConfig, emit_results, resolve_code, resolve_params
from .polytope import build_qrd, dense_grid

log = logging.getLogger("tpgdecode")


def parse_snr(text: str) -> list[float]:
    """``2.0:4.5:0.25`` (inclusive range) or ``2.0,3.0,3.5``."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("SNR range must be start:stop:step")
        start, stop, step = map(float, parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError("SNR range needs step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(v) for v in text.split(",") if v]


def parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def parse_count(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"{text} is not an integer")
    return int(value)


def _write_text(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_train(args) -> int:
    from .trainer import TrainConfig, incremental_train

    H, code_id = resolve_code(args.code)
    cfg = TrainConfig(t_max=args.tmax, J=args.J, K=args.K, train_snr_db=args.train_snr,
                      learning_rate=args.lr, init_alpha=args.init_alpha,
                      init_beta=args.init_beta, init_gamma=args.init_gamma, seed=args.seed)
    start = TpgParams.load(args.resume) if args.resume else None
    log_file = open(args.log, "w", newline="") if args.log else None
    writer = None
    if log_file is not None:
        writer = csv.writer(log_file, lineterminator="\n")
        header = ["generation", "update_index", "loss"]
        writer.writerow(header + ([] if args.no_wall_time else ["wall_time"]))

    def on_record(rec):
        if writer is not None:
            row = [rec.generation, rec.update_index, repr(rec.loss)]
            writer.writerow(row + ([] if args.no_wall_time else [f"{rec.wall_time:.3f}"]))

    def on_generation(t, params):
        # checkpoint so an interrupted run can --resume
        params.save(args.out)

    try:
        params, _ = incremental_train(cfg, H, build_qrd(H), start=start, on_record=on_record,
                                      on_generation=on_generation, code_id=code_id)
    finally:
        if log_file is not None:
            log_file.close()
    params.save(args.out)
    log.info("saved %s (alpha=%.4f)", args.out, params.alpha)
    return 0


def _read_words(path) -> np.ndarray:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    rows = [[float(v) for v in ln.replace(",", " ").split()] for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ConfigError("no received words in input")
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("received words have differing lengths")
    return np.array(rows)


def cmd_decode(args) -> int:
    H, code_id = resolve_code(args.code)
    params = resolve_params(args.params)
    if args.tmax:
        params = params.extended(args.tmax)
    Y = _read_words(args.input)
    if Y.shape[1] != H.n:
        raise ConfigError(f"received words have length {Y.shape[1]}, code has n={H.n}")
    rngs = [np.random.default_rng([args.seed, w, 1]) for w in range(len(Y))]
    res = decode_batch(Y, H, build_qrd(H), params, DecodeConfig(r_max=args.rmax), rngs)
    lines = ["word,converged,iterations,restarts,estimate\n"]
    for w, r in enumerate(res):
        bits = "".join(str(b) for b in r.estimate)
        lines.append(f"{w},{int(r.converged)},{r.inner_iterations_total},{r.restarts_used},{bits}\n")
    _write_text(args.out, "".join(lines))
    return 0


def _sweep_config(args, decoders) -> SweepConfig:
    return SweepConfig(code=args.code, params=args.params, snr_points=args.snr,
                       decoders=decoders, r_max=args.rmax, t_max=args.tmax,
                       min_errors=args.min_errors, max_words=args.max_words, seed=args.seed,
                       codeword_mode=args.codeword_mode, bp_max_iter=args.bp_max_iter,
                       bp_llr=args.bp_llr, batch_size=args.batch_size)


def _emit(records, args) -> None:
    text = emit_results(records, fmt=args.format)
    _write_text(args.out, text)


def cmd_sweep(args) -> int:
    decoders = tuple(d for d in args.decoders.split(",") if d)
    _emit(harness.run_ber_sweep(_sweep_config(args, decoders)), args)
    return 0


def cmd_avg_iter(args) -> int:
    _emit(harness.run_avg_iterations(_sweep_config(args, ("tpg",))), args)
    return 0


def cmd_dump_qrd(args) -> int:
    H, _ = resolve_code(args.code)
    mats = build_qrd(H)
    out = [f"# constraints L={mats.L}"]
    for l, i, S in mats.index.pairs():
        out.append(f"l={l + 1} i={i + 1} S={{{','.join(str(j + 1) for j in S)}}}")
    for name in args.which:
        out.append(f"# {name}")
        out.append(dense_grid(getattr(mats, name)))
    _write_text(args.out, "\n".join(out) + "\n")
    return 0


def cmd_check_grad(args) -> int:
    from .trainer import gradient_audit

    entries = gradient_audit(args.instances, np.random.default_rng(args.seed),
                             n_max=args.n_max, t_max=args.t, K_max=args.K, eps=args.eps)
    lines = ["instance,param,analytic,numeric,rel_error\n"]
    lines += [f"{e.instance},{e.name},{e.analytic!r},{e.numeric!r},{e.rel_error!r}\n" for e in entries]
    _write_text(args.out, "".join(lines))
    worst = max(e.rel_error for e in entries)
    print(f"audited {len(entries)} coordinates, max relative error {worst:.3e}", file=sys.stderr)
    return 0 if worst <= args.tol else 1


def _add_sweep_args(p, default_rmax="1"):
    p.add_argument("--code", required=True, help="alist path or bundled code name")
    p.add_argument("--params", help="TPG parameter JSON (path or bundled name)")
    p.add_argument("--snr", type=parse_snr, required=True, help="start:stop:step or a,b,c (dB)")
    p.add_argument("--rmax", type=parse_ints, default=parse_ints(default_rmax))
    p.add_argument("--tmax", type=int, help="override the TPG iteration cap")
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-words", type=parse_count, default=10_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--codeword-mode", choices=("random", "zero"), default="random")
    p.add_argument("--bp-max-iter", type=int, default=100)
    p.add_argument("--bp-llr", choices=("exact", "tpg"), default="exact")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tpg", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="incremental training of TPG parameters")
    p.add_argument("--code", required=True)
    p.add_argument("--tmax", type=int, default=25)
    p.add_argument("--J", type=int, default=500)
    p.add_argument("--K", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--train-snr", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-alpha", type=float, default=4.0)
    p.add_argument("--init-beta", type=float, default=1.0)
    p.add_argument("--init-gamma", type=float, default=1.0)
    p.add_argument("--resume", help="continue from a saved parameter file")
    p.add_argument("--out", required=True, help="parameter JSON to write")
    p.add_argument("--log", help="per-update training log (CSV)")
    p.add_argument("--no-wall-time", action="store_true",
                   help="omit the wall_time column so the log is reproducible")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="decode received words (one per line)")
    p.add_argument("--code", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--input", required=True, help="file of received words, or - for stdin")
    p.add_argument("--rmax", type=int, default=1)
    p.add_argument("--tmax", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="Monte-Carlo BER sweep")
    _add_sweep_args(p)
    p.add_argument("--decoders", default="tpg", help="comma list of tpg,bp")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("avg-iter", help="average TPG iteration counts")
    _add_sweep_args(p)
    p.set_defaults(func=cmd_avg_iter)

    p = sub.add_parser("dump-qrd", help="print the constraint numbering and Q/R/D")
    p.add_argument("--code", required=True)
    p.add_argument("--which", nargs="+", choices=("Q", "R", "D"), default=["Q", "R"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_dump_qrd)

    p = sub.add_parser("check-grad", help="finite-difference audit of the training gradient")
    p.add_argument("--instances", type=int, default=60)
    p.add_argument("--n-max", type=int, default=24)
    p.add_argument("--t", type=int, default=5)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_grad)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"tpg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
