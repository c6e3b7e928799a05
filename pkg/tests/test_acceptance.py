"""Acceptance gate: one PASS/FAIL line per criterion.

The lines are printed in the terminal summary under "acceptance criteria".
Each test also asserts, so a failing criterion turns the suite red.
"""

import time

import numpy as np
import pytest

from conftest import EXAMPLE_ELL, EXAMPLE_Q, EXAMPLE_R, SMALL_H, brute_force_codewords
from oracles import penalty_gradient_double_sum
from tpgdecode.bp import BpConfig, TannerGraph, bp_decode_batch
from tpgdecode.channel import llr_exact, modulate, snr_to_sigma
from tpgdecode.cli import main
from tpgdecode.code import design_rate, gf2_generator, random_codeword
from tpgdecode.decoder import DecodeConfig, decode, decode_trajectory
from tpgdecode.harness import SweepConfig, resolve_code, run_avg_iterations, run_ber_sweep
from tpgdecode.polytope import build_qrd, penalty_gradient
from tpgdecode.trainer import TrainConfig, gradient_audit, incremental_train, random_instance_code

BUNDLED = "tpg_regular_204_3_6"
CODE204 = "regular_204_3_6"

RESULTS: list[str] = []


def report(label: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    assert ok, detail


def trend_checks(params):
    g, b = params.gamma, params.beta
    checks = {
        "gamma falls": g[-5:].mean() < g[:3].mean(),
        "beta_1 < beta_9": b[0] < b[8],
        "alpha in [4,16]": 4.0 <= params.alpha <= 16.0,
    }
    detail = (f"alpha={params.alpha:.3f}, beta_1={b[0]:.3f}, beta_9={b[8]:.3f}, "
              f"mean gamma first3={g[:3].mean():.3f} last5={g[-5:].mean():.3f}")
    failed = [k for k, v in checks.items() if not v]
    return not failed, detail + (f"; failed: {', '.join(failed)}" if failed else "")


def test_c01_qr_fixture(small_code):
    t0 = time.perf_counter()
    mats = build_qrd(small_code)
    listed = [(i + 1, tuple(j + 1 for j in S)) for _, i, S in mats.index.pairs()]
    ok = (np.array_equal(mats.Q.toarray(), EXAMPLE_Q)
          and np.array_equal(mats.R.toarray(), EXAMPLE_R)
          and listed == EXAMPLE_ELL and mats.L == 10)
    dt = time.perf_counter() - t0
    report("C1 Q/R fixture", ok and dt < 1.0, f"6x10 Q, R and l(i,S) table exact, {dt * 1e3:.1f} ms")


def test_c02_gradient_fixtures(small_mats):
    cases = [
        ([0, 1, 1, 1, 1, 0], [0, 0, 0, 0, 0, 0]),
        ([0.5] * 6, [0, 0, 0, 0, 0, 0]),
        ([1, 1, 1, 1, 1, 0], [1, 1, 1, 0, 0, 0]),
    ]
    got = [penalty_gradient(np.array(x, dtype=float), small_mats) for x, _ in cases]
    ok = all(np.array_equal(g, np.array(want, dtype=float)) for g, (_, want) in zip(got, cases))
    report("C2 gradient fixtures", ok, "; ".join(str(g.astype(int).tolist()) for g in got))


def test_c03_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 13))
        H = random_instance_code(n, rng, max_row_weight=4)
        x = rng.uniform(-0.5, 1.5, n)
        fast = penalty_gradient(x, build_qrd(H))
        ref = penalty_gradient_double_sum(x, H.rows)
        scale = np.linalg.norm(ref)
        err = np.linalg.norm(fast - ref) / scale if scale > 0 else np.linalg.norm(fast)
        worst = max(worst, err)
    dt = time.perf_counter() - t0
    report("C3 oracle equivalence", worst <= 1e-12 and dt < 10,
           f"200 instances, max rel error {worst:.2e}, {dt:.1f} s")


def test_c04_backprop_audit():
    t0 = time.perf_counter()
    entries = gradient_audit(80, np.random.default_rng(7), n_max=24, t_max=5, K_max=4)
    dt = time.perf_counter() - t0
    worst = max(e.rel_error for e in entries)
    ok = worst <= 1e-5 and len(entries) >= 500 and dt < 60
    report("C4 backprop audit", ok,
           f"{len(entries)} coordinates, max rel error {worst:.2e}, {dt:.1f} s")


@pytest.mark.slow
def test_c05a_reduced_recipe():
    H, cid = resolve_code("regular_96_3_6")
    cfg = TrainConfig(t_max=25, J=100, K=50, train_snr_db=4.0, learning_rate=0.005, seed=0)
    t0 = time.perf_counter()
    params, _ = incremental_train(cfg, H, build_qrd(H), code_id=cid)
    dt = time.perf_counter() - t0
    ok, detail = trend_checks(params)
    report("C5a reduced recipe (n=96, J=100)", ok and dt < 900, f"{detail}, {dt:.0f} s")


def test_c05b_bundled_full_recipe(trained204):
    ok, detail = trend_checks(trained204)
    report("C5b full recipe (bundled n=204 params)", ok and trained204.t_max == 25, detail)


@pytest.mark.slow
def test_c06_restart_monotonicity():
    recs = run_ber_sweep(SweepConfig(code=CODE204, params=BUNDLED, snr_points=[1.0],
                                     r_max=(1, 10, 100), min_errors=500, max_words=200_000,
                                     batch_size=128, seed=6))
    ber = {r.r_max: r.ber for r in recs}
    enough = all(r.bit_errors >= 100 for r in recs)
    ok = enough and ber[100] <= ber[10] <= ber[1]
    report("C6 restart monotonicity", ok,
           "at 1.0 dB BER " + ", ".join(f"r_max={k}: {v:.3e}" for k, v in ber.items())
           + f" ({', '.join(str(r.bit_errors) for r in recs)} bit errors)")


def test_c07_trajectories(code204, trained204):
    mats = build_qrd(code204)
    G = gf2_generator(code204)
    sigma = snr_to_sigma(4.0, design_rate(code204))
    # first received word the decoder gets right
    for w in range(100):
        rng = np.random.default_rng([7, w])
        c = random_codeword(G, rng)
        y = modulate(c) + sigma / np.sqrt(2) * rng.standard_normal(code204.n)
        res = decode(y, code204, mats, trained204, DecodeConfig(r_max=1),
                     np.random.default_rng([7, w, 1]))
        if res.converged and np.array_equal(res.estimate, c):
            break
    reached = 0
    for k in range(10):
        tr = decode_trajectory(y, c, code204, mats, trained204, np.random.default_rng([7, w, 2, k]))
        reached += min(tr[1:16]) <= 1e-3
    report("C7 trajectories", reached >= 8,
           f"{reached}/10 restarts reach NSE <= 1e-3 within 15 iterations (word {w})")


@pytest.mark.slow
def test_c08_average_iterations():
    recs = run_avg_iterations(SweepConfig(code=CODE204, params=BUNDLED, snr_points=[3.75],
                                          r_max=(1, 10, 100), t_max=100, min_errors=10**9,
                                          max_words=2000, batch_size=128, seed=8))
    avg = {r.r_max: r.avg_iter for r in recs}
    ok = all(15 <= v <= 60 for v in avg.values())
    report("C8 average iterations", ok,
           "at 3.75 dB, 2000 words: " + ", ".join(f"r_max={k}: {v:.2f}" for k, v in avg.items()))


@pytest.mark.slow
def test_c09_ber_against_bp():
    recs = run_ber_sweep(SweepConfig(code=CODE204, params=BUNDLED, snr_points=[0.0],
                                     decoders=("tpg", "bp"), r_max=(100,), t_max=100,
                                     min_errors=300, max_words=200_000, batch_size=128, seed=9))
    ber = {r.decoder: r.ber for r in recs}
    report("C9 TPG r_max=100 vs BP", ber["tpg"] <= 1.5 * ber["bp"],
           f"at 0.0 dB BER tpg={ber['tpg']:.3e}, bp={ber['bp']:.3e}, "
           f"ratio {ber['tpg'] / ber['bp']:.1f}")


@pytest.mark.slow
def test_c10_bp_sanity(small_code):
    book = brute_force_codewords(SMALL_H).astype(float)
    G = gf2_generator(small_code)
    rng = np.random.default_rng(10)
    sigma = snr_to_sigma(6.0, design_rate(small_code))
    C = np.stack([random_codeword(G, rng) for _ in range(10_000)])
    Y = modulate(C) + sigma / np.sqrt(2) * rng.standard_normal(C.shape)
    res = bp_decode_batch(llr_exact(Y, sigma), TannerGraph(small_code), BpConfig())
    dist = ((Y[:, None, :] - (1.0 - 2.0 * book)[None]) ** 2).sum(axis=2)
    ml = book[np.argmin(dist, axis=1)]
    agree = np.mean([np.array_equal(r.estimate, ml[k]) for k, r in enumerate(res)])

    snrs = [-1.0, -0.5, 0.0, 0.5, 1.0]
    recs = run_ber_sweep(SweepConfig(code=CODE204, snr_points=snrs, decoders=("bp",),
                                      min_errors=300, max_words=200_000, batch_size=128,
                                      seed=10))
    bers = [r.ber for r in recs]
    mono = all(a >= b for a, b in zip(bers, bers[1:]))
    report("C10 BP sanity", agree >= 0.99 and mono,
           f"ML agreement {agree:.4f}; n=204 BER over {snrs} dB: "
           + ", ".join(f"{b:.2e}" for b in bers))


def test_c11_cli_determinism(tmp_path, capsys):
    small = tmp_path / "small.alist"
    from conftest import SMALL_ALIST
    small.write_text(SMALL_ALIST)
    rng = np.random.default_rng(11)
    words = tmp_path / "y.txt"
    words.write_text("\n".join(" ".join(repr(float(v)) for v in 1 + 0.6 * rng.standard_normal(204))
                               for _ in range(5)) + "\n")
    sweep = ["--code", CODE204, "--params", BUNDLED, "--snr", "1:2:1", "--rmax", "1,3",
             "--min-errors", "50", "--max-words", "200"]
    commands = {
        "train": ["train", "--code", "regular_96_3_6", "--tmax", "3", "--J", "5", "--K", "4",
                  "--no-wall-time", "--log", "{out}.log", "--out", "{out}"],
        "decode": ["decode", "--code", CODE204, "--params", BUNDLED, "--input", str(words),
                   "--rmax", "5", "--out", "{out}"],
        "sweep": ["sweep", *sweep, "--decoders", "tpg,bp", "--out", "{out}"],
        "avg-iter": ["avg-iter", *sweep, "--out", "{out}"],
        "dump-qrd": ["dump-qrd", "--code", str(small), "--which", "Q", "R", "D", "--out", "{out}"],
        "check-grad": ["check-grad", "--instances", "5", "--out", "{out}"],
    }
    same = {}
    for name, argv in commands.items():
        outputs = []
        for rep in range(2):
            out = tmp_path / f"{name}.{rep}"
            code = main([a.format(out=out) for a in argv])
            blob = out.read_bytes()
            if name == "train":
                blob += (tmp_path / f"{name}.{rep}.log").read_bytes()
            outputs.append((code, blob))
        same[name] = outputs[0] == outputs[1] and outputs[0][0] == 0
    capsys.readouterr()
    bad = [k for k, v in same.items() if not v]
    report("C11 CLI determinism", not bad,
           f"{len(same) - len(bad)}/{len(same)} subcommands byte-identical on rerun"
           + (f"; differing: {', '.join(bad)}" if bad else ""))
