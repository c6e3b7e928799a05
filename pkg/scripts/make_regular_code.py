"""Generate a (dv, dc)-regular parity-check matrix without 4-cycles (PEG).

Used once to produce the bundled fixture codes; the output is committed.

    python scripts/make_regular_code.py 204 3 6 --seed 1 > src/tpgdecode/data/regular_204_3_6.alist
"""

import argparse
import sys

import numpy as np

from tpgdecode.code import ParityCheckMatrix, format_alist


def peg(n, dv, dc, rng):
    """Progressive edge growth with check degrees capped at dc."""
    m = n * dv // dc
    if m * dc != n * dv:
        raise SystemExit("n * dv must be divisible by dc")
    var_nb = [[] for _ in range(n)]
    chk_nb = [[] for _ in range(m)]
    for j in range(n):
        for e in range(dv):
            open_checks = [c for c in range(m) if len(chk_nb[c]) < dc and c not in var_nb[j]]
            if e == 0:
                cand = open_checks
            else:
                # breadth-first search from j; prefer unreached checks, else the last layer
                reached = set(var_nb[j])
                frontier = set(var_nb[j])
                while True:
                    vs = {v for c in frontier for v in chk_nb[c]}
                    nxt = {c for v in vs for c in var_nb[v]} - reached
                    unreached = [c for c in open_checks if c not in reached | nxt]
                    if not nxt or not unreached:
                        cand = unreached or [c for c in open_checks if c in nxt] or \
                            [c for c in open_checks if c not in reached] or open_checks
                        break
                    reached |= nxt
                    frontier = nxt
            low = min(len(chk_nb[c]) for c in cand)
            cand = [c for c in cand if len(chk_nb[c]) == low]
            c = cand[rng.integers(len(cand))]
            var_nb[j].append(c)
            chk_nb[c].append(j)
    return ParityCheckMatrix.from_rows(chk_nb, n)


def girth_ok(H):
    rows = [set(r) for r in H.rows]
    return all(len(rows[i] & rows[k]) <= 1 for i in range(H.m) for k in range(i + 1, H.m))


def make(n, dv, dc, rng):
    H = peg(n, dv, dc, rng)
    if not girth_ok(H) or H.max_row_weight != dc or min(len(r) for r in H.rows) != dc:
        raise SystemExit("construction did not produce a regular 4-cycle-free code")
    return H


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("n", type=int)
    ap.add_argument("dv", type=int)
    ap.add_argument("dc", type=int)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    H = make(args.n, args.dv, args.dc, np.random.default_rng(args.seed))
    sys.stdout.write(format_alist(H))


if __name__ == "__main__":
    main()
