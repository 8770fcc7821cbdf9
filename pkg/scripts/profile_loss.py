"""Per-window loss profile of a voicing prediction, for burst-loss plots.

Takes a voicing sequence (one value per line) or plants bursts in a random
one, and writes every S-curved window value as ``kind,m,start,value`` plus a
per-length summary (mean and max per window length).

Usage: python scripts/profile_loss.py [--voicing seq.txt] --out profile
"""
import argparse
import csv

import numpy as np

from melody_kit.decode import burst_profile
from melody_kit.stability_loss import LossParams, aggregate_loss_nv, aggregate_loss_v
from melody_kit.synth import planted_bursts


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--voicing", help="voicing sequence file (values in [0, 1])")
    parser.add_argument("--frames", type=int, default=128)
    parser.add_argument("--confidence", type=float, default=0.9)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mv", type=int, default=30)
    parser.add_argument("--mnv", type=int, default=7)
    parser.add_argument("--r", type=float, default=5.0)
    parser.add_argument("--out", default="profile", help="output prefix")
    args = parser.parse_args()

    p = LossParams(M_v=args.mv, M_nv=args.mnv, r=args.r)
    if args.voicing:
        a = np.loadtxt(args.voicing, ndmin=1)
    else:
        bursty, _ = planted_bursts(np.random.default_rng(args.seed), args.frames, M_v=p.M_v, M_nv=p.M_nv)
        a = np.where(bursty == 1, args.confidence, 1 - args.confidence)

    l_v, win_v = aggregate_loss_v(a, p)
    l_nv, win_nv = aggregate_loss_nv(a, p)
    with open(f"{args.out}_windows.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "m", "start", "value"])
        for kind, wins in (("v", win_v), ("nv", win_nv)):
            for m, vals in wins.items():
                w.writerows([kind, m, t, f"{x:.17g}"] for t, x in enumerate(vals))
    with open(f"{args.out}_by_length.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "m", "windows", "mean", "max"])
        for kind, wins in (("v", win_v), ("nv", win_nv)):
            for m, vals in wins.items():
                w.writerow([kind, m, len(vals), f"{vals.mean():.17g}", f"{vals.max():.17g}"])
    prof = burst_profile((a >= 0.5).astype(int), p.M_v, p.M_nv)
    print(f"L_v={l_v:.6g} L_nv={l_nv:.6g} bursts: vocal {prof.counts_by_length('v')}, "
          f"non-vocal {prof.counts_by_length('nv')}")


if __name__ == "__main__":
    main()
