"""Sweep the growth rate k on a harmonic tone and emit S~ and GCoS data as CSV.

For each k the script writes the frame-averaged modified spectrum S~ (linear
bins) and the frame-averaged GCoS channel (log bins), plus a summary row with
the tail/fundamental energy ratio and the GCoS argmax.

Usage: python scripts/k_sweep.py --f0 200 --ks 0 0.0003 0.0006 0.001 --out k_sweep
"""
import argparse
import csv

import numpy as np

from melody_kit.cfp import CfpParams, compute_zcfp, modified_spectrum
from melody_kit.synth import harmonic_tone


def band(row, f, params, half=2):
    c = int(round(f * params.window_size / params.sample_rate))
    return float(np.sum(row[c - half: c + half + 1] ** 2))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--f0", type=float, default=200.0)
    parser.add_argument("--decay", type=float, default=2.0, help="harmonic amplitude 1/h**decay")
    parser.add_argument("--duration", type=float, default=1.28)
    parser.add_argument("--ks", type=float, nargs="+", default=[0.0, 0.0003, 0.0006, 0.001, 0.002])
    parser.add_argument("--out", default="k_sweep", help="output prefix")
    args = parser.parse_args()

    tone = harmonic_tone(args.f0, args.duration, decay=args.decay)
    base = CfpParams()
    lin = np.arange(base.window_size // 2 + 1) * base.sample_rate / base.window_size
    logf = base.log_bin_freqs()
    spectra, gcos, summary = [], [], []
    for k in args.ks:
        p = base.with_k(k)
        s_mod = modified_spectrum(tone, p)[20:-20].mean(axis=0)
        g = compute_zcfp(tone, p).values[2, 20:-20].mean(axis=0)
        tail = sum(band(s_mod, args.f0 * h, p) for h in range(8, 13) if args.f0 * h < 4000)
        summary.append([k, tail / band(s_mod, args.f0, p), int(np.argmax(g)), logf[np.argmax(g)]])
        spectra.append(s_mod)
        gcos.append(g)

    with open(f"{args.out}_spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", *(f"k={k:g}" for k in args.ks)])
        w.writerows([f"{f:.17g}", *(f"{s[i]:.17g}" for s in spectra)] for i, f in enumerate(lin))
    with open(f"{args.out}_gcos.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", *(f"k={k:g}" for k in args.ks)])
        w.writerows([f"{f:.17g}", *(f"{g[i]:.17g}" for g in gcos)] for i, f in enumerate(logf))
    with open(f"{args.out}_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "tail_ratio_h8_12", "gcos_argmax_bin", "gcos_argmax_hz"])
        w.writerows(summary)
    for k, ratio, b, f in summary:
        print(f"k={k:<8g} tail/fundamental={ratio:.4g}  GCoS argmax bin {b} ({f:.1f} Hz)")


if __name__ == "__main__":
    main()
