"""melody-kit command line: extract, loss, smooth, evaluate, demo-smooth.

Settings resolve as command-line flags, then ``--config`` (``key = value``
lines, keys named like the long flags), then built-in defaults. Exit codes:
0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import audio_io, cfp, decode, evaluate, grids, stability_loss, synth

CHUNK_FRAMES = 128
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _read_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# ----------------------------------------------------------------------
# shared flag groups
# ----------------------------------------------------------------------


def _cfp_flags(p: argparse.ArgumentParser) -> None:
    d = cfp.CfpParams()
    g = p.add_argument_group("z-CFP")
    g.add_argument("--sample-rate", type=int, default=d.sample_rate, help="working sample rate (Hz)")
    g.add_argument("--k", type=float, default=d.k, help="growth rate of exp(k n)")
    g.add_argument("--window", type=int, default=d.window_size, help="STFT window (samples)")
    g.add_argument("--hop", type=int, default=d.hop, help="STFT hop (samples)")
    g.add_argument("--bins", type=int, default=d.n_log_bins, help="log-frequency bins")
    g.add_argument("--bpo", type=int, default=d.bins_per_octave, help="bins per octave")
    g.add_argument("--fmin", type=float, default=d.f_min, help="lowest bin center (Hz)")
    g.add_argument("--fmax", type=float, default=d.f_max, help="nominal highest frequency (Hz)")
    g.add_argument("--gamma-gc", type=float, default=d.gamma_gc, help="compression before the cepstrum")
    g.add_argument("--gamma-gcos", type=float, default=d.gamma_gcos,
                   help="compression before the cepstrum of spectrum")


def _cfp_params(a) -> cfp.CfpParams:
    return cfp.CfpParams(
        k=a.k, window_size=a.window, hop=a.hop, n_log_bins=a.bins, bins_per_octave=a.bpo,
        f_min=a.fmin, f_max=a.fmax, hp_cutoff_freq=a.fmin, hp_cutoff_quef=1.0 / a.fmax,
        sample_rate=a.sample_rate, gamma_gc=a.gamma_gc, gamma_gcos=a.gamma_gcos,
    )


def _loss_flags(p: argparse.ArgumentParser) -> None:
    d = stability_loss.LossParams()
    g = p.add_argument_group("stability loss")
    g.add_argument("--mv", type=int, default=d.M_v, help="longest penalised vocal window (frames)")
    g.add_argument("--mnv", type=int, default=d.M_nv, help="longest penalised non-vocal window (frames)")
    g.add_argument("--r", type=float, default=d.r, help="S-curve exponent")
    g.add_argument("--weight-v", type=float, default=d.weight_v, help="weight of the vocal term")
    g.add_argument("--weight-nv", type=float, default=d.weight_nv, help="weight of the non-vocal term")


def _loss_params(a) -> stability_loss.LossParams:
    return stability_loss.LossParams(M_v=a.mv, M_nv=a.mnv, r=a.r, weight_v=a.weight_v,
                                     weight_nv=a.weight_nv)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def _require(a, *names) -> None:
    missing = ["--" + n.replace("_", "-") for n in names if getattr(a, n) in (None, "")]
    if missing:
        raise UsageError(f"{a.command}: missing {', '.join(missing)}")


def cmd_extract(a) -> dict:
    params = _cfp_params(a)
    out_dir = Path(a.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for src in a.inputs:
        w = audio_io.resample(audio_io.load_audio(src), params.sample_rate)
        tensor = cfp.compute_zcfp(w, params)
        n = tensor.values.shape[1]
        n_chunks = max(1, math.ceil(n / a.chunk))
        values = np.zeros((3, n_chunks * a.chunk, params.n_log_bins))
        values[:, :n] = tensor.values
        padded = cfp.CfpTensor(values, tensor.log_bin_freqs,
                               np.arange(values.shape[1]) * params.hop / params.sample_rate)
        dest = out_dir / (Path(src).stem + ".zcfp")
        cfp.write_tensor(dest, padded, params.hop / params.sample_rate, a.chunk, n)
        if a.csv:
            cfp.write_tensor_csv(dest.with_suffix(".csv"), tensor)
        outputs.append({"input": str(src), "output": str(dest), "frames": n, "chunks": n_chunks})
    return {"command": "extract", "k": params.k, "files": outputs}


def cmd_loss(a) -> dict:
    _require(a, "pred", "label")
    pred, _ = grids.read_grid(a.pred)
    label, _ = grids.read_grid(a.label)
    p = _loss_params(a)
    br = stability_loss.total_loss(pred, label, p)
    if a.per_window:
        with open(a.per_window, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "m", "start", "value"])
            for (kind, m), vals in sorted(br.per_window.items()):
                for start, v in enumerate(vals):
                    writer.writerow([kind, m, start, _fmt(v)])
    return {"command": "loss", **br.as_dict(), "frames": int(pred.shape[0]),
            "params": {"mv": p.M_v, "mnv": p.M_nv, "r": p.r}}


def cmd_smooth(a) -> dict:
    _require(a, "pred", "out")
    params = _cfp_params(a)
    pred, period = grids.read_grid(a.pred)
    bins = params.log_bin_freqs()
    original = decode.decode_grid(pred, bins, a.threshold, period)
    if a.median_size:
        track = decode.smooth_grid(pred, bins, a.median_size, a.threshold, period)
    else:
        track = original
    decode.save_track(a.out, track)
    return {"command": "smooth", "output": str(a.out), "frames": len(track),
            "median_size": a.median_size,
            "voiced_before": int(original.voiced.sum()), "voiced_after": int(track.voiced.sum())}


def cmd_evaluate(a) -> dict:
    if a.ref and a.est:
        report = evaluate.evaluate(decode.load_track(a.ref), decode.load_track(a.est))
        return {"command": "evaluate", "ref": str(a.ref), "est": str(a.est), **report.as_dict()}
    if not (a.ref_dir and a.est_dir):
        raise UsageError("give --ref and --est, or --ref-dir and --est-dir")

    rows, reports = [], []
    for ref_path in sorted(Path(a.ref_dir).glob("*.txt")):
        est_path = Path(a.est_dir) / ref_path.name
        if not est_path.exists():
            raise ValueError(f"no estimate for {ref_path.name} in {a.est_dir}")
        rep = evaluate.evaluate(decode.load_track(ref_path), decode.load_track(est_path))
        reports.append(rep)
        rows.append([ref_path.name] + [_fmt(getattr(rep, m)) for m in evaluate.METRICS])
    if not reports:
        raise ValueError(f"no *.txt reference tracks in {a.ref_dir}")
    mean = evaluate.mean_report(reports)
    rows.append(["mean"] + [_fmt(mean[m]) for m in evaluate.METRICS])
    if a.out:
        with open(a.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["track", *evaluate.METRICS])
            writer.writerows(rows)
    return {"command": "evaluate", "tracks": len(reports), "mean": mean,
            "output": str(a.out) if a.out else None}


def cmd_demo_smooth(a) -> dict:
    p = _loss_params(a)
    if a.init and a.label:
        a0 = np.loadtxt(a.init, ndmin=1)
        label = np.loadtxt(a.label, ndmin=1)
    else:
        rng = np.random.default_rng(a.seed)
        bursty, label = synth.planted_bursts(rng, a.frames, a.bursts, p.M_v, p.M_nv)
        a0 = np.where(bursty == 1, a.confidence, 1.0 - a.confidence)
    res = stability_loss.demo_smooth(a0, label, p, a.steps, a.lr)
    before = decode.burst_profile((res.trajectory[0] >= 0.5).astype(int), p.M_v, p.M_nv)
    after = decode.burst_profile((res.final >= 0.5).astype(int), p.M_v, p.M_nv)

    prefix = Path(a.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    curve = prefix.with_name(prefix.name + "_curve.csv")
    seqs = prefix.with_name(prefix.name + "_sequences.csv")
    with open(curve, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        writer.writerows([i, _fmt(v)] for i, v in enumerate(res.losses))
    with open(seqs, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "label", "before", "after"])
        writer.writerows([t, int(label[t]), _fmt(res.trajectory[0][t]), _fmt(res.final[t])]
                         for t in range(len(label)))
    return {"command": "demo-smooth", "loss_initial": float(res.losses[0]),
            "loss_final": float(res.losses[-1]), "bursts_before": before.count,
            "bursts_after": after.count, "curve": str(curve), "sequences": str(seqs)}


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="melody-kit", description=__doc__.split("\n\n")[0], formatter_class=fmt)
    parser.add_argument("--config", help="key = value settings file (flags override it)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="compute z-CFP tensors from WAV files", formatter_class=fmt)
    p.add_argument("inputs", nargs="+", help="input WAV files")
    p.add_argument("--out-dir", default=".", help="directory for .zcfp files")
    p.add_argument("--chunk", type=int, default=CHUNK_FRAMES, help="frames per excerpt")
    p.add_argument("--csv", action="store_true", help="also write a CSV debug dump")
    _cfp_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("loss", help="BCE + burst penalties of a prediction grid", formatter_class=fmt)
    p.add_argument("--pred", help="prediction grid (CSV or ZGRD)")
    p.add_argument("--label", help="label grid (CSV or ZGRD)")
    p.add_argument("--per-window", help="write per-window S-curved values to this CSV")
    _loss_flags(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("smooth", help="decode a grid, optionally with the median baseline",
                       formatter_class=fmt)
    p.add_argument("--pred", help="prediction grid (CSV or ZGRD)")
    p.add_argument("--out", help="output pitch track (time freq)")
    p.add_argument("--median-size", type=int, default=0, help="odd median size; 0 disables")
    p.add_argument("--threshold", type=float, default=0.5, help="voicing threshold")
    _cfp_flags(p)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("evaluate", help="VR, VFA, RPA, RCA and OA", formatter_class=fmt)
    p.add_argument("--ref", help="reference pitch track")
    p.add_argument("--est", help="estimated pitch track")
    p.add_argument("--ref-dir", help="batch mode: directory of reference *.txt tracks")
    p.add_argument("--est-dir", help="batch mode: directory of estimates with matching names")
    p.add_argument("--out", help="batch mode: per-track CSV with a final mean row")
    p.add_argument("--json", action="store_true", help="JSON output (always on; kept for scripts)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("demo-smooth", help="gradient descent toy on a bursty voicing sequence",
                       formatter_class=fmt)
    p.add_argument("--steps", type=int, default=500, help="gradient steps")
    p.add_argument("--lr", type=float, default=0.5, help="learning rate")
    p.add_argument("--frames", type=int, default=CHUNK_FRAMES, help="sequence length")
    p.add_argument("--bursts", type=int, default=5, help="bursts to plant")
    p.add_argument("--confidence", type=float, default=0.7,
                   help="initial probability given to the planted state")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--init", help="initial voicing sequence, one value per line")
    p.add_argument("--label", help="label voicing sequence, one value per line")
    p.add_argument("--out-prefix", default="demo", help="prefix for _curve.csv and _sequences.csv")
    _loss_flags(p)
    p.set_defaults(func=cmd_demo_smooth)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    config = _read_config(known.config)
    subparsers = parser._subparsers._group_actions[0].choices
    if config and known.command in subparsers:
        sub = subparsers[known.command]
        actions = {act.dest: act for act in sub._actions}
        defaults = {}
        for key, raw in config.items():
            act = actions.get(key)
            if act is None or not act.option_strings:
                raise UsageError(f"unknown config key {key!r} for {known.command}")
            if isinstance(act, argparse._StoreTrueAction):
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = act.type(raw) if act.type is not None else raw
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        payload = args.func(args)
    except UsageError as exc:
        print(f"melody-kit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"melody-kit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _emit(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
