"""End-to-end run on the bundled synthetic clip: extract, loss, smooth, evaluate.

The prediction grid is model-free (``synth.salience_grid`` of the z-CFP
tensor), so the scores show the plumbing works, not extraction quality.

Usage: python scripts/smoke_pipeline.py --work /tmp/smoke [--median-size 7]
"""
import argparse
import json
import time
from pathlib import Path

from melody_kit.cfp import CfpTensor, read_tensor
from melody_kit.cli import main as cli
from melody_kit.decode import load_track
from melody_kit.grids import write_grid
from melody_kit.synth import label_grid, salience_grid

DATA = Path(__file__).parents[1] / "tests" / "data"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--wav", default=str(DATA / "synthetic_5s.wav"))
    parser.add_argument("--ref", default=str(DATA / "synthetic_5s_ref.txt"))
    parser.add_argument("--work", default="smoke_out")
    parser.add_argument("--median-size", type=int, default=7)
    args = parser.parse_args()

    work = Path(args.work)
    work.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    steps = [["extract", args.wav, "--out-dir", work]]
    if cli([str(x) for x in steps[0]]):
        raise SystemExit("extract failed")
    tensor, header = read_tensor(work / (Path(args.wav).stem + ".zcfp"))
    n = header["valid_frames"]
    tensor = CfpTensor(tensor.values[:, :n], tensor.log_bin_freqs, tensor.frame_times[:n])
    write_grid(work / "pred.csv", salience_grid(tensor))
    write_grid(work / "label.csv", label_grid(load_track(args.ref), tensor.log_bin_freqs)[:n])
    for argv in (
        ["loss", "--pred", work / "pred.csv", "--label", work / "label.csv"],
        ["smooth", "--pred", work / "pred.csv", "--out", work / "est.txt",
         "--median-size", args.median_size],
        ["evaluate", "--ref", args.ref, "--est", work / "est.txt"],
    ):
        if cli([str(x) for x in argv]):
            raise SystemExit(f"{argv[0]} failed")
    print(json.dumps({"seconds": round(time.perf_counter() - start, 3)}))


if __name__ == "__main__":
    main()
