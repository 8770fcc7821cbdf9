"""Write the bundled 5 s synthetic melody and its reference pitch track.

Usage: python scripts/make_synthetic.py [--out-dir tests/data] [--seed 0]
"""
import argparse
from pathlib import Path

from melody_kit.audio_io import write_audio
from melody_kit.decode import save_track
from melody_kit.synth import synthetic_melody


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default=str(Path(__file__).parents[1] / "tests" / "data"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--duration", type=float, default=5.0)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wave, ref = synthetic_melody(args.duration, seed=args.seed)
    write_audio(out / "synthetic_5s.wav", wave)
    save_track(out / "synthetic_5s_ref.txt", ref)
    print(f"wrote {out / 'synthetic_5s.wav'} and {out / 'synthetic_5s_ref.txt'}")


if __name__ == "__main__":
    main()
