"""Write an accident-shaped CSV with the public export's header spelling.

The rows are synthetic; the file only exercises the ingest path that a
real US Accidents export would take.

    python3 scripts/make_accidents_sample.py sample.csv --rows 2000
    roadsev experiment --data sample.csv --out results/sample
"""

import argparse

from roadsev.synth import accidents_like_frame


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    frame = accidents_like_frame(args.rows, args.seed, export_spelling=True)
    frame.to_csv(args.out, index=False)
    print(f"wrote {len(frame)} rows x {frame.shape[1]} columns to {args.out}")


if __name__ == "__main__":
    main()
