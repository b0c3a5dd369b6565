"""Run the two-phase experiment on synthetic data and print both tables.

    python3 scripts/run_synthetic_experiment.py                  # acceptance.ini
    python3 scripts/run_synthetic_experiment.py --seed 3 --jobs 2
"""

import argparse
from pathlib import Path

from roadsev.config import load_config
from roadsev.harness import cmd_experiment, with_overrides

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "acceptance.ini")
    ap.add_argument("--seed", type=int, help="experiment and data seed")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = load_config(args.config)
    cfg = with_overrides(cfg, seed=args.seed, n_jobs=args.jobs, out=args.out,
                         synth=with_overrides(cfg.synth, seed=args.seed))

    rep = cmd_experiment(cfg)
    print(rep.tables())
    print()
    for r1, r2 in zip(rep.phase1, rep.phase2):
        print(f"{r1.model:<26} accuracy {r1.accuracy:.4f} -> {r2.accuracy:.4f} "
              f"({r2.accuracy - r1.accuracy:+.4f})")
    print(f"\nselected: {', '.join(rep.selected)}")
    print(f"wrote {cfg.out}")


if __name__ == "__main__":
    main()
