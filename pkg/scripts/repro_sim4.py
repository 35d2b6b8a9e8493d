"""Five-class simulation study over several seeds: separation and NEC signatures."""

import argparse

from specem.cli import repro_sim4


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--T", type=int, default=50)
    parser.add_argument("--restarts", type=int, default=10)
    args = parser.parse_args()

    print("seed  ARI    sine purity  NEC global  NEC local  elbow  seconds")
    for seed in range(args.seeds):
        out = repro_sim4(seed, n=args.n, T=args.T, restarts=args.restarts)
        sel = out["selection"]
        sines = min(out["class_purity"]["sine_0.1"], out["class_purity"]["sine_0.2"])
        print(
            f"{seed:>4}  {out['adjusted_rand']:.3f}  {sines:>11.2f}  {sel['nec_global_min']!s:>10}"
            f"  {str(sel['nec_local_minima']):>9}  {sel['elbow_k']!s:>5}  {out['seconds']:>7.2f}"
        )


if __name__ == "__main__":
    main()
