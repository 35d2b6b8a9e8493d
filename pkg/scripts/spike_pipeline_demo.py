"""Synthetic spike train through detection, spectral clustering and slowness GMM."""

import argparse

import numpy as np

from specem.em import EmConfig, run_em
from specem.evaluation import confusion_matrix
from specem.gmm1d import scan_bic
from specem.simulation import demo_templates, spike_train
from specem.spikes import DetectorConfig, detect_spikes


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=40, help="occurrences per template")
    parser.add_argument("--snr", type=float, default=5.0)
    parser.add_argument("--tol", type=float, default=0.25)
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    syn = spike_train(demo_templates(snr=args.snr), count_per_template=args.count, seed=args.seed)
    cat = detect_spikes(syn.recording, DetectorConfig(tol=args.tol))
    dist = np.abs(syn.onsets[:, None] - cat.onsets[None, :])
    nearest = dist.argmin(axis=1)
    found = dist[np.arange(syn.onsets.size), nearest] <= cat.window_len // 2
    print(f"{len(syn.recording)} samples, {syn.onsets.size} spikes, {len(cat)} detections, recall {found.mean():.3f}")

    res = run_em(cat.windows, EmConfig(k=args.k, seed=args.seed))
    conf = confusion_matrix(syn.template_ids[found], res.hard_assignment[nearest[found]], 3, args.k)
    print("template x cluster counts on true-spike windows:")
    print(conf)

    scan = scan_bic(np.log(cat.slowness), k_max=4, restarts=5, seed=args.seed)
    print(f"log-slowness GMM: BIC picks K={scan.best_k}, means {np.round(scan.best.means, 3).tolist()}")


if __name__ == "__main__":
    main()
