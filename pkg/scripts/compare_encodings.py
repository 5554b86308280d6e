"""Numerical vs one-hot feature encodings on prototype-generated data.

Trains the MLP baseline on both encodings for each class count and several
seeds, and prints weighted F1 next to the random-guessing expectation.
"""

from __future__ import annotations

import argparse

import numpy as np

from speechcue.baseline import TrainConfig, encode_onehot, expected_random_f1, predict, train
from speechcue.corpus import IEMOCAP_LABELS
from speechcue.metrics import score
from speechcue.synthetic import prototype_dataset
from speechcue.thresholds import FEATURES, QuantileScheme, categorize, compute_quantiles


def onehot(X: np.ndarray, bounds: list[list[float]], k: int) -> np.ndarray:
    scheme = QuantileScheme.for_classes(k)
    rows = []
    for x in X:
        cats = {f: categorize(float(x[j]), bounds[j], scheme, 1.0) for j, f in enumerate(FEATURES)}
        rows.append(encode_onehot(cats, k).values)
    return np.vstack(rows)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", type=int, default=1200)
    ap.add_argument("--test", type=int, default=1200)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    Xte, yte = prototype_dataset(args.test, seed=10_000)
    counts = np.array([yte.count(lab) for lab in IEMOCAP_LABELS])
    rand = expected_random_f1(counts / counts.sum(), 10_000, 0)
    print(f"random guessing: {100 * rand:.2f}")
    print(f"{'classes':>7} {'numerical':>10} {'onehot':>10}")
    for k in (3, 4, 5, 6):
        num, hot = [], []
        for s in range(args.seeds):
            X, y = prototype_dataset(args.train, seed=s)
            cfg = TrainConfig(seed=s)
            m = train(X, y, cfg, IEMOCAP_LABELS)
            num.append(score(yte, predict(m, Xte)[0], IEMOCAP_LABELS).weighted_f1)
            bounds = [compute_quantiles(X[:, j], QuantileScheme.for_classes(k).quantiles) for j in range(len(FEATURES))]
            m = train(onehot(X, bounds, k), y, cfg, IEMOCAP_LABELS)
            hot.append(score(yte, predict(m, onehot(Xte, bounds, k))[0], IEMOCAP_LABELS).weighted_f1)
        print(f"{k:>7} {100 * np.mean(num):>10.2f} {100 * np.mean(hot):>10.2f}")


if __name__ == "__main__":
    main()
