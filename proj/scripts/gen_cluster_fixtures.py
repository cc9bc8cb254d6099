#!/usr/bin/env python3
"""Regenerates the frozen clustering oracle fixtures under tests/data/.

Each fixture stores a point set together with the labels produced by
scikit-learn's HDBSCAN (eom selection, euclidean metric) for the recorded
parameters. The C++ suite compares its own labeling against these labels up
to a label permutation (noise must map to noise).
"""

import json
import pathlib

import numpy as np
from sklearn.cluster import HDBSCAN


def blob(rng, center, n, spread):
    return rng.normal(loc=center, scale=spread, size=(n, 2))


def make_fixture(points, min_cluster_size, min_samples):
    clusterer = HDBSCAN(
        min_cluster_size=min_cluster_size,
        min_samples=min_samples,
        cluster_selection_method="eom",
    )
    labels = clusterer.fit_predict(points)
    return {
        "min_cluster_size": min_cluster_size,
        "min_samples": min_samples,
        "points": [[round(float(x), 10), round(float(y), 10)] for x, y in points],
        "labels": [int(v) for v in labels],
    }


def main():
    out_dir = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(20260810)

    # Two tight blobs, no noise expected.
    two_blobs = np.vstack([
        blob(rng, (2.0, 2.0), 20, 0.1),
        blob(rng, (8.0, 8.0), 20, 0.1),
    ])
    fixture = make_fixture(two_blobs, min_cluster_size=5, min_samples=5)
    (out_dir / "hdbscan_two_blobs.json").write_text(json.dumps(fixture) + "\n")

    # Mixed densities plus scattered background noise.
    mixed = np.vstack([
        blob(rng, (2.0, 7.5), 30, 0.18),
        blob(rng, (7.0, 2.0), 45, 0.35),
        blob(rng, (5.0, 5.0), 25, 0.12),
        rng.uniform(low=1.0, high=9.0, size=(20, 2)),
    ])
    fixture = make_fixture(mixed, min_cluster_size=5, min_samples=5)
    (out_dir / "hdbscan_mixed.json").write_text(json.dumps(fixture) + "\n")

    for name in ("hdbscan_two_blobs.json", "hdbscan_mixed.json"):
        data = json.loads((out_dir / name).read_text())
        n_clusters = len(set(l for l in data["labels"] if l >= 0))
        n_noise = sum(1 for l in data["labels"] if l == -1)
        print(f"{name}: {len(data['labels'])} points, {n_clusters} clusters, {n_noise} noise")


if __name__ == "__main__":
    main()
