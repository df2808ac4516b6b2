"""Seeded toy datasets in the unit square, so experiments need no
external data files."""

from __future__ import annotations

import numpy as np

from .network import LabeledDataset
from .tensor import Rng, project_box

BLOB_CENTERS = ((0.3, 0.3), (0.7, 0.7))
BLOB_SPREAD = 0.08


def blobs(
    n: int,
    seed: int,
    centers: tuple[tuple[float, ...], ...] = BLOB_CENTERS,
    spread: float = BLOB_SPREAD,
) -> LabeledDataset:
    """Gaussian clusters, one class per center, labels interleaved."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = Rng(seed)
    inputs, labels = [], []
    for i in range(n):
        label = i % len(centers)
        center = np.asarray(centers[label], dtype=np.float64)
        point = center + spread * rng.normal(size=center.size)
        inputs.append(project_box(point, 0.0, 1.0))
        labels.append(label)
    return LabeledDataset(inputs=tuple(inputs), labels=tuple(labels))


def two_moons(n: int, seed: int, noise: float = 0.06) -> LabeledDataset:
    """Two interleaved half-circles, scaled into [0.05, 0.95]^2."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = Rng(seed)
    inputs, labels = [], []
    for i in range(n):
        label = i % 2
        theta = float(rng.uniform(0.0, np.pi))
        if label == 0:
            raw = np.array([np.cos(theta), np.sin(theta)])
        else:
            raw = np.array([1.0 - np.cos(theta), 0.5 - np.sin(theta)])
        raw = raw + noise * rng.normal(size=2)
        # raw x spans about [-1, 2], raw y about [-0.5, 1]; map to the box.
        scaled = np.array([(raw[0] + 1.0) / 3.0, (raw[1] + 0.5) / 1.5])
        inputs.append(project_box(0.05 + 0.9 * scaled, 0.0, 1.0))
        labels.append(label)
    return LabeledDataset(inputs=tuple(inputs), labels=tuple(labels))


GENERATORS = {"blobs": blobs, "moons": two_moons}
