"""File formats: JSON model documents and CSV datasets/point sets.

Floats are written with Python's shortest round-trip repr, so a load of a
save reproduces every parameter bit-for-bit, and equal runs produce equal
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from . import network as nn
from .errors import DatasetFormatError, ModelFormatError
from .tensor import as_vec

MODEL_KEYS = ("input_dim", "num_classes", "layers")
LAYER_KEYS = ("rows", "cols", "weights", "bias", "activation")


def network_to_document(net: nn.Network) -> dict:
    return {
        "input_dim": net.input_dim,
        "num_classes": net.num_classes,
        "layers": [
            {
                "rows": layer.rows,
                "cols": layer.cols,
                "weights": [float(v) for v in layer.weights.ravel()],
                "bias": [float(v) for v in layer.bias],
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
    }


def network_from_document(doc: dict) -> nn.Network:
    if not isinstance(doc, dict):
        raise ModelFormatError(f"model document must be an object, got {type(doc).__name__}")
    for key in MODEL_KEYS:
        if key not in doc:
            raise ModelFormatError(f"model document missing field {key!r}")
    layers = []
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise ModelFormatError("model document needs a nonempty 'layers' list")
    for i, spec in enumerate(doc["layers"]):
        for key in LAYER_KEYS:
            if key not in spec:
                raise ModelFormatError(f"layer {i} missing field {key!r}")
        rows, cols = int(spec["rows"]), int(spec["cols"])
        weights = np.asarray(spec["weights"], dtype=np.float64)
        if weights.size != rows * cols:
            raise ModelFormatError(
                f"layer {i} has {weights.size} weights, expected rows*cols = {rows * cols}"
            )
        layers.append(
            nn.Layer(
                weights=weights.reshape(rows, cols),
                bias=np.asarray(spec["bias"], dtype=np.float64),
                activation=str(spec["activation"]),
            )
        )
    return nn.Network(
        layers=tuple(layers),
        input_dim=int(doc["input_dim"]),
        num_classes=int(doc["num_classes"]),
    )


def save_model(net: nn.Network, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(network_to_document(net), f, indent=1)
        f.write("\n")


def load_model(path: str) -> nn.Network:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(
                f"{os.path.basename(path)}: line {e.lineno}, column {e.colno}: {e.msg}"
            ) from e
    return network_from_document(doc)


def _feature_header(dim: int) -> list[str]:
    return [f"x{i}" for i in range(dim)]


def _parse_header(row: list[str], path: str) -> tuple[int, bool]:
    """(feature count, whether a final 'label' column is present)."""
    names = [c.strip() for c in row]
    has_label = bool(names) and names[-1] == "label"
    features = names[:-1] if has_label else names
    if not features or features != _feature_header(len(features)):
        raise DatasetFormatError(
            f"{os.path.basename(path)}: line 1: header must be x0..x{{d-1}}"
            f"{' then label' if has_label else ''}"
        )
    return len(features), has_label


def load_dataset(path: str) -> nn.LabeledDataset:
    """CSV with header x0,...,x{d-1},label and one sample per line."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        raise DatasetFormatError(f"{os.path.basename(path)}: empty file")
    dim, has_label = _parse_header(rows[0], path)
    if not has_label:
        raise DatasetFormatError(f"{os.path.basename(path)}: line 1: missing 'label' column")
    inputs, labels = [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 1:
            raise DatasetFormatError(
                f"{os.path.basename(path)}: line {line_no}: expected {dim + 1} fields, "
                f"got {len(row)}"
            )
        try:
            inputs.append(np.array([float(v) for v in row[:-1]]))
        except ValueError as e:
            raise DatasetFormatError(
                f"{os.path.basename(path)}: line {line_no}: bad feature value ({e})"
            ) from e
        try:
            label = int(row[-1])
        except ValueError as e:
            raise DatasetFormatError(
                f"{os.path.basename(path)}: line {line_no}: bad label {row[-1]!r}"
            ) from e
        if label < 0:
            raise DatasetFormatError(
                f"{os.path.basename(path)}: line {line_no}: label {label} out of range"
            )
        labels.append(label)
    return nn.LabeledDataset(inputs=tuple(inputs), labels=tuple(labels))


def _write_csv(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(buf.getvalue())


def save_dataset(data: nn.LabeledDataset, path: str) -> None:
    dim = data.input_dim
    _write_csv(
        path,
        _feature_header(dim) + ["label"],
        ([repr(float(v)) for v in x] + [str(y)] for x, y in data),
    )


def load_points(path: str) -> list[np.ndarray]:
    """CSV of feature rows only (header x0..x{d-1}, no label column)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        raise DatasetFormatError(f"{os.path.basename(path)}: empty file")
    dim, has_label = _parse_header(rows[0], path)
    if has_label:
        raise DatasetFormatError(
            f"{os.path.basename(path)}: line 1: point files must not have a label column"
        )
    points = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != dim:
            raise DatasetFormatError(
                f"{os.path.basename(path)}: line {line_no}: expected {dim} fields, "
                f"got {len(row)}"
            )
        try:
            points.append(np.array([float(v) for v in row]))
        except ValueError as e:
            raise DatasetFormatError(
                f"{os.path.basename(path)}: line {line_no}: bad feature value ({e})"
            ) from e
    return points


def save_points(points, path: str) -> None:
    points = [as_vec(p) for p in points]
    if not points:
        raise ValueError("point set must be nonempty")
    _write_csv(
        path,
        _feature_header(points[0].size),
        ([repr(float(v)) for v in p] for p in points),
    )
