"""File formats: snapshot files, dataset manifests, model files, reports.

SnapshotFile layout (cross-language, little endian):
    magic "GPM1" | u32 version = 1 | u32 rows | u32 cols |
    rows * cols float64 payload in column-major order.

The model file is a self-describing binary: magic "GPMM", u32 version,
u64 header length, a canonical JSON header (sorted keys), then raw float64
array payloads at the offsets recorded in the header.  The chart matrices
are embedded verbatim so loading never re-derives the null space.  All
writes are atomic (temp file then rename) and byte deterministic.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from io import StringIO

import jsonschema
import numpy as np

from .chart import Chart, DenseF, HouseholderF
from .cxgboost import Ensemble, Leaf, Split, TrainConfig
from .grassmann import PodBasis
from .harness import TrainedModel

__all__ = [
    "SNAPSHOT_MAGIC",
    "MODEL_MAGIC",
    "SnapshotFileError",
    "ManifestEntry",
    "DatasetManifest",
    "atomic_write_bytes",
    "write_snapshot",
    "read_snapshot",
    "write_manifest",
    "read_manifest",
    "save_model",
    "load_model",
    "write_csv",
    "format_float",
]

SNAPSHOT_MAGIC = b"GPM1"
MODEL_MAGIC = b"GPMM"
FORMAT_VERSION = 1


class SnapshotFileError(ValueError):
    """Malformed snapshot or model file."""


def atomic_write_bytes(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshot(path: str, matrix: np.ndarray) -> None:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise SnapshotFileError(f"snapshot payload must be 2-D, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise SnapshotFileError("snapshot payload contains non-finite values")
    header = SNAPSHOT_MAGIC + struct.pack("<III", FORMAT_VERSION, m.shape[0], m.shape[1])
    payload = np.ascontiguousarray(m, dtype="<f8").tobytes(order="F")
    atomic_write_bytes(path, header + payload)


def read_snapshot(path: str) -> np.ndarray:
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 16 or blob[:4] != SNAPSHOT_MAGIC:
        raise SnapshotFileError(f"{path}: not a snapshot file")
    version, rows, cols = struct.unpack("<III", blob[4:16])
    if version != FORMAT_VERSION:
        raise SnapshotFileError(f"{path}: unsupported version {version}")
    expected = 16 + rows * cols * 8
    if len(blob) != expected:
        raise SnapshotFileError(
            f"{path}: payload length {len(blob)} does not match header ({expected})"
        )
    data = np.frombuffer(blob[16:], dtype="<f8").reshape((rows, cols), order="F")
    if not np.all(np.isfinite(data)):
        raise SnapshotFileError(f"{path}: non-finite values in payload")
    return np.array(data)


# ---------------------------------------------------------------------------
# Dataset manifest

MANIFEST_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "n", "n_t", "rank", "entries"],
    "properties": {
        "problem": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "n_t": {"type": "integer", "minimum": 1},
        "rank": {"type": "integer", "minimum": 1},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["theta", "path", "split"],
                "properties": {
                    "theta": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    "path": {"type": "string"},
                    "split": {"enum": ["train", "test"]},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class ManifestEntry:
    theta: tuple
    path: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    problem: str
    n: int
    n_t: int
    rank: int
    entries: tuple

    def __post_init__(self):
        thetas = [e.theta for e in self.entries]
        if len(set(thetas)) != len(thetas):
            raise ValueError("manifest parameter points must be unique")

    def split(self, label: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == label]


def write_manifest(path: str, manifest: DatasetManifest) -> None:
    doc = {
        "problem": manifest.problem,
        "n": manifest.n,
        "n_t": manifest.n_t,
        "rank": manifest.rank,
        "entries": [
            {"theta": list(e.theta), "path": e.path, "split": e.split}
            for e in manifest.entries
        ],
    }
    jsonschema.validate(doc, MANIFEST_SCHEMA)
    atomic_write_bytes(path, json.dumps(doc, indent=1, sort_keys=True).encode() + b"\n")


def read_manifest(path: str, check_files: bool = True) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    try:
        jsonschema.validate(doc, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValueError(f"{path}: invalid manifest: {exc.message}") from exc
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for item in doc["entries"]:
        full = os.path.join(base, item["path"])
        if check_files:
            if not os.path.exists(full):
                raise ValueError(f"{path}: missing snapshot file {item['path']}")
        entries.append(
            ManifestEntry(theta=tuple(item["theta"]), path=full, split=item["split"])
        )
    return DatasetManifest(
        problem=doc["problem"],
        n=doc["n"],
        n_t=doc["n_t"],
        rank=doc["rank"],
        entries=tuple(entries),
    )


# ---------------------------------------------------------------------------
# Model file

def _flatten_tree(node, structure: list, leaf_rows: list) -> int:
    """Preorder flattening; returns the node's index.  Leaves reference rows
    of the shared leaf-weight matrix."""
    idx = len(structure)
    if isinstance(node, Leaf):
        structure.append({"leaf": len(leaf_rows)})
        leaf_rows.append(node.weight)
        return idx
    structure.append(None)
    left = _flatten_tree(node.left, structure, leaf_rows)
    right = _flatten_tree(node.right, structure, leaf_rows)
    structure[idx] = {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": left,
        "right": right,
    }
    return idx


def _rebuild_tree(structure: list, idx: int, weights: np.ndarray):
    node = structure[idx]
    if "leaf" in node:
        return Leaf(weight=weights[node["leaf"]].copy())
    return Split(
        feature=int(node["feature"]),
        threshold=float(node["threshold"]),
        left=_rebuild_tree(structure, node["left"], weights),
        right=_rebuild_tree(structure, node["right"], weights),
    )


def save_model(path: str, model: TrainedModel) -> None:
    arrays: dict[str, np.ndarray] = {
        "reference": model.chart.reference.matrix,
        "train_thetas": model.train_thetas,
        "train_targets": model.train_targets,
    }
    chart_meta = {
        "kind": model.chart.f.kind,
        "n": model.chart.n,
        "r": model.chart.r,
        "radius": model.chart.radius,
    }
    if isinstance(model.chart.f, DenseF):
        arrays["f_matrix"] = model.chart.f.matrix
    else:
        arrays["f_vectors"] = model.chart.f.vectors

    trees = []
    leaf_rows: list[np.ndarray] = []
    for tree in model.ensemble.trees:
        structure: list = []
        _flatten_tree(tree, structure, leaf_rows)
        trees.append(structure)
    arrays["leaf_weights"] = (
        np.vstack(leaf_rows)
        if leaf_rows
        else np.zeros((0, model.ensemble.output_dim))
    )

    cfg = model.config
    header = {
        "format": "grasspod-model",
        "version": FORMAT_VERSION,
        "chart": chart_meta,
        "config": {
            "rounds": cfg.rounds,
            "learning_rate": cfg.learning_rate,
            "max_depth": cfg.max_depth,
            "leaf_penalty": cfg.leaf_penalty,
            "l2_penalty": cfg.l2_penalty,
            "subsample": cfg.subsample,
            "min_samples_leaf": cfg.min_samples_leaf,
            "rng_seed": cfg.rng_seed,
            "enforce_ball": cfg.enforce_ball,
        },
        "fingerprint": {
            "problem": model.problem,
            "n": model.chart.n,
            "rank": model.rank,
            "n_train": int(model.train_thetas.shape[0]),
        },
        "reference_policy": model.reference_policy,
        "output_dim": model.ensemble.output_dim,
        "learning_rate": model.ensemble.learning_rate,
        "trees": trees,
        "arrays": {},
    }

    offset = 0
    blobs = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        header["arrays"][name] = {"shape": list(arr.shape), "offset": offset}
        blob = arr.tobytes()
        blobs.append(blob)
        offset += len(blob)
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    out = bytearray()
    out += MODEL_MAGIC
    out += struct.pack("<I", FORMAT_VERSION)
    out += struct.pack("<Q", len(header_bytes))
    out += header_bytes
    for blob in blobs:
        out += blob
    atomic_write_bytes(path, bytes(out))


def load_model(path: str) -> TrainedModel:
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 16 or blob[:4] != MODEL_MAGIC:
        raise SnapshotFileError(f"{path}: not a model file")
    version = struct.unpack("<I", blob[4:8])[0]
    if version != FORMAT_VERSION:
        raise SnapshotFileError(f"{path}: unsupported model version {version}")
    header_len = struct.unpack("<Q", blob[8:16])[0]
    header = json.loads(blob[16 : 16 + header_len].decode())
    payload = blob[16 + header_len :]

    def get_array(name: str) -> np.ndarray:
        meta = header["arrays"][name]
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = meta["offset"]
        flat = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        return np.array(flat).reshape(shape)

    reference = PodBasis(get_array("reference"))
    chart_meta = header["chart"]
    if chart_meta["kind"] == "dense":
        f = DenseF(get_array("f_matrix"), chart_meta["n"], chart_meta["r"])
    else:
        f = HouseholderF(get_array("f_vectors"))
    chart = Chart(reference=reference, f=f, radius=chart_meta["radius"])

    weights = get_array("leaf_weights")
    trees = tuple(_rebuild_tree(structure, 0, weights) for structure in header["trees"])
    cfg = TrainConfig(**header["config"])
    ensemble = Ensemble(
        trees=trees,
        learning_rate=header["learning_rate"],
        output_dim=int(header["output_dim"]),
    )
    return TrainedModel(
        chart=chart,
        ensemble=ensemble,
        config=cfg,
        rank=int(header["fingerprint"]["rank"]),
        problem=header["fingerprint"]["problem"],
        train_thetas=get_array("train_thetas"),
        train_targets=get_array("train_targets"),
        reference_policy=header["reference_policy"],
    )


# ---------------------------------------------------------------------------
# Reports

def format_float(x: float) -> str:
    """Shortest round-trip decimal form; keeps reports byte deterministic."""
    return repr(float(x))


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_float(v) if isinstance(v, float) else str(v) for v in row]
        )
    atomic_write_bytes(path, buf.getvalue().encode())
