"""Multi-view datasets: on-disk format, validation, normalization, synthesis.

A dataset directory holds ``manifest.json`` plus one CSV per view and an
optional ``labels.csv``::

    {"name": "...", "num_views": 3, "num_samples": 100, "num_clusters": 5,
     "views": [{"file": "view0.csv", "dim": 40}, ...],
     "labels": "labels.csv"}

View CSVs are ``dim`` rows by ``num_samples`` comma-separated decimals with no
header; samples are columns.  Values are written with Python's shortest
round-trip ``repr`` so a save/load cycle is bit-exact.  ``labels.csv`` has one
integer per line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "DatasetError",
    "MultiViewDataset",
    "SynthSpec",
    "load",
    "save",
    "normalize",
    "synth",
    "subspace_bases",
    "read_labels",
    "write_labels",
]

MANIFEST = "manifest.json"


class DatasetError(ValueError):
    """Invalid dataset contents or on-disk layout."""


@dataclass
class MultiViewDataset:
    name: str
    views: list[np.ndarray]
    labels: Optional[np.ndarray] = None
    k: Optional[int] = None

    def __post_init__(self):
        if not self.views:
            raise DatasetError(f"dataset {self.name!r} has no views")
        self.views = [np.asarray(X, dtype=float) for X in self.views]
        n = self.views[0].shape[1] if self.views[0].ndim == 2 else -1
        for i, X in enumerate(self.views):
            if X.ndim != 2 or X.shape[1] != n:
                raise DatasetError(
                    f"view {i} has shape {X.shape}; every view must be d_i x {n}"
                )
            if not np.all(np.isfinite(X)):
                raise DatasetError(f"view {i} contains non-finite values")
        if n < len(self.views):
            raise DatasetError(f"need at least as many samples as views (n={n}, v={len(self.views)})")
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,) or not np.issubdtype(labels.dtype, np.integer):
                raise DatasetError(f"labels must be {n} integers, got shape {labels.shape}")
            if self.k is None:
                self.k = int(labels.max()) + 1
            bad = np.flatnonzero((labels < 0) | (labels >= self.k))
            if bad.size:
                raise DatasetError(
                    f"label {labels[bad[0]]} at sample {bad[0]} outside 0..{self.k - 1}"
                )
            empty = np.setdiff1d(np.arange(self.k), labels)
            if empty.size:
                raise DatasetError(f"cluster {empty[0]} has no samples")
            self.labels = labels.astype(int)
        if self.k is not None and not 1 <= self.k <= n:
            raise DatasetError(f"number of clusters {self.k} must lie in 1..{n}")

    @property
    def n(self) -> int:
        return self.views[0].shape[1]

    @property
    def v(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [X.shape[0] for X in self.views]


def _format_row(row) -> str:
    return ",".join(repr(float(x)) for x in row)


def _read_matrix(path: Path, what: str) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: malformed number in {what}") from None
            if len(rows[-1]) != len(rows[0]):
                raise DatasetError(
                    f"{path}:{lineno}: {what} row has {len(rows[-1])} columns, "
                    f"first row has {len(rows[0])}"
                )
    if not rows:
        raise DatasetError(f"{path}: {what} is empty")
    return np.array(rows, dtype=float)


def read_labels(path) -> np.ndarray:
    """Read one integer label per line; blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: label file not found")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: malformed label {line!r}") from None
    return np.array(out, dtype=int)


def write_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(x)}\n" for x in labels)


def save(dataset: MultiViewDataset, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    views = []
    for i, X in enumerate(dataset.views):
        fname = f"view{i}.csv"
        with open(path / fname, "w", encoding="utf-8") as fh:
            fh.writelines(_format_row(row) + "\n" for row in X)
        views.append({"file": fname, "dim": int(X.shape[0])})
    manifest = {
        "name": dataset.name,
        "num_views": dataset.v,
        "num_samples": dataset.n,
        "num_clusters": dataset.k,
        "views": views,
        "labels": None,
    }
    if dataset.labels is not None:
        write_labels(dataset.labels, path / "labels.csv")
        manifest["labels"] = "labels.csv"
    with open(path / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load(path) -> MultiViewDataset:
    path = Path(path)
    mpath = path / MANIFEST
    if not mpath.is_file():
        raise DatasetError(f"{mpath}: manifest not found")
    try:
        with open(mpath, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{mpath}: invalid JSON ({exc})") from None
    try:
        n = int(manifest["num_samples"])
        entries = manifest["views"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{mpath}: missing or invalid field {exc}") from None
    if "num_views" in manifest and int(manifest["num_views"]) != len(entries):
        raise DatasetError(
            f"{mpath}: num_views={manifest['num_views']} but {len(entries)} views listed"
        )

    views = []
    for i, entry in enumerate(entries):
        vpath = path / entry["file"]
        if not vpath.is_file():
            raise DatasetError(f"{vpath}: file for view {i} not found")
        X = _read_matrix(vpath, f"view {i}")
        if X.shape != (int(entry["dim"]), n):
            raise DatasetError(
                f"{vpath}: view {i} is {X.shape[0]}x{X.shape[1]}, "
                f"manifest declares {entry['dim']}x{n}"
            )
        views.append(X)

    labels = None
    if manifest.get("labels"):
        lpath = path / manifest["labels"]
        labels = read_labels(lpath)
        if labels.shape[0] != n:
            raise DatasetError(f"{lpath}: {labels.shape[0]} labels, manifest declares {n} samples")
    k = manifest.get("num_clusters")
    return MultiViewDataset(
        name=str(manifest.get("name", path.name)),
        views=views,
        labels=labels,
        k=None if k is None else int(k),
    )


def normalize(dataset: MultiViewDataset) -> MultiViewDataset:
    """Scale every sample column of every view to unit l2 norm."""
    views = []
    for i, X in enumerate(dataset.views):
        norms = np.linalg.norm(X, axis=0)
        zero = np.flatnonzero(norms == 0)
        if zero.size:
            raise DatasetError(f"view {i}: sample column {zero[0]} is all zeros")
        views.append(X / norms)
    return MultiViewDataset(dataset.name, views, dataset.labels, dataset.k)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic union-of-subspaces dataset.

    ``dims`` defaults to ``2 * k * r`` for every view.
    """

    v: int
    n: int
    k: int
    r: int
    sigma: float = 0.0
    seed: int = 0
    dims: Optional[tuple[int, ...]] = field(default=None)

    def ambient_dims(self) -> tuple[int, ...]:
        if self.dims is None:
            return (2 * self.k * self.r,) * self.v
        return tuple(int(d) for d in self.dims)

    def validate(self) -> None:
        dims = self.ambient_dims()
        if self.v < 1 or self.k < 1 or self.r < 1:
            raise DatasetError("views, clusters and subspace dimension must be positive")
        if len(dims) != self.v:
            raise DatasetError(f"{len(dims)} ambient dims given for {self.v} views")
        if self.r > min(dims):
            raise DatasetError(f"subspace dimension {self.r} exceeds smallest ambient dim {min(dims)}")
        if self.k * self.r > min(dims):
            raise DatasetError(
                f"{self.k} independent {self.r}-dim subspaces do not fit in dimension {min(dims)}"
            )
        if self.n < self.k * (self.r + 1):
            raise DatasetError(f"n={self.n} too small: need at least k*(r+1)={self.k * (self.r + 1)}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DatasetError(f"noise level must be finite and >= 0, got {self.sigma}")


def _streams(spec: SynthSpec):
    label_ss, *view_ss = np.random.SeedSequence(spec.seed).spawn(1 + spec.v)
    return label_ss, [ss.spawn(spec.k + 1) for ss in view_ss]


def _orthonormal(ss: np.random.SeedSequence, d: int, r: int) -> np.ndarray:
    return np.linalg.qr(np.random.Generator(np.random.PCG64(ss)).standard_normal((d, r)))[0]


def subspace_bases(spec: SynthSpec) -> list[list[np.ndarray]]:
    """The ``d_i x r`` orthonormal basis of every (view, cluster) pair used by :func:`synth`."""
    spec.validate()
    _, per_view = _streams(spec)
    return [
        [_orthonormal(ss, d, spec.r) for ss in streams[:-1]]
        for d, streams in zip(spec.ambient_dims(), per_view)
    ]


def synth(spec: SynthSpec) -> MultiViewDataset:
    """Draw a seeded multi-view union-of-subspaces dataset.

    Random streams come from ``numpy.random.SeedSequence(seed)`` spawned into
    ``1 + v`` children: child 0 shuffles the balanced label vector, child
    ``1 + i`` belongs to view ``i`` and is spawned again into ``k + 1``
    streams, the first ``k`` drawing the orthonormal basis of each cluster's
    subspace and the last drawing coefficients and then noise.  All
    generators are PCG64.
    """
    spec.validate()
    label_ss, per_view = _streams(spec)
    labels = np.random.Generator(np.random.PCG64(label_ss)).permutation(
        np.arange(spec.n) % spec.k
    )
    views = []
    for d, bases, streams in zip(spec.ambient_dims(), subspace_bases(spec), per_view):
        rng = np.random.Generator(np.random.PCG64(streams[-1]))
        coeffs = rng.standard_normal((spec.r, spec.n))
        noise = rng.standard_normal((d, spec.n))
        X = np.empty((d, spec.n))
        for c in range(spec.k):
            idx = labels == c
            X[:, idx] = bases[c] @ coeffs[:, idx]
        X += spec.sigma * noise
        views.append(X)
    name = f"synth_v{spec.v}_n{spec.n}_k{spec.k}_r{spec.r}_s{spec.seed}"
    return MultiViewDataset(name, views, labels, spec.k)
