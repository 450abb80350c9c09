"""Dataset construction: synthetic generators, libsvm ingestion, splits.

All datasets are immutable after construction (the underlying numpy arrays
are marked read-only) and every randomized constructor is a pure function of
its seed, so re-running with the same arguments is bit-identical.

Binary labels are normalized to {-1, +1}: the two distinct raw labels are
sorted and the smaller one maps to -1, the larger to +1 (labels that are
already {-1, +1} are therefore preserved).  Multiclass labels are 0-based
class indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, LibsvmParseError

REGRESSION = "regression"
BINARY = "binary"
MULTICLASS = "multiclass"


@dataclass(frozen=True)
class Instance:
    """A single (features, label) record."""

    features: np.ndarray
    label: float


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of instances stored as dense arrays.

    Attributes:
        X: (n, d) feature matrix.
        y: (n,) label vector; {-1,+1} for binary, class indices for
            multiclass, arbitrary reals for regression.
        task: one of "regression", "binary", "multiclass".
        k: number of classes (multiclass only).
    """

    X: np.ndarray
    y: np.ndarray
    task: str
    k: int | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        if X.ndim != 2:
            raise ValueError(f"X must be 2-d, got shape {X.shape}")
        if X.shape[0] == 0:
            raise ValueError("dataset must contain at least one instance")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y shape {y.shape} incompatible with X shape {X.shape}")
        if self.task not in (REGRESSION, BINARY, MULTICLASS):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == BINARY and not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("binary labels must be in {-1, +1}")
        if self.task == MULTICLASS:
            if self.k is None or self.k < 2:
                raise ValueError("multiclass dataset requires k >= 2")
            if not np.all((y == np.floor(y)) & (y >= 0) & (y < self.k)):
                raise DataError(f"multiclass labels must be integers in [0, {self.k})")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def instance(self, i: int) -> Instance:
        return Instance(features=self.X[i], label=float(self.y[i]))

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(self.X[indices].copy(), self.y[indices].copy(), self.task, self.k)


def paper_style_feature_scales(d: int, smallest: float = 0.04) -> np.ndarray:
    """Geometrically decaying per-feature standard deviations 1 -> `smallest`.

    Used by the paper-style regression preset: on this anisotropic Gaussian
    the regularized least-squares condition number lands near 116 at
    n=20000 training instances with lambda = 1/sqrt(n).
    """
    if d < 2:
        return np.ones(d)
    return smallest ** (np.arange(d) / (d - 1))


def generate_gaussian_regression(
    n: int,
    d: int,
    noise_sd: float = 0.1,
    seed: int = 0,
    feature_scales: np.ndarray | None = None,
) -> tuple[Dataset, np.ndarray]:
    """Synthetic linear-regression data with Gaussian features and noise.

    Draw order from one seeded stream: true weights, features, noise, so
    the result is bit-reproducible.  Features are i.i.d. standard normal
    unless `feature_scales` gives per-coordinate standard deviations.

    Returns (dataset, true_weights).
    """
    if n < 2 or d < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    rng = np.random.default_rng(seed)
    w_star = rng.standard_normal(d)
    X = rng.standard_normal((n, d))
    if feature_scales is not None:
        scales = np.asarray(feature_scales, dtype=np.float64)
        if scales.shape != (d,):
            raise ValueError(f"feature_scales must have shape ({d},)")
        X = X * scales
    y = X @ w_star
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(n)
    return Dataset(X, y, REGRESSION), w_star


def generate_gaussian_binary(
    n: int,
    d: int,
    seed: int = 0,
    flip_prob: float = 0.05,
    scale: float = 1.0,
) -> tuple[Dataset, np.ndarray]:
    """Synthetic binary-classification data: Gaussian features, linear teacher.

    Labels are sign(x . w) with independent label flips at `flip_prob`.
    Returns (dataset, teacher_weights).
    """
    if n < 2 or d < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(d)
    X = scale * rng.standard_normal((n, d))
    y = np.where(X @ w >= 0, 1.0, -1.0)
    flips = rng.random(n) < flip_prob
    y[flips] = -y[flips]
    return Dataset(X, y, BINARY), w


def generate_gaussian_multiclass(
    n: int,
    d: int,
    k: int = 10,
    seed: int = 0,
    label_noise_sd: float = 0.5,
) -> tuple[Dataset, np.ndarray]:
    """Synthetic multiclass data: Gaussian features, noisy argmax linear teacher.

    Labels are argmax(W x + noise) over k random linear scorers.  Stands in
    for an image-classification set at desk scale.  Returns (dataset, W).
    """
    if n < 2 or d < 1 or k < 2:
        raise ValueError(f"need n >= 2, d >= 1, k >= 2; got n={n}, d={d}, k={k}")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((k, d))
    X = rng.standard_normal((n, d))
    scores = X @ W.T + label_noise_sd * rng.standard_normal((n, k))
    y = np.argmax(scores, axis=1).astype(np.float64)
    return Dataset(X, y, MULTICLASS, k=k), W


def _normalize_binary_labels(raw: np.ndarray) -> np.ndarray:
    distinct = np.unique(raw)
    if distinct.size == 1:
        raise DataError(f"binary dataset has a single label value {distinct[0]}")
    if distinct.size != 2:
        raise DataError(f"binary dataset has {distinct.size} distinct labels: {distinct}")
    lo, hi = distinct
    return np.where(raw == lo, -1.0, 1.0)


def parse_libsvm(path) -> Dataset:
    """Read a libsvm-format text file as a binary-classification dataset.

    Format: `label idx:val idx:val ...` with 1-based ascending indices;
    dimension is the largest index seen, missing indices are zero.  The two
    distinct raw labels are mapped to {-1, +1} by sort order.
    """
    labels: list[float] = []
    rows: list[list[tuple[int, float]]] = []
    max_index = 0
    with open(path, "r", encoding="ascii") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise LibsvmParseError(path, line_number, f"bad label {parts[0]!r}")
            entries = []
            prev_index = 0
            for token in parts[1:]:
                try:
                    idx_str, val_str = token.split(":", 1)
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError:
                    raise LibsvmParseError(path, line_number, f"bad feature token {token!r}")
                if idx < 1:
                    raise LibsvmParseError(path, line_number, f"index {idx} is not 1-based")
                if idx <= prev_index:
                    raise LibsvmParseError(
                        path, line_number, f"indices must be strictly ascending, got {idx} after {prev_index}"
                    )
                prev_index = idx
                entries.append((idx, val))
            max_index = max(max_index, prev_index)
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise LibsvmParseError(path, 0, "file contains no instances")
    X = np.zeros((len(rows), max_index))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            X[i, idx - 1] = val
    y = _normalize_binary_labels(np.asarray(labels))
    return Dataset(X, y, BINARY)


def serialize_libsvm(dataset: Dataset, path) -> None:
    """Write a dataset in libsvm text format (1-based indices, zeros omitted)."""
    with open(path, "w", encoding="ascii") as fh:
        for i in range(dataset.n):
            row = dataset.X[i]
            tokens = [_format_number(dataset.y[i])]
            for j in np.nonzero(row)[0]:
                tokens.append(f"{j + 1}:{_format_number(row[j])}")
            fh.write(" ".join(tokens) + "\n")


def _format_number(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return repr(float(v))


def bundled_dataset_path(name: str = "logistic_sample") -> str:
    """Filesystem path of a dataset shipped inside the package."""
    from importlib import resources

    path = resources.files("rermlab") / "datasets" / f"{name}.libsvm"
    if not path.is_file():
        raise DataError(f"no bundled dataset named {name!r}")
    return str(path)


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint train/test partition by seeded shuffle.

    Uses numpy's PCG64 generator (`default_rng(seed)`) to permute indices;
    the first floor(train_fraction * n) shuffled indices form the train set.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(np.floor(train_fraction * dataset.n))
    if n_train < 1 or dataset.n - n_train < 1:
        raise ValueError(
            f"split of n={dataset.n} at fraction {train_fraction} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(dataset.n)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


def replace_instance(dataset: Dataset, j: int, z_new: Instance) -> Dataset:
    """A copy of the dataset with position j replaced; the input is unchanged."""
    if not 0 <= j < dataset.n:
        raise ValueError(f"index {j} out of range for n={dataset.n}")
    features = np.asarray(z_new.features, dtype=np.float64)
    if features.shape != (dataset.d,):
        raise ValueError(f"replacement features have shape {features.shape}, expected ({dataset.d},)")
    X = dataset.X.copy()
    y = dataset.y.copy()
    X[j] = features
    y[j] = z_new.label
    return Dataset(X, y, dataset.task, dataset.k)


def remove_instance(dataset: Dataset, j: int) -> Dataset:
    """A copy of the dataset with position j removed (the leave-one-out set)."""
    if not 0 <= j < dataset.n:
        raise ValueError(f"index {j} out of range for n={dataset.n}")
    if dataset.n < 2:
        raise ValueError("cannot remove the only instance")
    keep = np.concatenate([np.arange(j), np.arange(j + 1, dataset.n)])
    return dataset.subset(keep)
