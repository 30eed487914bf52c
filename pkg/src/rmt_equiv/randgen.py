"""Seeded generation of random data matrices, regression targets, and CSV ingestion.

All generators are pure functions of their arguments (including the seed), so
identical calls produce bitwise-identical output. Parallel trial generation
should derive per-trial seeds as ``seed + trial_index``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetParseError, EmptyDatasetError


@dataclass
class DataMatrix:
    """Real p x n matrix whose columns are samples, plus generation metadata.

    meta carries a distribution tag, the seed, and a normalization tag
    ('none', 'unit-sphere' or 'global-spectral').
    """

    entries: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2:
            raise ValueError("entries must be a 2-d array")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("entries must all be finite")

    @property
    def p(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    def validate(self):
        """Check the invariants promised by the normalization tag."""
        tag = self.meta.get("normalization", "none")
        if tag == "unit-sphere":
            norms = np.linalg.norm(self.entries, axis=0)
            if np.abs(norms - 1.0).max() > 1e-12:
                raise ValueError("unit-sphere tag but column norms deviate from 1")
        elif tag == "global-spectral":
            if np.linalg.norm(self.entries, 2) > 1.0 + 1e-10:
                raise ValueError("global-spectral tag but spectral norm exceeds 1")
        return self


@dataclass
class GroundTruth:
    """Deterministic regression ground truth: coefficient vector and noise variance."""

    beta_star: np.ndarray
    sigma2: float

    def __post_init__(self):
        self.beta_star = np.asarray(self.beta_star, dtype=float)
        if self.beta_star.ndim != 1 or not np.all(np.isfinite(self.beta_star)):
            raise ValueError("beta_star must be a finite vector")
        if not (self.sigma2 >= 0):
            raise ValueError("sigma2 must be >= 0")


def _check_dims(rows, cols):
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {rows}x{cols}")


def gaussian_matrix(rows, cols, variance, seed) -> DataMatrix:
    """i.i.d. zero-mean Gaussian matrix with the given entry variance."""
    _check_dims(rows, cols)
    if not variance > 0:
        raise ValueError("variance must be positive")
    rng = np.random.default_rng(seed)
    entries = rng.normal(0.0, np.sqrt(variance), size=(rows, cols))
    return DataMatrix(entries, {"distribution": "gaussian", "seed": seed,
                                "normalization": "none", "variance": variance})


def rademacher_matrix(rows, cols, seed) -> DataMatrix:
    """i.i.d. +-1 matrix (zero mean, unit variance)."""
    _check_dims(rows, cols)
    rng = np.random.default_rng(seed)
    entries = rng.integers(0, 2, size=(rows, cols)).astype(float) * 2.0 - 1.0
    return DataMatrix(entries, {"distribution": "rademacher", "seed": seed,
                                "normalization": "none"})


def sphere_dataset(p, n, seed) -> DataMatrix:
    """n columns drawn i.i.d. uniformly from the unit sphere in R^p.

    Sampling is a standard Gaussian draw followed by column normalization,
    which is exact for the uniform spherical law.
    """
    if p < 2:
        raise ValueError("sphere dimension p must be >= 2")
    if n < 1:
        raise ValueError("sample count n must be >= 1")
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((p, n))
    entries /= np.linalg.norm(entries, axis=0)
    return DataMatrix(entries, {"distribution": "sphere", "seed": seed,
                                "normalization": "unit-sphere"})


def linear_targets(X: DataMatrix, truth: GroundTruth, seed) -> np.ndarray:
    """Noisy linear targets y_i = beta_*^T x_i + eps_i, eps_i ~ N(0, sigma2).

    The noise stream is drawn from its own generator, independent of whatever
    generator produced X.
    """
    if truth.beta_star.shape[0] != X.p:
        raise ValueError(
            f"beta_star has length {truth.beta_star.shape[0]}, expected {X.p}"
        )
    rng = np.random.default_rng(seed)
    y = X.entries.T @ truth.beta_star
    if truth.sigma2 > 0:
        y = y + rng.normal(0.0, np.sqrt(truth.sigma2), size=X.n)
    return y


def _apply_normalization(entries, normalization):
    if normalization == "unit-sphere":
        norms = np.linalg.norm(entries, axis=0)
        if np.any(norms == 0):
            raise ValueError("cannot sphere-normalize a zero column")
        return entries / norms
    if normalization == "global-spectral":
        s = np.linalg.norm(entries, 2)
        return entries / s if s > 0 else entries
    if normalization in (None, "none"):
        return entries
    raise ValueError(f"unknown normalization tag {normalization!r}")


def ingest_dataset(path, label_filter, normalization="none", header=False):
    """Read a label-first CSV (``label,f1,...,fp`` per line) into a DataMatrix.

    Keeps only rows whose label is in ``label_filter`` and maps the (at most
    two) retained labels to -1/+1 regression targets, smaller label first.
    Returns (DataMatrix, targets).
    """
    labels_keep = sorted(set(label_filter))
    if len(labels_keep) > 2:
        raise ValueError("at most two labels are supported for +-1 targets")
    cols = []
    labels = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for idx, line in enumerate(fh, start=1):
            if header and idx == 1:
                continue
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                lab = float(parts[0])
                feats = np.array([float(v) for v in parts[1:]], dtype=float)
            except ValueError as exc:
                raise DatasetParseError(f"row {idx}: {exc}", row_index=idx) from exc
            if feats.size == 0:
                raise DatasetParseError(f"row {idx}: no features", row_index=idx)
            if width is None:
                width = feats.size
            elif feats.size != width:
                raise DatasetParseError(
                    f"row {idx}: expected {width} features, got {feats.size}",
                    row_index=idx,
                )
            if lab in labels_keep:
                cols.append(feats)
                labels.append(lab)
    if not cols:
        raise EmptyDatasetError(f"no rows with labels {labels_keep} in {path}")
    entries = np.stack(cols, axis=1)
    entries = _apply_normalization(entries, normalization)
    if len(labels_keep) == 2:
        lo = labels_keep[0]
        y = np.array([-1.0 if lab == lo else 1.0 for lab in labels])
    else:
        y = np.ones(len(labels))
    X = DataMatrix(entries, {"distribution": "file", "seed": None,
                             "normalization": normalization, "path": str(path)})
    return X.validate(), y
