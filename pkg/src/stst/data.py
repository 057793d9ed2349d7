"""Dataset ingestion, synthetic generation, and deterministic splits.

The on-disk format is the usual sparse labeled text: one example per line,

    <label> <index>:<value> <index>:<value> ...

with 1-based, strictly ascending indices. Labels 0 and -1 map to -1 and
positive labels to +1; anything else maps by sign with a warning. Values are
written back with repr(), the shortest decimal that round-trips a double, so
parse(serialize(d)) reproduces d exactly.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import EmptyDatasetError, ParameterError, ParseError

__all__ = [
    "Dataset",
    "SyntheticSpec",
    "parse_sparse",
    "serialize_sparse",
    "generate_synthetic",
    "split",
]


@dataclass(eq=False)
class Dataset:
    """Labeled examples: a dense or CSR feature matrix and +/-1 labels."""

    X: "np.ndarray | sparse.csr_matrix"
    y: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int64)
        if not sparse.issparse(self.X):
            self.X = np.asarray(self.X, dtype=np.float64)
            if self.X.ndim != 2:
                raise ParameterError("feature matrix must be 2-d")
        if self.X.shape[0] == 0:
            raise EmptyDatasetError(f"dataset {self.name!r} has no examples")
        if self.X.shape[0] != self.y.shape[0]:
            raise ParameterError(
                f"feature rows ({self.X.shape[0]}) and labels ({self.y.shape[0]}) disagree"
            )
        bad = ~np.isin(self.y, (1, -1))
        if bad.any():
            raise ParameterError(f"labels must be +1 or -1; offending values {np.unique(self.y[bad])}")

    @property
    def n_examples(self) -> int:
        return int(self.X.shape[0])

    @property
    def dim(self) -> int:
        return int(self.X.shape[1])

    def row(self, i: int) -> np.ndarray:
        """Dense 1-d view of example i."""
        if sparse.issparse(self.X):
            return np.asarray(self.X[i].todense(), dtype=np.float64).ravel()
        return self.X[i]

    def dense(self) -> np.ndarray:
        """Whole feature matrix as a dense array."""
        if sparse.issparse(self.X):
            return np.asarray(self.X.todense(), dtype=np.float64)
        return self.X

    def dense_rows(self, idx) -> np.ndarray:
        if sparse.issparse(self.X):
            return np.asarray(self.X[idx].todense(), dtype=np.float64)
        return self.X[idx]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(X=self.X[idx], y=self.y[idx], name=self.name if name is None else name)


def _map_label(token: str, line_no: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad label {token!r}", line_no) from None
    if value == 1.0:
        return 1
    if value == -1.0 or value == 0.0:
        return -1
    mapped = 1 if value > 0 else -1
    warnings.warn(f"line {line_no}: label {token!r} mapped by sign to {mapped:+d}", stacklevel=3)
    return mapped


def parse_sparse(source, *, dim: int | None = None, name: str = "", strict_order: bool = True) -> Dataset:
    """Parse the sparse labeled text format into a Dataset.

    source may be a path or an open text stream. dim overrides the inferred
    dimension (the largest index seen); an override smaller than an observed
    index is an error. With strict_order=False, out-of-order indices are
    accepted with a warning and reordered; duplicates are always rejected.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            return parse_sparse(handle, dim=dim, name=name or str(source), strict_order=strict_order)

    labels: list[int] = []
    data: list[float] = []
    col: list[int] = []
    indptr: list[int] = [0]
    max_index = 0

    for line_no, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped:
            raise ParseError("blank line", line_no)
        tokens = stripped.split()
        labels.append(_map_label(tokens[0], line_no))
        prev = 0
        row_cols: list[int] = []
        row_vals: list[float] = []
        for token in tokens[1:]:
            head, sep, tail = token.partition(":")
            if not sep or not head or not tail:
                raise ParseError(f"expected index:value, got {token!r}", line_no)
            try:
                index = int(head)
            except ValueError:
                raise ParseError(f"bad feature index {head!r}", line_no) from None
            try:
                value = float(tail)
            except ValueError:
                raise ParseError(f"bad feature value {tail!r}", line_no) from None
            if index < 1:
                raise ParseError(f"feature indices are 1-based, got {index}", line_no)
            if index <= prev:
                if strict_order or index == prev:
                    raise ParseError(
                        f"feature index {index} not ascending (previous {prev})", line_no
                    )
                warnings.warn(f"line {line_no}: out-of-order index {index} accepted", stacklevel=2)
            prev = max(prev, index)
            row_cols.append(index - 1)
            row_vals.append(value)
            max_index = max(max_index, index)
        if not strict_order and row_cols:
            order = np.argsort(row_cols, kind="stable")
            if np.unique(np.asarray(row_cols)[order]).size != len(row_cols):
                raise ParseError("duplicate feature index", line_no)
            row_cols = list(np.asarray(row_cols)[order])
            row_vals = list(np.asarray(row_vals)[order])
        col.extend(row_cols)
        data.extend(row_vals)
        indptr.append(len(col))

    if not labels:
        raise EmptyDatasetError("input contained no examples")
    if dim is None:
        dim = max_index
    elif dim < max_index:
        raise ParseError(f"declared dim {dim} smaller than largest index {max_index}")
    if dim < 1:
        raise ParseError("cannot infer a positive dimension from featureless input; pass dim")
    X = sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(col, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), dim),
    )
    return Dataset(X=X, y=np.asarray(labels, dtype=np.int64), name=name)


def serialize_sparse(dataset: Dataset, target) -> None:
    """Write a Dataset in the sparse labeled text format.

    Only nonzero entries are emitted, 1-based and ascending, with repr()
    float formatting (shortest round-trip decimals).
    """
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="\n") as handle:
            serialize_sparse(dataset, handle)
            return
    csr = dataset.X.tocsr() if sparse.issparse(dataset.X) else sparse.csr_matrix(dataset.X)
    for i in range(dataset.n_examples):
        start, end = csr.indptr[i], csr.indptr[i + 1]
        parts = [f"{int(dataset.y[i]):+d}"]
        for j in range(start, end):
            value = csr.data[j]
            if value == 0.0:
                continue
            parts.append(f"{csr.indices[j] + 1}:{float(value)!r}")
        target.write(" ".join(parts) + "\n")


@dataclass(frozen=True)
class SyntheticSpec:
    """Two isotropic Gaussian classes separated along a random direction."""

    dim: int
    n_pos: int
    n_neg: int
    mean_separation: float
    noise_std: float
    seed: int

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if self.n_pos < 1 or self.n_neg < 1:
            raise ParameterError("class counts must be >= 1")
        if not self.noise_std > 0.0:
            raise ParameterError(f"noise_std must be positive, got {self.noise_std!r}")
        if self.mean_separation < 0.0:
            raise ParameterError(f"mean_separation must be >= 0, got {self.mean_separation!r}")


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Class means sit at +/-(mean_separation/2) along a seeded unit direction."""
    rng = np.random.default_rng(spec.seed)
    direction = rng.standard_normal(spec.dim)
    direction /= np.linalg.norm(direction)
    offset = 0.5 * spec.mean_separation * direction
    X_pos = offset + spec.noise_std * rng.standard_normal((spec.n_pos, spec.dim))
    X_neg = -offset + spec.noise_std * rng.standard_normal((spec.n_neg, spec.dim))
    X = np.vstack([X_pos, X_neg])
    y = np.concatenate([np.ones(spec.n_pos, dtype=np.int64), -np.ones(spec.n_neg, dtype=np.int64)])
    name = (
        f"synthetic(dim={spec.dim},pos={spec.n_pos},neg={spec.n_neg},"
        f"sep={spec.mean_separation},std={spec.noise_std},seed={spec.seed})"
    )
    return Dataset(X=X, y=y, name=name)


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded uniform split into disjoint, exhaustive (train, test) parts."""
    if not 0.0 < test_fraction < 1.0:
        raise ParameterError(f"test_fraction must be in (0, 1), got {test_fraction!r}")
    m = dataset.n_examples
    n_test = round(m * test_fraction)
    if n_test < 1 or n_test > m - 1:
        raise ParameterError(
            f"test_fraction {test_fraction!r} leaves an empty side for {m} examples"
        )
    perm = np.random.default_rng(seed).permutation(m)
    test = dataset.subset(perm[:n_test], name=f"{dataset.name}-test")
    train = dataset.subset(perm[n_test:], name=f"{dataset.name}-train")
    return train, test
