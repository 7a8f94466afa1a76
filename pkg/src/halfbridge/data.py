"""Dataset container, standardization and CSV input."""

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

__all__ = ["Dataset", "Standardizer", "standardize", "read_dataset_csv", "write_dataset_csv"]


@dataclass(eq=False)
class Dataset:
    '''
    Design matrix and response for the linear model ``y = X beta + sigma eps``.

    Arguments
    ---------
    X : ndarray of shape (n, p)
    y : ndarray of shape (n,)
    standardized : bool
        Whether columns are centered with ``||X_j||^2 = n`` and ``y`` centered.
    trials : ndarray, optional
        Binomial trial counts, used by the logistic models.
    '''

    X: np.ndarray
    y: np.ndarray
    standardized: bool = False
    trials: np.ndarray = None
    names: list = field(default=None)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be n x p with n matching len(y)")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains NaN or Inf")
        if self.names is None:
            self.names = [f"x{j + 1}" for j in range(self.X.shape[1])]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @cached_property
    def col_sq_norms(self):
        return np.einsum("ij,ij->j", self.X, self.X)

    @cached_property
    def XtX(self):
        return self.X.T @ self.X

    @cached_property
    def Xty(self):
        return self.X.T @ self.y


@dataclass
class Standardizer:
    """Column centering and scaling learned on one sample, applicable to others."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    @classmethod
    def fit(cls, X, y):
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        mean = X.mean(axis=0)
        # exact constants can pick up a rounding-level spread from the mean
        const = np.ptp(X, axis=0) == 0
        mean[const] = X[0, const]
        Xc = X - mean
        norms = np.sqrt(np.einsum("ij,ij->j", Xc, Xc) / n)
        tiny = 1e-12 * np.maximum(1.0, np.max(np.abs(X), axis=0))
        norms[const | (norms <= tiny)] = 1.0
        return cls(mean, norms, float(np.mean(y)))

    def transform(self, X, y=None):
        Xs = (np.asarray(X, dtype=float) - self.x_mean) / self.x_scale
        if y is None:
            return Xs
        return Xs, np.asarray(y, dtype=float) - self.y_mean


def standardize(X, y, center_y=True):
    '''
    Center the columns of ``X`` and scale them to ``||X_j||^2 = n``; center ``y``.

    Constant columns are centered to zero and left unscaled.
    '''
    st = Standardizer.fit(X, y)
    Xs, yc = st.transform(X, y)
    if not center_y:
        yc = np.asarray(y, dtype=float)
    return Dataset(Xs, yc, standardized=True)


def read_dataset_csv(path):
    '''
    Read a headered CSV with a ``y`` column and optional ``trials`` column.

    All other columns are features, in file order.  Malformed rows raise
    :class:`ConfigurationError` with the 1-based line number.
    '''
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}:1: empty file") from None
        header = [h.strip() for h in header]
        if "y" not in header:
            raise ConfigurationError(f"{path}:1: header has no 'y' column")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ConfigurationError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ConfigurationError(f"{path}:2: no data rows")
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(arr), axis=1))[0]) + 2
        raise ConfigurationError(f"{path}:{bad}: non-finite value")
    yi = header.index("y")
    ti = header.index("trials") if "trials" in header else None
    feat = [j for j in range(len(header)) if j not in (yi, ti)]
    trials = arr[:, ti] if ti is not None else None
    return Dataset(arr[:, feat], arr[:, yi], trials=trials, names=[header[j] for j in feat])


def write_dataset_csv(path, data):
    """Write features, then ``y`` (and ``trials`` if present), with a header."""
    cols = [data.X, data.y[:, None]]
    header = list(data.names) + ["y"]
    if data.trials is not None:
        cols.append(np.asarray(data.trials, dtype=float)[:, None])
        header.append("trials")
    arr = np.hstack(cols)
    np.savetxt(path, arr, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
