"""Synthetic mixture-of-regressions data and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConstantColumn, ParseError
from .model import Dataset, MixtureParams, Transform
from .rng import stream

STANDARD_NORMAL = "standard_normal"


@dataclass(frozen=True)
class SimSpec:
    n: int
    true_params: MixtureParams
    seed: int = 0
    covariates: Optional[np.ndarray] = None  # None: iid standard normal

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.covariates is not None:
            X = np.asarray(self.covariates, dtype=float)
            if X.shape != (self.n, self.true_params.P):
                raise ValueError(f"supplied covariates have shape {X.shape}, "
                                 f"expected {(self.n, self.true_params.P)}")

    @property
    def K(self):
        return self.true_params.K

    @property
    def P(self):
        return self.true_params.P


def simulate(spec: SimSpec):
    """Draw (Dataset, labels); labels are 0-based component indices."""
    rng = stream(spec.seed, "simulate")
    theta = spec.true_params
    labels = rng.choice(theta.K, size=spec.n, p=theta.pi)
    if spec.covariates is None:
        X = rng.standard_normal((spec.n, theta.P))
    else:
        X = np.asarray(spec.covariates, dtype=float)
    noise = rng.standard_normal(spec.n) * math.sqrt(theta.sigma2)
    mean = np.einsum("ij,ij->i", X, theta.beta[labels])
    return Dataset(y=mean + noise, X=X), labels


def baseball_like(seed: int = 0, n: int = 337, P: int = 16):
    """Two-regime regression resembling a salary-on-performance study.

    Covariates are correlated (a shared latent factor) and standardized;
    one regime depends on a handful of covariates, the other on a
    disjoint handful. Returns ``(Dataset, truth, labels)``.
    """
    rng = stream(seed, "simulate", 7)
    latent = rng.standard_normal((n, 1))
    X = 0.6 * latent + 0.8 * rng.standard_normal((n, P))
    X = (X - X.mean(axis=0)) / X.std(axis=0, ddof=1)
    beta = np.zeros((2, P))
    beta[0, [0, 2, 5, 7]] = [0.45, 0.25, -0.2, 0.15]
    beta[1, [1, 3, 8, 12]] = [-0.35, 0.3, 0.2, -0.15]
    truth = MixtureParams(pi=[0.35, 0.65], beta=beta, sigma2=0.25)
    data, labels = simulate(SimSpec(n=n, true_params=truth, seed=seed, covariates=X))
    return data, truth, labels


def standardize(X):
    """Column-wise (x - mean) / sd with the sample (ddof=1) standard deviation."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    bad = np.flatnonzero(~(sd > 0))
    if bad.size:
        raise ConstantColumn(f"column {int(bad[0])} has zero spread")
    return (X - mean) / sd, Transform(mean=mean, scale=sd)


def load_csv(path, response_column: str = "y", standardize_covariates: bool = True) -> Dataset:
    """Read a header-first numeric CSV; the response is picked by name.

    The remaining columns become covariates in header order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if response_column not in header:
        raise ParseError(f"{path}: response column {response_column!r} not in header {header}")
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: row {i}, column {header[j]!r}: "
                                 f"non-numeric value {cell!r}") from None
    if values.shape[0] == 0:
        raise ParseError(f"{path}: no data rows")
    yj = header.index(response_column)
    cols = tuple(h for j, h in enumerate(header) if j != yj)
    X = np.delete(values, yj, axis=1)
    if X.shape[1] == 0:
        raise ParseError(f"{path}: no covariate columns")
    transform = None
    if standardize_covariates:
        X, transform = standardize(X)
    return Dataset(y=values[:, yj], X=X, columns=cols, transform=transform)


def write_csv(path, data: Dataset, response_column: str = "y"):
    cols = data.columns or tuple(f"x{j + 1}" for j in range(data.P))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(cols) + [response_column])
        for x, y in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])
