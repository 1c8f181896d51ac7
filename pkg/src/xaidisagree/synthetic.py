"""Seeded synthetic datasets used by the examples, tests and acceptance runs."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ._random import substream
from .data import TabularDataset

BUILTIN_PREFIX = "builtin:"


def correlated_normals(n: int, d: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` draws of ``d`` standard normals with pairwise correlation ``rho``."""
    cov = np.full((d, d), rho)
    np.fill_diagonal(cov, 1.0)
    return rng.multivariate_normal(np.zeros(d), cov, size=n, method="cholesky")


def logistic_dataset(
    coefficients,
    n: int = 5000,
    intercept: float = -1.0,
    rho: float = 0.0,
    seed: int = 0,
    names=None,
) -> TabularDataset:
    """Standard-normal features (common correlation ``rho``) with
    ``y ~ Bernoulli(sigmoid(intercept + X @ coefficients))``."""
    coefficients = np.asarray(coefficients, dtype=float)
    d = coefficients.size
    rng = substream(seed, "logistic-dataset")
    X = correlated_normals(n, d, rho, rng) if rho else rng.standard_normal((n, d))
    y = (rng.random(n) < expit(intercept + X @ coefficients)).astype(int)
    names = names or tuple(f"x{i}" for i in range(d))
    return TabularDataset(X, tuple(names), y)


def synthetic_dataset(n: int = 5000, d: int = 10, seed: int = 0) -> TabularDataset:
    """Mixed-structure benchmark data.

    Features 0-2 are independent signals, 3 is a rho~0.9 partner of 0, 4 and
    5 form an anti-correlated pair, 6 carries a threshold effect and the
    remaining features are noise. The target is drawn from a logistic link.
    """
    if d < 7:
        raise ValueError("synthetic_dataset needs d >= 7")
    rng = substream(seed, "synthetic-dataset")
    X = rng.standard_normal((n, d))
    X[:, 3] = 0.9 * X[:, 0] + np.sqrt(1 - 0.81) * X[:, 3]
    X[:, 5] = -0.7 * X[:, 4] + np.sqrt(1 - 0.49) * X[:, 5]
    logit = (
        -1.2
        + 1.4 * X[:, 0]
        - 1.0 * X[:, 1]
        + 0.6 * X[:, 2]
        + 0.4 * X[:, 3]
        + 0.8 * X[:, 4]
        + 0.5 * X[:, 5]
        + 1.2 * (X[:, 6] > 0.5)
    )
    y = (rng.random(n) < expit(logit)).astype(int)
    return TabularDataset(X, tuple(f"f{i}" for i in range(d)), y)


def resolve_builtin(spec: str) -> TabularDataset:
    """``builtin:synthetic`` or ``builtin:synthetic?n=2000&d=8&seed=3``."""
    name = spec[len(BUILTIN_PREFIX) :]
    base, _, query = name.partition("?")
    if base != "synthetic":
        raise ValueError(f"unknown builtin dataset {base!r}")
    params = {}
    for part in filter(None, query.split("&")):
        key, _, value = part.partition("=")
        if key not in ("n", "d", "seed"):
            raise ValueError(f"unknown builtin dataset parameter {key!r}")
        params[key] = int(value)
    return synthetic_dataset(**params)
