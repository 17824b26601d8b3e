"""Synthetic mixed-linear-regression data generation."""

import numpy as np

from . import noise
from .model import Dataset, MlrParams, NoiseModel
from .rng import DOMAIN_DATA, stream


def generate(k: int, d: int, n: int, nm: NoiseModel, seed: int) -> Dataset:
    """Draw an n-sample dataset from a K-component model.

    True coefficients have i.i.d. standard normal entries, component
    labels are uniform, covariate rows are i.i.d. standard normal and
    y_i is the chosen component's fit plus one noise draw.

    The draw order from the seeded stream is fixed and documented:
    coefficients (d x k), then labels, then covariates, then noise.
    The result is therefore a pure function of (k, d, n, nm, seed), and
    the true coefficients depend on (k, d, seed) only.
    """
    k, d, n = int(k), int(d), int(n)
    if k < 1 or d < 1 or n < 1:
        raise ValueError("k, d and n must all be >= 1")
    gen = stream(seed, DOMAIN_DATA)
    beta = gen.standard_normal((d, k))
    labels = gen.integers(0, k, size=n)
    x = gen.standard_normal((n, d))
    eps = noise.sample(nm, gen, size=n)
    y = np.einsum("nd,dn->n", x, beta[:, labels]) + eps
    return Dataset(x=x, y=y, labels=labels, true_params=MlrParams(beta))
