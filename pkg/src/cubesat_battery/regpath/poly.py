"""Polynomial feature expansion in a canonical graded order."""
from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from ..errors import ShapeError
from ..kernels import poly_columns


@dataclass(frozen=True)
class PolySpec:
    """All monomials of total degree ``<= degree`` in ``n_features`` inputs.

    Monomials are ordered by degree, bias first; within a degree the exponent
    tuples appear in descending lexicographic order, e.g. for two inputs and
    degree 2: ``1, a, b, a^2, ab, b^2``.
    """
    n_features: int
    degree: int

    def __post_init__(self):
        if self.n_features < 1 or self.degree < 0:
            raise ShapeError("need n_features >= 1 and degree >= 0")
        combos = [c for k in range(self.degree + 1)
                  for c in combinations_with_replacement(range(self.n_features), k)]
        where = {c: j for j, c in enumerate(combos)}
        exps = tuple(tuple(c.count(f) for f in range(self.n_features)) for c in combos)
        # every monomial is its parent (last factor removed) times one input
        parents = np.array([where[c[:-1]] if c else 0 for c in combos], dtype=np.intp)
        features = np.array([c[-1] if c else 0 for c in combos], dtype=np.intp)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_features", features)

    def __len__(self):
        return len(self.exponents)

    @property
    def expected_length(self):
        return comb(self.n_features + self.degree, self.degree)


def poly_expand(spec, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.n_features:
        raise ShapeError(f"expected {spec.n_features} columns, got shape {X.shape}")
    return poly_columns(X, spec._parents, spec._features)
