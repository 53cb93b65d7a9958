"""Classical search-space pruning oracles (conditional-independence and
mutual-information based).  They are built from data once; their output is a
0/1 plausibility per pair and nothing else."""
from __future__ import annotations

import numpy as np

from ..constraints import PairPlausibility
from ..data import CategoricalDataset
from ..independence import g2_test, mutual_information
from .base import SuggestionOracle


class _PairMaskOracle(SuggestionOracle):
    def __init__(self, ds: CategoricalDataset):
        self.names = ds.names
        self._keep = np.ones((ds.n_vars, ds.n_vars), dtype=bool)

    def pair_plausibilities(self, context):
        out = []
        for i, a in enumerate(self.names):
            for j, b in enumerate(self.names):
                if i != j:
                    out.append(PairPlausibility(a, b, 1.0 if self._keep[i, j] else 0.0))
        return out


class CIInitOracle(_PairMaskOracle):
    """Pairs judged marginally independent by the G2 test get plausibility 0."""

    name = "ci"

    def __init__(self, ds: CategoricalDataset, alpha: float = 0.05):
        super().__init__(ds)
        self.alpha = alpha
        for i in range(ds.n_vars):
            for j in range(i + 1, ds.n_vars):
                indep = g2_test(ds, i, j, (), alpha).independent
                self._keep[i, j] = self._keep[j, i] = not indep

    def identity(self):
        return f"ci(alpha={self.alpha})"


class MIInitOracle(_PairMaskOracle):
    """Pairs whose mutual information falls below the given sample quantile
    of all pairwise values get plausibility 0."""

    name = "mi"

    def __init__(self, ds: CategoricalDataset, quantile: float = 0.5):
        super().__init__(ds)
        if not 0.0 <= quantile <= 1.0:
            raise ValueError("quantile must lie in [0, 1]")
        self.quantile = quantile
        pairs = [(i, j) for i in range(ds.n_vars) for j in range(i + 1, ds.n_vars)]
        if not pairs:
            return
        mi = np.array([mutual_information(ds, i, j) for i, j in pairs])
        threshold = np.quantile(mi, quantile)
        for (i, j), v in zip(pairs, mi):
            self._keep[i, j] = self._keep[j, i] = v >= threshold

    def identity(self):
        return f"mi(quantile={self.quantile})"
