"""Forward sampling from Bayesian networks and the three-variable Gaussian
benchmarks (chain, fork, collider), with significant-digit rounding and
equal-frequency discretization.

All randomness comes from numpy's Philox4x32-10 counter-based generator,
keyed through ``numpy.random.SeedSequence``; streams are therefore identical
across platforms for a given seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

import numpy as np

from .data import BayesNet, CategoricalDataset, DataError
from .graph import topological_order


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for ``seed`` and an optional integer stream path."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def forward_sample(net: BayesNet, n: int, seed: int) -> CategoricalDataset:
    """Draw ``n`` complete records by ancestral sampling.

    Row ``i`` consumes the ``i``-th row of a ``(n, num_nodes)`` uniform matrix,
    so each row has its own slice of the stream and the output does not depend
    on how the work might be split.
    """
    if n < 1:
        raise ValueError("sample count must be >= 1")
    g = net.graph
    u = make_rng(seed).random((n, g.n))
    out = np.zeros((n, g.n), dtype=np.int64)
    for v in topological_order(g):
        parents = g.parents(v)
        cfg = np.zeros(n, dtype=np.int64)
        for p in parents:
            cfg = cfg * len(net.states[p]) + out[:, p]
        cum = np.cumsum(net.cpts[v], axis=1)
        cum[:, -1] = 1.0
        # inverse CDF: first state whose cumulative mass exceeds u
        out[:, v] = (u[:, v, None] >= cum[cfg]).sum(axis=1)
    return CategoricalDataset(g.node_names, net.states, out)


def round_sig(x: float, digits: int) -> float:
    """Round to ``digits`` significant decimal digits, halves away from zero.

    Works on the shortest decimal representation of ``x``, so ``2.675`` rounds
    to ``2.68`` at 3 digits even though its binary value is slightly lower.
    """
    return float(_round_sig_decimal(x, digits))


def _round_sig_decimal(x: float, digits: int) -> Decimal:
    if not 1 <= digits <= 8:
        raise ValueError("digits must lie in 1..8")
    if x == 0 or not math.isfinite(x):
        return Decimal(repr(float(x)))
    d = Decimal(repr(float(x)))
    exp = d.adjusted() - digits + 1
    return d.quantize(Decimal(1).scaleb(exp), rounding=ROUND_HALF_UP)


def format_sig(x: float, digits: int | None) -> str:
    """Decimal literal of ``x`` (rounded to ``digits`` if given), no exponent."""
    if digits is None:
        return repr(float(x))
    d = _round_sig_decimal(x, digits)
    s = format(d, "f")
    return "0" if d == 0 else s


STRUCTURES = {
    # name -> {child: parents}, listed in causal order
    "chain": {"X": (), "Y": ("X",), "Z": ("Y",)},
    "fork": {"Y": (), "X": ("Y",), "Z": ("Y",)},
    "collider": {"X": (), "Z": (), "Y": ("X", "Z")},
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Linear-Gaussian three-variable mechanism.

    Exogenous nodes draw from ``N(mean, variance)``; an endogenous node is
    ``sum(coefficient * parent) + N(0, noise_variance)``.  Per-node overrides
    go in the mappings; coefficients are keyed ``"X->Y"``.
    """

    structure: str = "chain"
    n: int = 100
    sig_digits: int | None = None
    mean: float = 0.0
    variance: float = 1.0
    coefficient: float = 1.0
    noise_variance: float = 1.0
    means: Mapping[str, float] = field(default_factory=dict)
    variances: Mapping[str, float] = field(default_factory=dict)
    coefficients: Mapping[str, float] = field(default_factory=dict)
    noise_variances: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {sorted(STRUCTURES)}")
        if self.n < 1:
            raise ValueError("sample count must be >= 1")
        if self.sig_digits is not None and not 1 <= self.sig_digits <= 8:
            raise ValueError("sig_digits must lie in 1..8")
        if self.variance <= 0 or any(v <= 0 for v in self.variances.values()):
            raise ValueError("exogenous variances must be positive")
        # noiseless endogenous mechanisms are allowed
        if self.noise_variance < 0 or any(v < 0 for v in self.noise_variances.values()):
            raise ValueError("noise variances must be non-negative")

    @property
    def parents(self) -> dict[str, tuple[str, ...]]:
        return STRUCTURES[self.structure]

    def edges(self) -> list[tuple[str, str]]:
        return [(p, c) for c, ps in self.parents.items() for p in ps]


@dataclass(frozen=True)
class ContinuousTable:
    names: tuple[str, ...]
    values: np.ndarray
    sig_digits: int | None = None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def to_csv(self) -> str:
        lines = [",".join(self.names)]
        for row in self.values:
            lines.append(",".join(format_sig(x, self.sig_digits) for x in row))
        return "\n".join(lines) + "\n"


def sample_synthetic(spec: SyntheticSpec, seed: int) -> ContinuousTable:
    rng = make_rng(seed)
    names = ("X", "Y", "Z")
    cols: dict[str, np.ndarray] = {}
    for node, parents in spec.parents.items():
        if not parents:
            mu = spec.means.get(node, spec.mean)
            var = spec.variances.get(node, spec.variance)
            cols[node] = rng.normal(mu, math.sqrt(var), spec.n)
        else:
            val = np.zeros(spec.n)
            for p in parents:
                val = val + spec.coefficients.get(f"{p}->{node}", spec.coefficient) * cols[p]
            noise = spec.noise_variances.get(node, spec.noise_variance)
            cols[node] = val + rng.normal(0.0, math.sqrt(noise), spec.n)
    values = np.column_stack([cols[x] for x in names])
    if spec.sig_digits is not None:
        values = np.vectorize(lambda x: round_sig(x, spec.sig_digits), otypes=[float])(values)
    return ContinuousTable(names, values, spec.sig_digits)


class DegenerateColumn(DataError):
    pass


def discretize_quantile(table: ContinuousTable, bins: int) -> CategoricalDataset:
    """Equal-frequency binning of every column into labels ``b0 .. b{k-1}``.

    Boundaries are the interior sample quantiles ``j/k``; a value equal to a
    boundary goes to the upper bin.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    data = np.empty(table.values.shape, dtype=np.int64)
    for i, name in enumerate(table.names):
        col = table.values[:, i]
        if len(np.unique(col)) < bins:
            raise DegenerateColumn(f"column {name!r} has fewer than {bins} distinct values")
        edges = np.quantile(col, np.arange(1, bins) / bins)
        data[:, i] = np.searchsorted(edges, col, side="right")
    labels = [[f"b{k}" for k in range(bins)]] * len(table.names)
    return CategoricalDataset(table.names, labels, data)


def read_continuous_csv(text: str) -> ContinuousTable:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    names = tuple(h.strip() for h in lines[0].split(","))
    rows: Sequence[list[float]] = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    return ContinuousTable(names, np.array(rows, dtype=float))
