"""Skill relatedness: yearly excess-flow ratios, transform, averaging, thresholding.

Undefined entries (pairs where an industry has no flows in a year) are carried
as NaN and never silently imputed; the thresholding step maps them to absent
edges at the very end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import FlowTensor


@dataclass(frozen=True)
class RelatednessMatrix:
    """Symmetric averaged-and-transformed skill-relatedness scores in [-1, 1).

    NaN marks pairs undefined in every contributing year. Yearly intermediates
    are retained for audit when requested.
    """

    index: tuple[str, ...]
    values: np.ndarray = field(repr=False)  # symmetric, NaN = undefined
    years: tuple[int, ...]
    yearly_raw: dict[int, np.ndarray] | None = field(default=None, repr=False)
    yearly_transformed: dict[int, np.ndarray] | None = field(default=None, repr=False)


@dataclass(frozen=True)
class LabourNetwork:
    """Thresholded weighted undirected adjacency over the industry index."""

    index: tuple[str, ...]
    adjacency: np.ndarray = field(repr=False)  # symmetric, nonnegative off support, zero diagonal
    gamma: float
    years: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return len(self.index)

    def degrees(self) -> np.ndarray:
        return (self.adjacency > 0).sum(axis=1).astype(float)

    def strengths(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self):
        """Unordered positive-weight edges as (id_i, id_j, weight), i < j in index order."""
        out = []
        a = self.adjacency
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if a[i, j] > 0:
                    out.append((self.index[i], self.index[j], float(a[i, j])))
        return out

    def to_edgelist(self) -> pd.DataFrame:
        return pd.DataFrame(self.edges(), columns=["source", "target", "weight"])

    def to_json(self) -> str:
        return json.dumps(
            {
                "index": list(self.index),
                "gamma": self.gamma,
                "years": list(self.years),
                "edges": [[s, t, w] for s, t, w in self.edges()],
            },
            indent=2,
        )


def skill_relatedness_year(flows: FlowTensor, year: int) -> np.ndarray:
    """Raw yearly relatedness: observed flow over the configuration-model expectation.

    The marginal for industry i is its total flow (in plus out) that year.
    Pairs involving an industry with zero marginal are NaN (undefined).
    """
    f = flows.matrix(year)
    marginals = flows.marginals(year)
    total = flows.total(year)
    if total <= 0:
        raise ValueError(f"year {year} has no transitions")
    expected = np.outer(marginals, marginals) / total
    with np.errstate(divide="ignore", invalid="ignore"):
        sr = np.where(expected > 0, f / expected, np.nan)
    np.fill_diagonal(sr, np.nan)
    return sr


def transform_sr(sr: np.ndarray) -> np.ndarray:
    """Map raw ratios from [0, inf) onto [-1, 1) via (x - 1) / (x + 1); NaN passes through."""
    return (sr - 1.0) / (sr + 1.0)


def mean_sr(yearly, fixed_divisor: bool = False) -> np.ndarray:
    """Entrywise mean of transformed yearly matrices.

    By default each pair is averaged over the years in which it is defined;
    ``fixed_divisor=True`` divides by the number of years regardless (treating
    undefined years as zero), for exact replication against full-coverage data.
    """
    yearly = list(yearly)
    if not yearly:
        raise ValueError("mean_sr needs at least one yearly matrix")
    stack = np.stack(yearly)
    if fixed_divisor:
        return np.nansum(stack, axis=0) / len(yearly)
    defined = (~np.isnan(stack)).sum(axis=0)
    with np.errstate(invalid="ignore"):
        out = np.where(defined > 0, np.nansum(stack, axis=0) / np.maximum(defined, 1), np.nan)
    return out


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose; where only one direction is defined, keep it."""
    mt = m.T
    both = ~np.isnan(m) & ~np.isnan(mt)
    out = np.where(both, (m + mt) / 2.0, np.nan)
    only_fwd = ~np.isnan(m) & np.isnan(mt)
    only_bwd = np.isnan(m) & ~np.isnan(mt)
    out = np.where(only_fwd, m, out)
    out = np.where(only_bwd, mt, out)
    return out


def compute_relatedness(flows: FlowTensor, keep_intermediates: bool = False,
                        fixed_divisor: bool = False) -> RelatednessMatrix:
    """Full pipeline: yearly relatedness -> transform -> multi-year mean -> symmetrize."""
    raw = {y: skill_relatedness_year(flows, y) for y in flows.years}
    transformed = {y: transform_sr(raw[y]) for y in flows.years}
    mean = mean_sr([transformed[y] for y in flows.years], fixed_divisor=fixed_divisor)
    values = symmetrize(mean)
    np.fill_diagonal(values, np.nan)
    return RelatednessMatrix(
        index=flows.index,
        values=values,
        years=flows.years,
        yearly_raw=raw if keep_intermediates else None,
        yearly_transformed=transformed if keep_intermediates else None,
    )


def threshold(relatedness: RelatednessMatrix, gamma: float = 0.0) -> LabourNetwork:
    """Keep entries strictly above gamma; undefined pairs and the diagonal become 0."""
    if gamma < -1:
        raise ValueError("gamma must be >= -1")
    values = relatedness.values
    adjacency = np.where(~np.isnan(values) & (values > gamma), values, 0.0)
    np.fill_diagonal(adjacency, 0.0)
    return LabourNetwork(
        index=relatedness.index,
        adjacency=adjacency,
        gamma=float(gamma),
        years=relatedness.years,
    )
