"""Weighted undirected graph machinery for the labour network.

Node statistics, random-walk operators, the edge-rewiring null model,
assortativity diagnostics, sector-level edge shares and top-weight edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .relatedness import LabourNetwork


@dataclass(frozen=True)
class NodeStats:
    index: tuple[str, ...]
    degree: np.ndarray
    strength: np.ndarray
    eigencentrality: np.ndarray  # unit Euclidean norm on the largest component, 0 elsewhere

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "industry": list(self.index),
                "degree": self.degree.astype(int),
                "strength": self.strength,
                "eigencentrality": self.eigencentrality,
            }
        )


@dataclass(frozen=True)
class WalkOperators:
    """Random-walk transition matrix and stationary distribution.

    Zero-degree nodes are excluded from the walk domain: ``active`` marks the
    positive-degree nodes, and ``transition``/``stationary`` live on that
    subspace (in index order).
    """

    index: tuple[str, ...]
    active: np.ndarray  # bool mask over the full index
    adjacency: np.ndarray = field(repr=False)  # active-subgraph adjacency
    transition: np.ndarray = field(repr=False)  # row-stochastic D^{-1} A
    stationary: np.ndarray = field(repr=False)  # d / (2m), sums to 1
    degrees: np.ndarray = field(repr=False)  # weighted degrees of active nodes
    total_weight: float = 0.0  # 2m

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    @property
    def active_index(self) -> tuple[str, ...]:
        return tuple(ind for ind, a in zip(self.index, self.active) if a)


def connected_components(adjacency: np.ndarray) -> list[np.ndarray]:
    """Connected components of the positive-weight graph, as arrays of node positions."""
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in np.nonzero(adjacency[u] > 0)[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        comps.append(np.array(sorted(comp)))
    return comps


def _power_iteration(a: np.ndarray, tol: float = 1e-10, max_iter: int = 10000) -> np.ndarray:
    """Leading eigenvector of a nonnegative symmetric matrix, unit Euclidean norm."""
    n = a.shape[0]
    # diagonal shift keeps the eigenvectors but makes the top eigenvalue
    # strictly dominant, so the iteration converges on bipartite graphs too
    shift = a.sum(axis=1).max()
    a = a + shift * np.eye(n)
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return x
        y /= norm
        if np.abs(y - x).max() < tol:
            return y
        x = y
    return x


def node_stats(g: LabourNetwork) -> NodeStats:
    """Degrees, strengths, and power-iteration eigencentrality on the largest component."""
    if g.n == 0:
        raise ValueError("empty graph")
    a = g.adjacency
    degree = (a > 0).sum(axis=1).astype(float)
    strength = a.sum(axis=1)
    centrality = np.zeros(g.n)
    comps = [c for c in connected_components(a) if len(c) > 1 or degree[c[0]] > 0]
    if comps:
        largest = max(comps, key=len)
        sub = a[np.ix_(largest, largest)]
        centrality[largest] = _power_iteration(sub)
    return NodeStats(index=g.index, degree=degree, strength=strength, eigencentrality=centrality)


def walk_operators(g: LabourNetwork) -> WalkOperators:
    """Transition matrix M = D^{-1}A and stationary distribution pi = d/(2m)."""
    a = g.adjacency
    strength = a.sum(axis=1)
    active = strength > 0
    if not active.any():
        raise ValueError("graph has no positive-weight edges")
    sub = a[np.ix_(np.nonzero(active)[0], np.nonzero(active)[0])]
    d = sub.sum(axis=1)
    total = d.sum()  # 2m
    transition = sub / d[:, None]
    stationary = d / total
    return WalkOperators(
        index=g.index,
        active=active,
        adjacency=sub,
        transition=transition,
        stationary=stationary,
        degrees=d,
        total_weight=float(total),
    )


def rewire_once(g: LabourNetwork, rng: np.random.Generator) -> np.ndarray:
    """One null replicate: reassign the multiset of weighted edges to random distinct pairs.

    Edge count and total weight are preserved exactly; no self-loops or
    multi-edges are created.
    """
    n = g.n
    weights = np.array([w for _, _, w in g.edges()])
    n_edges = len(weights)
    n_pairs = n * (n - 1) // 2
    if n_edges > n_pairs:
        raise ValueError(f"{n_edges} edges cannot fit in {n_pairs} distinct pairs")
    chosen = rng.choice(n_pairs, size=n_edges, replace=False)
    adjacency = np.zeros((n, n))
    # linear pair index k -> (i, j) with i < j, row-major over the upper triangle
    iu, ju = np.triu_indices(n, k=1)
    for k, w in zip(chosen, weights):
        i, j = iu[k], ju[k]
        adjacency[i, j] = w
        adjacency[j, i] = w
    return adjacency


@dataclass(frozen=True)
class NullSummary:
    replicates: int
    degree_bins: np.ndarray
    degree_hist: np.ndarray  # mean counts per bin across replicates
    strength_bins: np.ndarray
    strength_hist: np.ndarray
    centrality_bins: np.ndarray
    centrality_hist: np.ndarray
    mean_strength: np.ndarray  # per-node strength averaged over replicates
    mean_degree: np.ndarray


def rewire_null(g: LabourNetwork, reps: int = 10000, seed: int = 0) -> NullSummary:
    """Averaged node-statistic distributions over edge-rewiring replicates."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = np.random.default_rng(seed)
    stats = node_stats(g)
    max_degree = g.n - 1
    degree_bins = np.arange(max_degree + 2) - 0.5
    smax = max(stats.strength.max(), 1e-12)
    strength_bins = np.linspace(0, smax * 1.001, 31)
    centrality_bins = np.linspace(0, 1.0, 31)
    degree_acc = np.zeros(len(degree_bins) - 1)
    strength_acc = np.zeros(len(strength_bins) - 1)
    centrality_acc = np.zeros(len(centrality_bins) - 1)
    mean_strength = np.zeros(g.n)
    mean_degree = np.zeros(g.n)
    for _ in range(reps):
        a = rewire_once(g, rng)
        null = LabourNetwork(index=g.index, adjacency=a, gamma=g.gamma)
        s = node_stats(null)
        degree_acc += np.histogram(s.degree, bins=degree_bins)[0]
        strength_acc += np.histogram(np.clip(s.strength, 0, strength_bins[-1]),
                                     bins=strength_bins)[0]
        centrality_acc += np.histogram(s.eigencentrality, bins=centrality_bins)[0]
        mean_strength += s.strength
        mean_degree += s.degree
    return NullSummary(
        replicates=reps,
        degree_bins=degree_bins,
        degree_hist=degree_acc / reps,
        strength_bins=strength_bins,
        strength_hist=strength_acc / reps,
        centrality_bins=centrality_bins,
        centrality_hist=centrality_acc / reps,
        mean_strength=mean_strength / reps,
        mean_degree=mean_degree / reps,
    )


@dataclass(frozen=True)
class AssortativityReport:
    table: pd.DataFrame  # per node: strength, eigencentrality, neighbour means
    strength_coefficient: float  # Pearson over edge endpoints, NaN if degenerate
    degree_coefficient: float


def _endpoint_pearson(values: np.ndarray, adjacency: np.ndarray) -> float:
    ii, jj = np.nonzero(adjacency > 0)  # both directions included
    if len(ii) == 0:
        return float("nan")
    x, y = values[ii], values[jj]
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return float("nan")
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def assortativity(g: LabourNetwork, stats: NodeStats | None = None) -> AssortativityReport:
    """Mean-neighbour tables and endpoint Pearson assortativity coefficients."""
    if stats is None:
        stats = node_stats(g)
    a = g.adjacency
    neigh_strength = np.full(g.n, np.nan)
    neigh_centrality = np.full(g.n, np.nan)
    for i in range(g.n):
        nbrs = np.nonzero(a[i] > 0)[0]
        if len(nbrs):
            neigh_strength[i] = stats.strength[nbrs].mean()
            neigh_centrality[i] = stats.eigencentrality[nbrs].mean()
    table = pd.DataFrame(
        {
            "industry": list(g.index),
            "strength": stats.strength,
            "eigencentrality": stats.eigencentrality,
            "mean_neighbour_strength": neigh_strength,
            "mean_neighbour_eigencentrality": neigh_centrality,
        }
    )
    return AssortativityReport(
        table=table,
        strength_coefficient=_endpoint_pearson(stats.strength, a),
        degree_coefficient=_endpoint_pearson(stats.degree, a),
    )


def sector_edge_share(g: LabourNetwork, sectors: dict[str, str]) -> pd.DataFrame:
    """Realized edge count between sector pairs over the number of possible pairs.

    Diagonal entries for single-node sectors have zero possible pairs and are NaN.
    """
    missing = [ind for ind in g.index if ind not in sectors]
    if missing:
        raise ValueError(f"industries without sector label: {missing}")
    labels = sorted(set(sectors[ind] for ind in g.index))
    label_pos = {s: k for k, s in enumerate(labels)}
    node_sector = np.array([label_pos[sectors[ind]] for ind in g.index])
    sizes = np.bincount(node_sector, minlength=len(labels)).astype(float)
    counts = np.zeros((len(labels), len(labels)))
    a = g.adjacency
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if a[i, j] > 0:
                p, q = node_sector[i], node_sector[j]
                counts[p, q] += 1
                if p != q:
                    counts[q, p] += 1
    possible = np.outer(sizes, sizes)
    np.fill_diagonal(possible, sizes * (sizes - 1) / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(possible > 0, counts / possible, np.nan)
    return pd.DataFrame(share, index=labels, columns=labels)


def top_edges(g: LabourNetwork, k: int) -> pd.DataFrame:
    """The k heaviest edges; ties broken by lexicographic node-id pair."""
    if k < 1:
        raise ValueError("k must be >= 1")
    edges = sorted(g.edges(), key=lambda e: (-e[2], min(e[0], e[1]), max(e[0], e[1])))
    return pd.DataFrame(edges[:k], columns=["source", "target", "weight"])
