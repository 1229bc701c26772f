"""Cross-resolution structure: dendrogram linking, crosstabs, employment trajectories.

Partitions from the sweep are not strictly nested, so adjacent resolutions are
linked by a plurality rule: each community maps to the coarser community that
absorbs most of its nodes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .ingest import DataWarning, EmploymentTable
from .stability import Partition, ScaleSweep


@dataclass(frozen=True)
class Dendrogram:
    levels: tuple[int, ...]  # tau values, ascending
    parent_maps: tuple[dict[int, int], ...]  # child community -> parent community, per adjacent pair
    merge_events: tuple[tuple[int, tuple[int, ...], int], ...]  # (tau, merged children, parent)

    def ancestry(self, level_pos: int, community: int) -> list[int]:
        """Community ids along the chain from the given level up to the top level."""
        chain = [community]
        for parent_map in self.parent_maps[level_pos:]:
            chain.append(parent_map[chain[-1]])
        return chain

    def to_json(self) -> str:
        return json.dumps(
            {
                "levels": list(self.levels),
                "parent_maps": [
                    {str(k): v for k, v in sorted(pm.items())} for pm in self.parent_maps
                ],
                "merge_events": [
                    {"tau": tau, "children": list(children), "parent": parent}
                    for tau, children, parent in self.merge_events
                ],
                "tie_break": "plurality; ties to larger parent, then lower community id",
            },
            indent=2,
        )

    def to_newick(self) -> str:
        """Newick string over base-level communities, inner nodes labelled by merge tau."""

        def subtree(level_pos: int, community: int) -> str:
            if level_pos == 0:
                return f"c{community}"
            children = [
                c for c, p in sorted(self.parent_maps[level_pos - 1].items()) if p == community
            ]
            if not children:
                return f"c{self.levels[level_pos]}_{community}"
            parts = [subtree(level_pos - 1, c) for c in children]
            if len(parts) == 1:
                return parts[0]
            return "(" + ",".join(parts) + f")t{self.levels[level_pos]}"

        top = len(self.levels) - 1
        roots = sorted(set(self.parent_maps[-1].values())) if self.parent_maps else []
        trees = [subtree(top, r) for r in roots]
        if len(trees) == 1:
            return trees[0] + ";"
        return "(" + ",".join(trees) + ")root;"


def majority_link(sweep: ScaleSweep) -> Dendrogram:
    """Link each community to the next-resolution community holding its plurality of nodes."""
    if len(sweep.results) < 2:
        raise ValueError("dendrogram needs at least two sweep levels")
    parent_maps = []
    merge_events = []
    for fine, coarse in zip(sweep.results, sweep.results[1:]):
        fine_labels = fine.partition.labels
        coarse_labels = coarse.partition.labels
        coarse_sizes = np.bincount(coarse_labels, minlength=coarse.partition.m)
        mapping = {}
        for c in range(fine.partition.m):
            members = fine_labels == c
            counts = np.bincount(coarse_labels[members], minlength=coarse.partition.m)
            best = max(
                range(coarse.partition.m),
                key=lambda q: (counts[q], coarse_sizes[q], -q),
            )
            mapping[c] = int(best)
        parent_maps.append(mapping)
        by_parent: dict[int, list[int]] = {}
        for child, parent in mapping.items():
            by_parent.setdefault(parent, []).append(child)
        for parent, children in sorted(by_parent.items()):
            if len(children) > 1:
                merge_events.append((coarse.tau, tuple(sorted(children)), parent))
    return Dendrogram(
        levels=sweep.taus,
        parent_maps=tuple(parent_maps),
        merge_events=tuple(merge_events),
    )


def cluster_employment_size(
    partition: Partition, index, employment: EmploymentTable, year: int
) -> np.ndarray:
    """Total employment of each node's cluster (own employment included)."""
    emp = employment.for_year(year)
    missing = [ind for ind in index if ind not in emp]
    if missing:
        warnings.warn(
            f"{len(missing)} industries missing employment for {year}, treated as 0",
            DataWarning,
            stacklevel=2,
        )
    e = np.array([emp.get(ind, 0.0) for ind in index])
    cluster_totals = np.bincount(partition.labels, weights=e, minlength=partition.m)
    return cluster_totals[partition.labels]


def trajectory(
    sweep: ScaleSweep, employment: EmploymentTable, year: int, tau0: int = 3
) -> pd.DataFrame:
    """Mean cluster employment size of each tau0 cluster, tracked over tau >= tau0.

    Rows are clusters at the anchor resolution; columns are tau values.
    """
    if tau0 not in sweep.taus:
        raise ValueError(f"anchor tau {tau0} not in sweep grid {sweep.taus}")
    anchor = sweep.partition_at(tau0)
    taus = [t for t in sweep.taus if t >= tau0]
    data = {}
    for tau in taus:
        w = cluster_employment_size(sweep.partition_at(tau), sweep.index, employment, year)
        data[tau] = [w[anchor.labels == c].mean() for c in range(anchor.m)]
    return pd.DataFrame(data, index=[f"cluster_{c}" for c in range(anchor.m)])


def sector_cluster_crosstab(partition: Partition, index, sectors: dict[str, str]) -> pd.DataFrame:
    """Industry counts by sector (rows) and cluster (columns)."""
    labels = sorted(set(sectors[ind] for ind in index))
    table = pd.DataFrame(
        0,
        index=labels,
        columns=[f"cluster_{c}" for c in range(partition.m)],
    )
    for ind, c in zip(index, partition.labels):
        table.loc[sectors[ind], f"cluster_{c}"] += 1
    return table


def clusters_per_sector(sweep: ScaleSweep, sectors: dict[str, str]) -> pd.DataFrame:
    """Number of distinct clusters in which each sector is present, per resolution."""
    labels = sorted(set(sectors[ind] for ind in sweep.index))
    data = {}
    for r in sweep.results:
        counts = {s: set() for s in labels}
        for ind, c in zip(sweep.index, r.partition.labels):
            counts[sectors[ind]].add(int(c))
        data[r.tau] = [len(counts[s]) for s in labels]
    return pd.DataFrame(data, index=labels)
