"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pandas as pd
import pytest

from skillbasin.ingest import EmploymentTable, TransitionTable
from skillbasin.relatedness import LabourNetwork


def network_from_adjacency(adjacency, index=None, gamma=0.0) -> LabourNetwork:
    """Wrap a dense symmetric matrix as a LabourNetwork for direct graph tests."""
    adjacency = np.asarray(adjacency, dtype=float)
    n = adjacency.shape[0]
    if index is None:
        index = tuple(f"N{i}" for i in range(n))
    return LabourNetwork(index=tuple(index), adjacency=adjacency, gamma=gamma)


def random_connected_network(n, rng, density=0.4) -> LabourNetwork:
    """Random weighted graph guaranteed connected via a spanning path."""
    a = np.zeros((n, n))
    for i in range(n - 1):  # spanning path keeps every node in one component
        w = rng.uniform(0.1, 1.0)
        a[i, i + 1] = a[i + 1, i] = w
    iu, ju = np.triu_indices(n, k=1)
    extra = rng.random(len(iu)) < density
    for i, j in zip(iu[extra], ju[extra]):
        w = rng.uniform(0.1, 1.0)
        a[i, j] = a[j, i] = w
    return network_from_adjacency(a)


def transitions_from_rows(rows) -> TransitionTable:
    return TransitionTable(
        frame=pd.DataFrame(rows, columns=["year", "origin", "destination", "count"])
    )


def employment_from_rows(rows) -> EmploymentTable:
    return EmploymentTable(
        frame=pd.DataFrame(rows, columns=["year", "industry", "employment"])
    )


def write_csv(path, header, rows):
    lines = [header] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
