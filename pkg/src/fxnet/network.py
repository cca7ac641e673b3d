"""Graph reconstruction: Mantegna distances, minimum spanning tree, threshold
networks and component/hub reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market_data import AssetMeta
from .spectral import CorrelationMatrix

CLAMP_TOL = 1e-9
DEFAULT_HUB_SIGMA = 2.0
MIN_CLUSTER_SIZE = 3


@dataclass(frozen=True)
class Graph:
    nodes: tuple[tuple[int, AssetMeta], ...]  # (panel index, meta)
    edges: tuple[tuple[int, int, float], ...]  # (i, j, weight) with i < j
    kind: str  # "mst" or "threshold"

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


@dataclass(frozen=True)
class ClusterReport:
    components: tuple[tuple[int, ...], ...]  # descending size, non-isolated nodes
    isolated: tuple[int, ...]
    hubs: tuple[tuple[int, int], ...]  # (node, degree)


@dataclass(frozen=True)
class SweepEntry:
    c_th: float
    n_active: int  # nodes with degree > 0
    n_components: int
    sizes: tuple[int, ...]
    clustered: int  # nodes in components of size >= MIN_CLUSTER_SIZE


@dataclass(frozen=True)
class SweepResult:
    entries: tuple[SweepEntry, ...]
    recommended: float


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def mantegna_distance(c: CorrelationMatrix | np.ndarray) -> np.ndarray:
    """d_ij = sqrt(2 (1 - C_ij)); zero diagonal, range [0, 2]."""
    vals = c.values if isinstance(c, CorrelationMatrix) else np.asarray(c, dtype=float)
    if vals.min() < -1 - CLAMP_TOL or vals.max() > 1 + CLAMP_TOL:
        raise ValueError("correlation entries outside [-1, 1] beyond tolerance")
    clamped = np.clip(vals, -1.0, 1.0)
    d = np.sqrt(2.0 * (1.0 - clamped))
    np.fill_diagonal(d, 0.0)
    return d


def _nodes_for(assets: tuple[AssetMeta, ...]) -> tuple[tuple[int, AssetMeta], ...]:
    return tuple((i, a) for i, a in enumerate(assets))


def minimum_spanning_tree(d: np.ndarray, assets: tuple[AssetMeta, ...]) -> Graph:
    """Kruskal MST with edges sorted by (weight, i, j) so ties break
    deterministically."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if n != len(assets):
        raise ValueError("distance matrix size does not match asset list")
    if not np.all(np.isfinite(d)):
        raise ValueError("distance matrix contains non-finite entries")
    candidates = sorted(
        (float(d[i, j]), i, j) for i in range(n) for j in range(i + 1, n)
    )
    uf = UnionFind(n)
    edges: list[tuple[int, int, float]] = []
    for w, i, j in candidates:
        if uf.union(i, j):
            edges.append((i, j, w))
            if len(edges) == n - 1:
                break
    if len(edges) != n - 1:
        raise ValueError("distance matrix does not yield a connected tree")
    return Graph(nodes=_nodes_for(assets), edges=tuple(edges), kind="mst")


def threshold_network(
    c_group: np.ndarray, c_th: float, assets: tuple[AssetMeta, ...]
) -> Graph:
    """Edge (i, j) present iff the group-correlation element strictly exceeds
    c_th; the element is kept as the edge weight."""
    c_group = np.asarray(c_group, dtype=float)
    n = c_group.shape[0]
    if n != len(assets):
        raise ValueError("matrix size does not match asset list")
    edges = tuple(
        (i, j, float(c_group[i, j]))
        for i in range(n)
        for j in range(i + 1, n)
        if c_group[i, j] > c_th
    )
    return Graph(nodes=_nodes_for(assets), edges=edges, kind="threshold")


def cluster_report(g: Graph, hub_sigma: float = DEFAULT_HUB_SIGMA) -> ClusterReport:
    """Connected components of the non-isolated nodes plus degree-based hubs.

    A hub has degree above mean + hub_sigma * std of all node degrees.
    """
    n = g.n_nodes
    deg = g.degrees()
    uf = UnionFind(n)
    for i, j, _ in g.edges:
        uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for node in range(n):
        if deg[node] > 0:
            groups.setdefault(uf.find(node), []).append(node)
    components = sorted(
        (tuple(sorted(members)) for members in groups.values()),
        key=lambda c: (-len(c), c[0]),
    )
    isolated = tuple(int(i) for i in np.flatnonzero(deg == 0))
    cutoff = deg.mean() + hub_sigma * deg.std()
    hubs = sorted(
        ((int(i), int(deg[i])) for i in range(n) if deg[i] > cutoff),
        key=lambda h: (-h[1], h[0]),
    )
    return ClusterReport(
        components=tuple(components), isolated=isolated, hubs=tuple(hubs)
    )


def threshold_sweep(
    c_group: np.ndarray,
    grid: list[float] | np.ndarray,
    assets: tuple[AssetMeta, ...],
) -> SweepResult:
    """Evaluate threshold networks over a grid of cutoffs.

    The recommended cutoff maximizes the number of nodes sitting in components
    of size >= 3, with ties broken toward the larger cutoff.
    """
    grid = [float(x) for x in grid]
    if not grid:
        raise ValueError("threshold grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("threshold grid must be strictly increasing")
    entries: list[SweepEntry] = []
    best: tuple[int, float] | None = None
    for c_th in grid:
        report = cluster_report(threshold_network(c_group, c_th, assets))
        sizes = tuple(len(c) for c in report.components)
        clustered = sum(s for s in sizes if s >= MIN_CLUSTER_SIZE)
        entries.append(
            SweepEntry(
                c_th=c_th,
                n_active=sum(sizes),
                n_components=len(sizes),
                sizes=sizes,
                clustered=clustered,
            )
        )
        if best is None or (clustered, c_th) >= best:
            best = (clustered, c_th)
    return SweepResult(entries=tuple(entries), recommended=best[1])
