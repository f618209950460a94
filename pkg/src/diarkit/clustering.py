"""Graph-based agglomerative clustering of embedding windows.

The main route builds a sparse k-nearest-neighbor graph whose edge weights
are sigmoid-squashed similarity scores, turns it into a row-stochastic
transition matrix P, and greedily merges clusters by the incremental path
integral

    S_C = (1 / |C|^2) * 1' (I - z P_C)^-1 1

where P_C restricts P to the cluster's vertices and z in (0, 1) damps long
paths.  The merge affinity of two clusters is the gain in path integral each
contributes when the other's vertices become reachable:

    A(Ca, Cb) = [S_{Ca|Ca+Cb} - S_Ca] + [S_{Cb|Ca+Cb} - S_Cb]

with the conditional term using the union's transition structure but only
Ca's vertices as path endpoints.  The geometric series converges for z < 1
because P_C has row sums <= 1, so each value is one linear solve.

A plain average-linkage agglomerative baseline over raw scores provides the
stopping-point estimate (cluster count at a threshold) and a comparison
route.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .scoring import NumericalError, SimilarityMatrix, sigmoid_weights

__all__ = [
    "AffinityGraph",
    "Partition",
    "PICParams",
    "build_knn_graph",
    "path_integral",
    "conditional_path_integral",
    "affinity",
    "init_partition",
    "pic_cluster",
    "pic_merge_trace",
    "ahc_cluster",
    "estimate_num_speakers",
]


@dataclass(frozen=True)
class AffinityGraph:
    """k-NN graph: nonnegative weights with zero diagonal and the derived
    row-stochastic transition matrix."""

    weights: np.ndarray
    transition: np.ndarray
    num_neighbors: int

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        P = np.asarray(self.transition, dtype=float)
        n = W.shape[0]
        if W.shape != (n, n) or P.shape != (n, n):
            raise ValueError("weights and transition must be square and same size")
        if np.any(np.diag(W) != 0.0):
            raise ValueError("self-weights must be zero")
        if W.min(initial=0.0) < 0.0:
            raise ValueError("edge weights must be nonnegative")
        rowsum = P.sum(axis=1)
        if np.abs(rowsum - 1.0).max(initial=0.0) > 1e-9:
            raise ValueError("transition rows must sum to 1")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "transition", P)

    def __len__(self) -> int:
        return self.weights.shape[0]


@dataclass
class Partition:
    """Disjoint clusters covering vertices 0..n-1.

    Clusters are kept in canonical order (ascending smallest member) and
    ``labels[v]`` is the position of v's cluster in that order.
    """

    labels: np.ndarray
    clusters: tuple[tuple[int, ...], ...]

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        labels = np.asarray(labels, dtype=int)
        groups: dict[int, list[int]] = {}
        for v, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(v)
        clusters = tuple(
            tuple(members) for members in sorted(groups.values(), key=lambda m: m[0])
        )
        canon = np.empty(len(labels), dtype=int)
        for idx, members in enumerate(clusters):
            for v in members:
                canon[v] = idx
        return cls(labels=canon, clusters=clusters)

    @classmethod
    def from_clusters(cls, clusters) -> "Partition":
        members = sorted((tuple(sorted(c)) for c in clusters), key=lambda m: m[0])
        size = sum(len(c) for c in members)
        seen = set()
        for cluster in members:
            for v in cluster:
                if v in seen:
                    raise ValueError(f"vertex {v} appears in two clusters")
                seen.add(v)
        if seen != set(range(size)):
            raise ValueError("clusters must cover vertices 0..n-1 exactly")
        labels = np.empty(size, dtype=int)
        for idx, cluster in enumerate(members):
            for v in cluster:
                labels[v] = idx
        return cls(labels=labels, clusters=tuple(members))

    def __len__(self) -> int:
        return len(self.clusters)


@dataclass(frozen=True)
class PICParams:
    """Knobs for path-integral clustering.

    ``damping`` is the z in the path integral; ``num_neighbors`` the graph's
    K.  Neither is dictated by the method itself, so both live here as plain
    configuration (defaults z = 0.01, K = 30).

    ``affinity_floor`` stops merging early when the best pair's affinity is
    at or below it, even with more than ``target_clusters`` clusters left.
    Between graph components with no connecting walks the affinity is zero
    up to roundoff, so forcing merges past that point picks pairs at random;
    a small positive floor (well above cancellation noise, well below any
    genuine walk contribution) turns that into an early stop.  The default
    of -inf never stops early.
    """

    damping: float = 0.01
    num_neighbors: int = 30
    target_clusters: int = 1
    affinity_floor: float = float("-inf")

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")
        if self.num_neighbors < 1:
            raise ValueError("num_neighbors must be >= 1")
        if self.target_clusters < 1:
            raise ValueError("target_clusters must be >= 1")


def build_knn_graph(
    sim: SimilarityMatrix,
    num_neighbors: int,
    scale: float = 1.0,
    offset: float = 0.0,
) -> AffinityGraph:
    """Keep each row's K highest-similarity neighbors, sigmoid-squash them.

    Neighbor ties break toward the lower index.  Rows whose kept weights all
    underflow to zero fall back to a uniform transition over their K chosen
    neighbors, keeping the transition matrix row-stochastic.
    """
    S = sim.scores
    n = S.shape[0]
    if n < 2:
        raise ValueError("graph construction needs at least 2 vertices")
    if not 1 <= num_neighbors <= n - 1:
        raise ValueError(f"num_neighbors must lie in [1, {n - 1}], got {num_neighbors}")
    masked = np.array(S, dtype=float)
    np.fill_diagonal(masked, -np.inf)
    # stable sort on negated scores: equal scores keep index order
    order = np.argsort(-masked, axis=1, kind="stable")
    chosen = np.sort(order[:, :num_neighbors], axis=1)
    rows = np.repeat(np.arange(n), num_neighbors)
    cols = chosen.ravel()
    w = sigmoid_weights(S[rows, cols], scale=scale, offset=offset).reshape(n, num_neighbors)
    W = np.zeros((n, n))
    W[rows, cols] = w.ravel()
    totals = w.sum(axis=1)
    trans = np.empty_like(w)
    positive = totals > 0.0
    trans[positive] = w[positive] / totals[positive, None]
    trans[~positive] = 1.0 / num_neighbors
    P = np.zeros((n, n))
    P[rows, cols] = trans.ravel()
    return AffinityGraph(weights=W, transition=P, num_neighbors=num_neighbors)


def _solve_restricted(P: np.ndarray, members: np.ndarray, z: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - z P_C) x = rhs on the restricted transition matrix.

    Small or slowly decaying systems use a dense solve.  Large systems whose
    geometric ratio (z times the largest restricted row sum) is well below 1
    sum the series sum_k (z P_C)^k rhs instead, stopping once the remaining
    tail is provably under 1e-14 per entry; at the damping values used for
    clustering that takes a handful of matrix-vector products.
    """
    sub = P[np.ix_(members, members)]
    m = len(members)
    rho = z * float(sub.sum(axis=1).max())
    if m <= 256 or rho >= 0.5:
        try:
            return np.linalg.solve(np.eye(m) - z * sub, rhs)
        except np.linalg.LinAlgError as exc:  # unreachable for z < 1, row sums <= 1
            raise NumericalError(f"path-integral solve failed: {exc}") from exc
    x = np.array(rhs, dtype=float)
    term = x.copy()
    tail_factor = rho / (1.0 - rho)
    while float(np.abs(term).max()) * tail_factor > 1e-14:
        term = z * (sub @ term)
        x += term
    return x


def path_integral(graph: AffinityGraph, members, z: float) -> float:
    """Damped sum over all intra-cluster paths, normalized by |C|^2.

    The zero-length paths contribute |C|, so every cluster scores at least
    1 / |C| and an isolated singleton scores exactly 1.
    """
    members = np.asarray(sorted(members), dtype=int)
    if members.size == 0:
        raise ValueError("cluster must be non-empty")
    x = _solve_restricted(graph.transition, members, z, np.ones(len(members)))
    return float(x.sum()) / len(members) ** 2


def conditional_path_integral(graph: AffinityGraph, members, union_members, z: float) -> float:
    """Path integral of a cluster when paths may traverse the whole union.

    Endpoints stay inside ``members``; the transition structure is the
    union's.  Normalization stays 1 / |members|^2.
    """
    members = set(int(v) for v in members)
    union = np.asarray(sorted(int(v) for v in union_members), dtype=int)
    if not members.issubset(union):
        raise ValueError("cluster must be a subset of the union")
    indicator = np.array([1.0 if v in members else 0.0 for v in union])
    x = _solve_restricted(graph.transition, union, z, indicator)
    return float(x[indicator > 0].sum()) / len(members) ** 2


def affinity(graph: AffinityGraph, members_a, members_b, z: float) -> float:
    """Merge affinity: the total path-integral gain of joining two clusters.

    Symmetric by construction.  When no edges connect the clusters the
    conditional terms collapse to the unconditional ones and the affinity
    is exactly zero.
    """
    a = np.asarray(sorted(members_a), dtype=int)
    b = np.asarray(sorted(members_b), dtype=int)
    if np.intersect1d(a, b).size:
        raise ValueError("clusters must be disjoint")
    union = np.union1d(a, b)
    in_a = np.isin(union, a).astype(float)
    rhs = np.column_stack([in_a, 1.0 - in_a])
    x = _solve_restricted(graph.transition, union, z, rhs)
    cond_a = float(x[in_a > 0, 0].sum()) / len(a) ** 2
    cond_b = float(x[in_a == 0, 1].sum()) / len(b) ** 2
    return (cond_a - path_integral(graph, a, z)) + (cond_b - path_integral(graph, b, z))


def init_partition(graph: AffinityGraph) -> Partition:
    """Weakly connected components of the directed 1-nearest-neighbor graph.

    Every vertex points at its highest-weight neighbor (ties toward the
    lower index); a vertex with no positive weights keeps no outgoing edge.
    """
    W = graph.weights
    n = len(graph)
    rows, cols = [], []
    for i in range(n):
        j = int(np.argmax(W[i]))
        if W[i, j] > 0.0:
            rows.append(i)
            cols.append(j)
    adj = scipy.sparse.coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, n)
    ).tocsr()
    _, labels = scipy.sparse.csgraph.connected_components(
        adj, directed=True, connection="weak"
    )
    return Partition.from_labels(labels)


class _MergeEngine:
    """Shared greedy merge loop over a cached affinity table.

    Clusters stay ordered by smallest member, so a (row, col) position pair
    is the canonical cluster-id pair; ties on affinity pick the
    lexicographically smallest such pair.  Merging position j into i < j
    preserves the ordering because min(Ci + Cj) = min(Ci).
    """

    def __init__(self, graph: AffinityGraph, z: float):
        self.graph = graph
        self.z = z

    _BATCH_LIMIT = 256

    def _pair_affinity(self, a: list[int], b: list[int], pi_a: float, pi_b: float) -> float:
        union = np.asarray(sorted(a + b), dtype=int)
        in_a = np.isin(union, a).astype(float)
        rhs = np.column_stack([in_a, 1.0 - in_a])
        x = _solve_restricted(self.graph.transition, union, self.z, rhs)
        cond_a = float(x[in_a > 0, 0].sum()) / len(a) ** 2
        cond_b = float(x[in_a == 0, 1].sum()) / len(b) ** 2
        return (cond_a - pi_a) + (cond_b - pi_b)

    def _affinities(self, pairs, clusters, pi, conn) -> np.ndarray:
        """Affinities for many cluster-index pairs at once.

        Walks never leave the union of the two clusters, so a pair without a
        single connecting edge has affinity exactly zero and needs no solve;
        ``conn`` records which cluster pairs share an edge.  Of the rest,
        pairs whose unions have the same size are solved as one stacked
        call, which gives the same bits as solving them one at a time but
        pays the solver dispatch cost once.  Unions past _BATCH_LIMIT (and
        sizes that occur only once) take the single-pair path.
        """
        out = np.empty(len(pairs))
        buckets: dict[int, list[tuple[int, np.ndarray, np.ndarray]]] = {}
        for idx, (a, b) in enumerate(pairs):
            if not conn[a, b]:
                out[idx] = 0.0
                continue
            union = np.sort(np.concatenate([clusters[a], clusters[b]]))
            if len(union) > self._BATCH_LIMIT:
                out[idx] = self._pair_affinity(clusters[a], clusters[b], pi[a], pi[b])
                continue
            in_a = np.zeros(len(union), dtype=bool)
            in_a[np.searchsorted(union, clusters[a])] = True
            buckets.setdefault(len(union), []).append((idx, union, in_a))
        P = self.graph.transition
        for size, items in buckets.items():
            if len(items) == 1:
                idx, _, _ = items[0]
                a, b = pairs[idx]
                out[idx] = self._pair_affinity(clusters[a], clusters[b], pi[a], pi[b])
                continue
            unions = np.stack([u for _, u, _ in items])
            masks = np.stack([m for _, _, m in items]).astype(float)
            sub = P[unions[:, :, None], unions[:, None, :]]
            mats = np.eye(size)[None, :, :] - self.z * sub
            rhs = np.stack([masks, 1.0 - masks], axis=2)
            x = np.linalg.solve(mats, rhs)
            for row, (idx, _, _) in enumerate(items):
                a, b = pairs[idx]
                keep = masks[row] > 0
                cond_a = float(x[row, keep, 0].sum()) / len(clusters[a]) ** 2
                cond_b = float(x[row, ~keep, 1].sum()) / len(clusters[b]) ** 2
                out[idx] = (cond_a - pi[a]) + (cond_b - pi[b])
        return out

    def run(self, initial: Partition, target: int, affinity_floor: float = float("-inf")):
        clusters = [list(c) for c in initial.clusters]
        trace: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        m = len(clusters)
        if m <= target:
            if m < target:
                warnings.warn(
                    f"target of {target} clusters exceeds the {m} initial "
                    "components; returning the initial partition",
                    stacklevel=3,
                )
            return Partition.from_clusters(clusters), trace
        pi = [path_integral(self.graph, c, self.z) for c in clusters]
        edge_rows, edge_cols = np.nonzero(self.graph.transition)
        conn = np.zeros((m, m), dtype=bool)
        conn[initial.labels[edge_rows], initial.labels[edge_cols]] = True
        conn |= conn.T
        table = np.full((m, m), -np.inf)
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        for (i, j), value in zip(pairs, self._affinities(pairs, clusters, pi, conn)):
            table[i, j] = value
        while len(clusters) > target:
            i, j = self._best_pair(table)
            if table[i, j] <= affinity_floor:
                break
            trace.append((tuple(clusters[i]), tuple(clusters[j])))
            clusters[i] = sorted(clusters[i] + clusters[j])
            del clusters[j]
            del pi[j]
            pi[i] = path_integral(self.graph, clusters[i], self.z)
            table = np.delete(np.delete(table, j, axis=0), j, axis=1)
            conn[i, :] |= conn[j, :]
            conn[:, i] |= conn[:, j]
            conn = np.delete(np.delete(conn, j, axis=0), j, axis=1)
            pairs = [(min(i, k), max(i, k)) for k in range(len(clusters)) if k != i]
            for (a, b), value in zip(pairs, self._affinities(pairs, clusters, pi, conn)):
                table[a, b] = value
        return Partition.from_clusters(clusters), trace

    @staticmethod
    def _best_pair(table: np.ndarray) -> tuple[int, int]:
        flat = int(np.argmax(table))  # first occurrence = smallest (i, j)
        return flat // table.shape[0], flat % table.shape[0]


def pic_cluster(graph: AffinityGraph, params: PICParams) -> Partition:
    """Greedy path-integral merging from the nearest-neighbor components.

    Merges the maximum-affinity pair until ``params.target_clusters``
    remain, or until the best affinity drops to ``params.affinity_floor``.
    If the initial partition already has at most that many components it is
    returned unchanged (with a warning when strictly fewer).
    Deterministic: identical inputs give identical labels.
    """
    initial = init_partition(graph)
    result, _ = _MergeEngine(graph, params.damping).run(
        initial, params.target_clusters, params.affinity_floor
    )
    return result


def pic_merge_trace(graph: AffinityGraph, params: PICParams):
    """Like :func:`pic_cluster` but also returns the ordered merge pairs."""
    initial = init_partition(graph)
    return _MergeEngine(graph, params.damping).run(
        initial, params.target_clusters, params.affinity_floor
    )


def ahc_cluster(
    sim: SimilarityMatrix,
    threshold: float | None = None,
    num_clusters: int | None = None,
) -> Partition:
    """Average-linkage agglomerative clustering on raw similarity scores.

    Exactly one stopping rule must be given: merge while the best pair's
    linkage is >= threshold, or merge until ``num_clusters`` remain.  Ties
    pick the lexicographically smallest index pair.
    """
    if (threshold is None) == (num_clusters is None):
        raise ValueError("give exactly one of threshold or num_clusters")
    S = sim.scores.astype(float)
    n = S.shape[0]
    if num_clusters is not None and not 1 <= num_clusters <= n:
        raise ValueError(f"num_clusters must lie in [1, {n}]")
    if n == 1:
        return Partition.from_labels([0])

    link = S.copy()
    np.fill_diagonal(link, -np.inf)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    parents = {i: [i] for i in range(n)}
    row_best = link.max(axis=1)
    row_arg = link.argmax(axis=1)
    remaining = n

    stop_count = num_clusters if num_clusters is not None else 1
    while remaining > stop_count:
        i = int(np.argmax(np.where(active, row_best, -np.inf)))
        best = row_best[i]
        if threshold is not None and best < threshold:
            break
        j = int(row_arg[i])
        if j < i:
            i, j = j, i
        # average linkage: merged-to-k linkage is the size-weighted mean
        merged = (sizes[i] * link[i] + sizes[j] * link[j]) / (sizes[i] + sizes[j])
        link[i, :] = merged
        link[:, i] = merged
        link[i, i] = -np.inf
        link[j, :] = -np.inf
        link[:, j] = -np.inf
        sizes[i] += sizes[j]
        parents[i].extend(parents.pop(j))
        active[j] = False
        remaining -= 1
        # refresh cached row maxima wherever the merge could have moved them;
        # row i itself was fully rewritten, so it is always stale
        dirty = active & ((row_arg == i) | (row_arg == j) | (link[:, i] >= row_best))
        dirty[i] = True
        idx = np.flatnonzero(dirty)
        block = link[idx]
        row_best[idx] = block.max(axis=1)
        row_arg[idx] = block.argmax(axis=1)

    return Partition.from_clusters(parents.values())


def estimate_num_speakers(
    sim: SimilarityMatrix, threshold: float, min_cluster_size: int = 1
) -> int:
    """Cluster count where average-linkage merging stops at the threshold.

    Clusters smaller than ``min_cluster_size`` are not counted (outlier
    windows otherwise inflate the estimate), but the result is always at
    least 1.
    """
    part = ahc_cluster(sim, threshold=threshold)
    count = sum(1 for c in part.clusters if len(c) >= min_cluster_size)
    return max(1, count)


def absorb_small_clusters(
    partition: Partition, sim: SimilarityMatrix, min_size: int
) -> Partition:
    """Attach clusters smaller than ``min_size`` to the nearest large one.

    Outlier windows tend to survive agglomeration as one- or two-member
    clusters that say nothing about the speaker count.  Each such cluster
    joins the large cluster with the highest mean similarity to its members,
    measured against the large clusters' original memberships so the result
    does not depend on absorption order; ties pick the earlier cluster.  If
    no cluster reaches ``min_size``, the largest one stands in as the only
    anchor.  With ``min_size`` <= 1 the partition is returned unchanged.
    """
    if min_size <= 1 or len(partition) <= 1:
        return partition
    S = sim.scores
    clusters = [list(c) for c in partition.clusters]
    anchors = [idx for idx, c in enumerate(clusters) if len(c) >= min_size]
    if not anchors:
        biggest = max(len(c) for c in clusters)
        anchors = [next(idx for idx, c in enumerate(clusters) if len(c) == biggest)]
    merged = {idx: list(clusters[idx]) for idx in anchors}
    for idx, members in enumerate(clusters):
        if idx in merged:
            continue
        means = [S[np.ix_(members, clusters[a])].mean() for a in anchors]
        merged[anchors[int(np.argmax(means))]].extend(members)
    return Partition.from_clusters(merged.values())
