"""Overlap-driven clustering of slots and cluster-level pruning.

Two clusters overlap by sigma(A|B) = I(A) + I(B) - I(A u B); the merge test
normalizes that by cluster influence. Starting from singletons, sweeps merge
any pair whose (symmetrized, whole-cluster) overlap ratio reaches theta,
until a sweep makes no merge. Converged partitions therefore have every
pairwise whole-cluster ratio below theta.

The exact ratio definition maximizes over all subsets of the first cluster,
which is exponential; this module uses the whole-cluster value as the
tractable surrogate (tests brute-force the exact value on tiny clusters).

Per-cluster influence profiles f[u] = 1 - prod (1 - p) make sigma a sparse
dot product: sum_u f_A[u] * f_B[u], which is what the sweep evaluates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import ExposureModel
from .errors import InternalInvariantError, ValidationError
from .influence import naive_influence


@dataclass
class Cluster:
    id: int
    members: set[int]
    influence: float


@dataclass
class Partition:
    clusters: list[Cluster]
    theta: float
    sweeps: int = 0
    converged: bool = True


def influence_overlap(model: ExposureModel, a, b) -> float:
    """sigma(A|B) = I(A) + I(B) - I(A u B) for disjoint slot sets."""
    a = set(a)
    b = set(b)
    if a & b:
        raise ValidationError(f"overlapping inputs: {sorted(a & b)}")
    return naive_influence(model, a) + naive_influence(model, b) - naive_influence(model, a | b)


def overlap_ratio(model: ExposureModel, a: Cluster, b: Cluster) -> float:
    """Whole-cluster overlap of a with b, normalized by I(a); in [0, 1]."""
    ia = naive_influence(model, a.members)
    if ia <= 0.0:
        return 0.0
    sigma = influence_overlap(model, a.members, b.members)
    return float(min(1.0, max(0.0, sigma / ia)))


def _profile(model: ExposureModel, slot: int) -> tuple[np.ndarray, np.ndarray]:
    return model.users(slot).copy(), model.probs(slot).copy()


def _merge_profiles(ia, va, ib, vb):
    """Combine influence profiles: f = fa + fb - fa*fb on the shared support."""
    idx = np.union1d(ia, ib)
    out = np.zeros(idx.size)
    out[np.searchsorted(idx, ia)] += va
    pos_b = np.searchsorted(idx, ib)
    out[pos_b] += vb
    both, pa, pb = np.intersect1d(ia, ib, assume_unique=True, return_indices=True)
    if both.size:
        out[np.searchsorted(idx, both)] -= va[pa] * vb[pb]
    return idx, out


def _profile_dot(ia, va, ib, vb) -> float:
    shared, pa, pb = np.intersect1d(ia, ib, assume_unique=True, return_indices=True)
    if not shared.size:
        return 0.0
    return float(np.dot(va[pa], vb[pb]))


def theta_partition(model: ExposureModel, ground_set, theta: float,
                    max_sweeps: int = 50) -> Partition:
    """Cluster the ground set so pairwise overlap ratios fall below theta.

    Pairs are visited in (smaller id, larger id) order; a merged cluster is
    re-tested against later ids within the same sweep. Stops after a sweep
    with no merge, or after max_sweeps.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"theta must lie in [0, 1], got {theta}")
    if max_sweeps < 1:
        raise ValidationError(f"max_sweeps must be at least 1, got {max_sweeps}")
    ground = sorted(set(int(b) for b in ground_set))
    if not ground:
        raise ValidationError("empty ground set")
    for b in ground:
        model.check_slot(b)

    members: dict[int, set[int]] = {}
    prof: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    infl: dict[int, float] = {}
    for cid, slot in enumerate(ground):
        members[cid] = {slot}
        prof[cid] = _profile(model, slot)
        infl[cid] = float(model.singleton[slot])

    # clusters sharing no user have zero overlap and can never merge,
    # so the sweep only ever visits user-sharing pairs
    boolean = model.matrix[ground].astype(bool).astype(np.float32)
    gram = (boolean @ boolean.T).tocsr()
    neighbors: dict[int, set[int]] = {}
    for cid in range(len(ground)):
        row = gram.indices[gram.indptr[cid]:gram.indptr[cid + 1]]
        neighbors[cid] = {int(c) for c in row if c != cid}

    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        merged_any = False
        for i in sorted(members):
            if i not in members:
                continue  # absorbed earlier in this sweep
            cursor = i
            while True:
                later = [c for c in neighbors[i] if c > cursor]
                if not later:
                    break
                j = min(later)
                cursor = j
                sigma = _profile_dot(*prof[i], *prof[j])
                if sigma <= 0.0:
                    continue
                ratio = 0.0
                if infl[i] > 0:
                    ratio = sigma / infl[i]
                if infl[j] > 0:
                    ratio = max(ratio, sigma / infl[j])
                if ratio >= theta:
                    members[i] |= members.pop(j)
                    prof[i] = _merge_profiles(*prof[i], *prof.pop(j))
                    infl[i] = float(prof[i][1].sum())
                    del infl[j]
                    for c in neighbors.pop(j):
                        if c != i:
                            neighbors[c].discard(j)
                            neighbors[c].add(i)
                            neighbors[i].add(c)
                    neighbors[i].discard(i)
                    neighbors[i].discard(j)
                    merged_any = True
        if sum(len(s) for s in members.values()) != len(ground):
            raise InternalInvariantError("sweep broke partition disjointness/coverage")
        if not merged_any:
            converged = True
            break

    ordered = sorted(members.values(), key=min)
    clusters = [
        Cluster(cid, mset, naive_influence(model, mset))
        for cid, mset in enumerate(ordered)
    ]
    return Partition(clusters, theta, sweeps, converged)


def prune_clusters(partition: Partition) -> tuple[list[Cluster], float]:
    """Drop clusters whose influence falls strictly below the mean."""
    if not partition.clusters:
        raise ValidationError("partition has no clusters")
    gamma = sum(c.influence for c in partition.clusters) / len(partition.clusters)
    kept = [c for c in partition.clusters if c.influence >= gamma]
    return kept, gamma


def merge_members(kept: list[Cluster]) -> set[int]:
    """Disjoint union of the kept clusters' member sets."""
    out: set[int] = set()
    total = 0
    for c in kept:
        out |= c.members
        total += len(c.members)
    if len(out) != total:
        raise InternalInvariantError("kept clusters are not pairwise disjoint")
    return out


def write_partition_csv(partition: Partition, path) -> None:
    """Dump cluster membership as ``cluster_id,slot_index`` rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("cluster_id,slot_index\n")
        for c in partition.clusters:
            for s in sorted(c.members):
                fh.write(f"{c.id},{s}\n")


def write_partition_summary(partition: Partition, path) -> None:
    """Dump per-cluster size and influence as ``cluster_id,size,influence``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("cluster_id,size,influence\n")
        for c in partition.clusters:
            fh.write(f"{c.id},{len(c.members)},{c.influence:.12g}\n")
