"""Cluster registry: lifecycle, signature matching, and the update rule.

Clusters are immutable snapshots (signature, creation time). An update
never edits a matching cluster in place: it builds a replacement that
unions the dense cell's fragment with every match still in its dynamic
stage, links to matches that have gone stable so their label keeps
flowing, and drops anything past its lifetime. Labels are shared
through a union-find store so every linked cluster resolves to one
canonical label.

Matching is served by a transposed bit index: one row per table bit,
one column bit per registered cluster. A k-index cell signature is
tested against every cluster at once by AND-ing its k rows, so lookup
cost does not depend on how many clusters exist.

Concurrency: single writer. ``classify`` is read-only and may run
concurrently with other classifications, but not with an update or
removal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bloom import BloomSignature, ClusterFragment
from .errors import ConfigurationError
from .hashcore import CellSignature

DYNAMIC = "dynamic"
STABLE = "stable"
EXPIRED = "expired"

# Outcome of one clustering update, by what happened to the matches.
CREATED = "created"
CREATED_LINKED = "created_linked"
EXPANDED = "expanded"
MERGED = "merged"

OUTLIER = -1  # reserved label, never issued to a cluster


@dataclass
class GridCluster:
    """One registered cluster: bloom signature plus lifecycle bookkeeping.

    ``links`` holds ids of the stable clusters this cluster was linked
    to at creation; linked clusters always resolve to the same label.
    """

    cluster_id: int
    signature: BloomSignature
    created_at: float
    label: int
    links: set = field(default_factory=set)


def cluster_state(cluster: GridCluster, now: float, time_threshold: float) -> str:
    """Age-based lifecycle: dynamic below half the threshold, stable up
    to the threshold, expired at and beyond it."""
    age = now - cluster.created_at
    if age < time_threshold / 2.0:
        return DYNAMIC
    if age < time_threshold:
        return STABLE
    return EXPIRED


class LabelStore:
    """Union-find over label ids; a linked group resolves to its
    smallest member, so resolution is deterministic and stable."""

    __slots__ = ("_parent", "_next_label")

    def __init__(self) -> None:
        self._parent: dict = {}
        self._next_label = 0

    def fresh(self) -> int:
        label = self._next_label
        self._next_label += 1
        self._parent[label] = label
        return label

    def find(self, label: int) -> int:
        parent = self._parent
        root = label
        while parent[root] != root:
            root = parent[root]
        while parent[label] != root:  # path compression
            parent[label], label = root, parent[label]
        return root

    def merge(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        keep, drop = (ra, rb) if ra < rb else (rb, ra)
        self._parent[drop] = keep
        return keep

    @property
    def issued(self) -> int:
        return self._next_label


class FlatBloomIndex:
    """Transposed signature store over the registered clusters.

    Row ``i`` packs one membership bit per cluster slot into 64-bit
    words: bit ``j`` of row ``i`` is set iff the cluster in slot ``j``
    has signature bit ``i`` set. Slots are recycled through a free list
    and the per-row bitsets grow by whole words.
    """

    def __init__(self, table_bits: int, word_capacity: int = 1):
        self.table_bits = table_bits
        self._rows = np.zeros((table_bits, word_capacity), dtype=np.uint64)
        self._slot_of: dict = {}      # cluster id -> slot
        self._cluster_of: dict = {}   # slot -> cluster id
        self._slot_bits: dict = {}    # slot -> signature bit positions
        self._free: list = []
        self._slots_used = 0
        self.row_fetches = 0  # cumulative instrumentation
        self.row_ands = 0

    def __len__(self) -> int:
        return len(self._slot_of)

    @property
    def word_capacity(self) -> int:
        return self._rows.shape[1]

    def slot_of(self, cluster_id: int) -> int:
        return self._slot_of[cluster_id]

    def cluster_at(self, slot: int) -> int:
        return self._cluster_of[slot]

    def register(
        self, cluster_id: int, signature: BloomSignature, slot: int | None = None
    ) -> int:
        """Insert a cluster's signature; returns the slot it occupies.

        ``slot`` forces a specific column (used when rebuilding); by
        default the lowest free slot is recycled before new ones grow.
        """
        if cluster_id in self._slot_of:
            raise ConfigurationError(f"cluster {cluster_id} already registered")
        if signature.table_bits != self.table_bits:
            raise ConfigurationError("signature geometry does not match the index")
        if slot is None:
            slot = self._free.pop() if self._free else self._new_slot()
        else:
            if slot in self._cluster_of:
                raise ConfigurationError(f"slot {slot} already occupied")
            while self._slots_used <= slot:
                self._free.append(self._new_slot())
            if slot in self._free:
                self._free.remove(slot)
        bit_idx = signature.bit_indices()
        word = slot >> 6
        mask = np.uint64(1 << (slot & 63))
        self._rows[bit_idx, word] |= mask
        self._slot_of[cluster_id] = slot
        self._cluster_of[slot] = cluster_id
        self._slot_bits[slot] = bit_idx
        return slot

    def _new_slot(self) -> int:
        slot = self._slots_used
        self._slots_used += 1
        if slot >= self.word_capacity * 64:
            grow = np.zeros((self.table_bits, self.word_capacity), dtype=np.uint64)
            self._rows = np.concatenate([self._rows, grow], axis=1)
        return slot

    def remove(self, cluster_id: int) -> bool:
        """Clear a cluster's column in every row; unknown ids are a no-op."""
        slot = self._slot_of.pop(cluster_id, None)
        if slot is None:
            return False
        bit_idx = self._slot_bits.pop(slot)
        word = slot >> 6
        mask = np.uint64(1 << (slot & 63))
        self._rows[bit_idx, word] &= ~mask
        del self._cluster_of[slot]
        self._free.append(slot)
        return True

    def candidate_slots(self, sig: CellSignature) -> list:
        """Slots of clusters whose signature covers every index in ``sig``.

        Exactly ``len(sig)`` row fetches and ``len(sig) - 1`` row ANDs,
        independent of the number of registered clusters.
        """
        k = len(sig)
        self.row_fetches += k
        self.row_ands += k - 1
        acc = np.bitwise_and.reduce(self._rows[list(sig)], axis=0)
        slots = []
        base = 0
        for word in acc.tolist():
            while word:
                low = word & -word
                slots.append(base + low.bit_length() - 1)
                word ^= low
            base += 64
        return slots

    def candidates(self, sig: CellSignature) -> list:
        """Cluster ids matching ``sig``, ascending by slot."""
        return [self._cluster_of[s] for s in self.candidate_slots(sig)]

    def occupied_slots(self) -> list:
        return sorted(self._cluster_of)

    def rows_equal(self, other: "FlatBloomIndex") -> bool:
        """Bit-for-bit comparison of the row arrays, zero-extended to a
        common word width."""
        if self.table_bits != other.table_bits:
            return False
        wide = max(self.word_capacity, other.word_capacity)

        def padded(index: "FlatBloomIndex") -> np.ndarray:
            pad = wide - index.word_capacity
            if pad == 0:
                return index._rows
            ext = np.zeros((index.table_bits, pad), dtype=np.uint64)
            return np.concatenate([index._rows, ext], axis=1)

        return bool(np.array_equal(padded(self), padded(other)))


@dataclass(frozen=True)
class UpdateResult:
    """What one clustering update did."""

    cluster_id: int
    label: int
    event: str
    absorbed: tuple = ()
    linked: tuple = ()
    expired: tuple = ()


class ClusterRegistry:
    """Live clusters, their flat index, and the shared label groups."""

    def __init__(self, hash_count: int, partition_size: int, decay_rate: float):
        if not 0.0 < decay_rate < 1.0:
            raise ValueError("decay_rate must lie in (0, 1)")
        self.hash_count = hash_count
        self.partition_size = partition_size
        self.time_threshold = 1.0 / decay_rate
        self.clusters: dict = {}
        self.index = FlatBloomIndex(hash_count * partition_size)
        self.labels = LabelStore()
        self._next_id = 0
        self.created_total = 0
        self.removed_total = 0
        self.expired_total = 0

    def __len__(self) -> int:
        return len(self.clusters)

    def matching_clusters(self, fragment: ClusterFragment) -> list:
        """Ids of clusters whose signature contains at least one of the
        fragment's filters, deduplicated, ascending by slot."""
        slots = set()
        for sig in fragment.cell_signatures:
            slots.update(self.index.candidate_slots(sig))
        return [self.index.cluster_at(s) for s in sorted(slots)]

    def clustering_update(
        self, fragment: ClusterFragment, matches: list, now: float
    ) -> UpdateResult:
        """Fold a dense cell's fragment into the clustering.

        A new cluster is always created from the fragment's union.
        Dynamic matches are absorbed into it and removed; stable matches
        are linked (their label groups merge with the new cluster's);
        expired matches are dropped. The new label prefers a label
        common to both pools, then any stable label, then any dynamic
        one, smallest id first; otherwise a fresh label is issued.
        """
        merged = BloomSignature.from_cells(
            fragment.cell_signatures, self.hash_count, self.partition_size
        )
        bits = merged.bits
        dynamic_labels = set()
        stable_labels = set()
        absorbed = []
        linked = []
        expired = []
        for cid in matches:
            cluster = self.clusters.get(cid)
            if cluster is None:
                continue
            state = cluster_state(cluster, now, self.time_threshold)
            if state == DYNAMIC:
                bits |= cluster.signature.bits
                dynamic_labels.add(self.labels.find(cluster.label))
                absorbed.append(cid)
                self.remove_cluster(cid)
            elif state == STABLE:
                stable_labels.add(self.labels.find(cluster.label))
                linked.append(cid)
            else:
                expired.append(cid)
                self.remove_cluster(cid)
                self.expired_total += 1

        common = dynamic_labels & stable_labels
        if common:
            label = min(common)
        elif stable_labels:
            label = min(stable_labels)
        elif dynamic_labels:
            label = min(dynamic_labels)
        else:
            label = self.labels.fresh()

        cid = self._next_id
        self._next_id += 1
        cluster = GridCluster(
            cid,
            BloomSignature(bits, self.hash_count, self.partition_size),
            now,
            label,
            links=set(linked),
        )
        self.clusters[cid] = cluster
        self.index.register(cid, cluster.signature)
        for sid in linked:
            self.labels.merge(label, self.clusters[sid].label)
        self.created_total += 1

        if len(absorbed) >= 2:
            event = MERGED
        elif len(absorbed) == 1:
            event = EXPANDED
        elif linked:
            event = CREATED_LINKED
        else:
            event = CREATED
        return UpdateResult(cid, label, event, tuple(absorbed), tuple(linked), tuple(expired))

    def classify(self, sig: CellSignature, now: float) -> int:
        """Label of the best non-expired cluster containing ``sig``, or
        OUTLIER when none does.

        Among multiple matches, stable clusters win over dynamic ones,
        then the most recently created, then the lowest slot.
        """
        best_key = None
        best_cluster = None
        for slot in self.index.candidate_slots(sig):
            cluster = self.clusters[self.index.cluster_at(slot)]
            state = cluster_state(cluster, now, self.time_threshold)
            if state == EXPIRED:
                continue
            key = (0 if state == STABLE else 1, -cluster.created_at, slot)
            if best_key is None or key < best_key:
                best_key = key
                best_cluster = cluster
        if best_cluster is None:
            return OUTLIER
        return self.labels.find(best_cluster.label)

    def remove_cluster(self, cluster_id: int) -> bool:
        """Drop a cluster and dissolve links pointing at it; the label
        group survives for remaining members. Unknown ids are a no-op."""
        cluster = self.clusters.pop(cluster_id, None)
        if cluster is None:
            return False
        self.index.remove(cluster_id)
        for other in self.clusters.values():
            other.links.discard(cluster_id)
        self.removed_total += 1
        return True

    def sweep_expired(self, now: float) -> int:
        """Remove every cluster past its lifetime; returns the count."""
        expired = [
            cid
            for cid, cluster in self.clusters.items()
            if cluster_state(cluster, now, self.time_threshold) == EXPIRED
        ]
        for cid in expired:
            self.remove_cluster(cid)
            self.expired_total += 1
        return len(expired)

    def live_counts(self, now: float) -> dict:
        """Registered cluster counts keyed by lifecycle state."""
        counts = {DYNAMIC: 0, STABLE: 0, EXPIRED: 0}
        for cluster in self.clusters.values():
            counts[cluster_state(cluster, now, self.time_threshold)] += 1
        return counts

    def rebuild_index(self) -> FlatBloomIndex:
        """Fresh flat index built from the registered clusters, keeping
        every cluster in its current slot."""
        rebuilt = FlatBloomIndex(self.index.table_bits, self.index.word_capacity)
        for slot in self.index.occupied_slots():
            cid = self.index.cluster_at(slot)
            rebuilt.register(cid, self.clusters[cid].signature, slot=slot)
        return rebuilt
