"""End-to-end single-pass clustering over a numeric data stream.

Each instance is discretized to a grid cell, folded into the decayed
frequency table, and, when the cell's density estimate rises above the
configured threshold, the cell's neighborhood fragment is folded into
the cluster registry. Classification is a read-only probe of the same
registry and costs a fixed number of index operations regardless of
cluster count or dimensionality.

One logical stream per model: ingest calls are serialized; classify
calls may interleave with each other but not with ingest. Independent
models share nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bloom import make_fragment
from .clustermodel import (
    CREATED,
    CREATED_LINKED,
    DYNAMIC,
    EXPANDED,
    EXPIRED,
    MERGED,
    OUTLIER,
    STABLE,
    ClusterRegistry,
)
from .countmin import DecayedCountMin, is_dense
from .grid import GridConfig, discretize
from .hashcore import HashFamily, cell_signature
from .params import SketchParams

__all__ = ["BloomStreamModel", "IngestOutcome", "ModelStats", "OpCounters", "OUTLIER"]


@dataclass(frozen=True)
class IngestOutcome:
    """What one ingest did. ``cluster_event`` is set only on dense
    arrivals: created, created_linked, expanded, or merged."""

    accepted: bool
    density: float = 0.0
    dense: bool = False
    cluster_event: str | None = None
    cluster_id: int | None = None
    label: int | None = None


@dataclass(frozen=True)
class OpCounters:
    """Cumulative instrumented operation counts.

    ``base_hash_evals`` / ``derived_hash_evals`` cover per-instance cell
    signatures only (ingest and classify); hash work spent building
    dense-cell fragments is tallied separately in
    ``fragment_hash_evals``. Index counters come from the flat cluster
    index.
    """

    base_hash_evals: int = 0
    derived_hash_evals: int = 0
    fragment_hash_evals: int = 0
    index_row_fetches: int = 0
    index_row_ands: int = 0


@dataclass(frozen=True)
class ModelStats:
    """Point-in-time model statistics; counters only ever grow."""

    instances_seen: int
    records_rejected: int
    dense_events: int
    clusters_created: int
    events_created: int
    events_created_linked: int
    events_expanded: int
    events_merged: int
    clusters_removed: int
    clusters_expired: int
    live_dynamic: int
    live_stable: int
    live_expired_pending: int
    labels_issued: int
    fill_ratio: float
    clock: float


class BloomStreamModel:
    """Single-pass clustering model over one data stream."""

    def __init__(self, params: SketchParams, seed: int = 0):
        self.params = params
        self.grid = GridConfig.create(params.resolution, params.dim, params.origin)
        self.family = HashFamily.from_seed(seed, params.hash_count, params.partition_size)
        self.sketch = DecayedCountMin(
            params.hash_count, params.partition_size, params.decay_rate
        )
        self.registry = ClusterRegistry(
            params.hash_count, params.partition_size, params.decay_rate
        )
        self._instances = 0
        self._rejected = 0
        self._dense_events = 0
        self._events = {CREATED: 0, CREATED_LINKED: 0, EXPANDED: 0, MERGED: 0}
        self._base_hash_evals = 0
        self._derived_hash_evals = 0
        self._fragment_hash_evals = 0

    @property
    def clock(self) -> float:
        return self.sketch.clock

    @property
    def instances_seen(self) -> int:
        return self._instances

    @property
    def dense_events(self) -> int:
        return self._dense_events

    def _signature(self, cell):
        self._base_hash_evals += 2
        self._derived_hash_evals += self.params.hash_count
        return cell_signature(cell, self.family)

    def ingest(self, x, t: float | None = None) -> IngestOutcome:
        """Fold one instance into the model.

        ``t`` defaults to the running accepted-instance index (1 per
        arrival); explicit timestamps must be nondecreasing. Malformed
        instances (wrong arity, non-finite values, a regressing clock)
        are counted and leave the model untouched.
        """
        try:
            cell = discretize(x, self.grid)
            if t is None:
                t = float(self._instances + 1)
            elif t < self.sketch.clock:
                raise ValueError(f"clock regression: {t} < {self.sketch.clock}")
            sig = self._signature(cell)
            density = self.sketch.update(sig, t)
        except ValueError:
            self._rejected += 1
            return IngestOutcome(accepted=False)
        self._instances += 1
        if not is_dense(density, self.params.density_threshold):
            return IngestOutcome(accepted=True, density=density)
        self._dense_events += 1
        fragment = make_fragment(cell, self.family)
        self._fragment_hash_evals += 2 * len(fragment)
        matches = self.registry.matching_clusters(fragment)
        result = self.registry.clustering_update(fragment, matches, t)
        self._events[result.event] += 1
        return IngestOutcome(
            accepted=True,
            density=density,
            dense=True,
            cluster_event=result.event,
            cluster_id=result.cluster_id,
            label=self.registry.labels.find(result.label),
        )

    def classify(self, x, t: float | None = None) -> int:
        """Cluster label for an instance, or OUTLIER.

        Read-only. ``t`` defaults to the model clock and must not lie in
        the past; non-finite or mis-shaped instances classify as OUTLIER.
        """
        if t is None:
            t = self.sketch.clock
        try:
            cell = discretize(x, self.grid)
        except ValueError:
            return OUTLIER
        sig = self._signature(cell)
        return self.registry.classify(sig, t)

    def sweep_expired(self, t: float | None = None) -> int:
        """Drop every cluster past its lifetime; returns how many."""
        return self.registry.sweep_expired(self.sketch.clock if t is None else t)

    def counters(self) -> OpCounters:
        return OpCounters(
            base_hash_evals=self._base_hash_evals,
            derived_hash_evals=self._derived_hash_evals,
            fragment_hash_evals=self._fragment_hash_evals,
            index_row_fetches=self.registry.index.row_fetches,
            index_row_ands=self.registry.index.row_ands,
        )

    def snapshot_stats(self) -> ModelStats:
        live = self.registry.live_counts(self.sketch.clock)
        return ModelStats(
            instances_seen=self._instances,
            records_rejected=self._rejected,
            dense_events=self._dense_events,
            clusters_created=self.registry.created_total,
            events_created=self._events[CREATED],
            events_created_linked=self._events[CREATED_LINKED],
            events_expanded=self._events[EXPANDED],
            events_merged=self._events[MERGED],
            clusters_removed=self.registry.removed_total,
            clusters_expired=self.registry.expired_total,
            live_dynamic=live[DYNAMIC],
            live_stable=live[STABLE],
            live_expired_pending=live[EXPIRED],
            labels_issued=self.registry.labels.issued,
            fill_ratio=self.sketch.fill_ratio(),
            clock=self.sketch.clock,
        )
