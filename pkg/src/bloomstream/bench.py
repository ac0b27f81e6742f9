"""Synthetic Gaussian stream generation and windowed purity evaluation.

Streams are well-separated Gaussian blobs over a uniform noise floor;
evaluation is prequential: every instance is ingested and immediately
classified at its arrival time, and quality is reported per horizon
window.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .clustermodel import DYNAMIC, STABLE
from .engine import OUTLIER, BloomStreamModel
from .errors import ConfigurationError

NOISE_LABEL = "NOISE"

_CENTER_ATTEMPTS_PER_CLUSTER = 1000


@dataclass(frozen=True)
class SyntheticStreamConfig:
    """Gaussian blobs with a uniform noise floor.

    Cluster centers are drawn by rejection sampling inside a cube of
    side ``domain_span`` (auto-sized from the separation when None)
    until all pairwise distances reach ``min_center_separation``. Noise
    points are uniform over the centers' bounding box inflated by three
    standard deviations.
    """

    dim: int = 2
    clusters: int = 5
    noise_fraction: float = 0.1
    min_center_separation: float = 4.0
    cluster_sd: float = 1.0
    window_length: int = 1000
    total_instances: int = 10000
    seed: int = 0
    domain_span: float | None = None

    def __post_init__(self) -> None:
        if self.dim < 1 or self.clusters < 1 or self.total_instances < 1:
            raise ValueError("dim, clusters and total_instances must be >= 1")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValueError("noise_fraction must lie in [0, 1)")
        if self.min_center_separation < 0.0 or not self.cluster_sd > 0.0:
            raise ValueError("separation must be >= 0 and cluster_sd > 0")
        if self.window_length < 1:
            raise ValueError("window_length must be >= 1")


def _auto_span(cfg: SyntheticStreamConfig) -> float:
    # Room for ~4 separation radii per center along each axis: keeps the
    # enforced minimum a floor rather than the typical distance, so
    # neighboring blobs do not sit in each other's tails.
    per_axis = math.ceil(cfg.clusters ** (1.0 / cfg.dim))
    return 4.0 * max(cfg.min_center_separation, 1.0) * (per_axis + 1)


def _draw_centers(rng: random.Random, cfg: SyntheticStreamConfig) -> list:
    span = cfg.domain_span if cfg.domain_span is not None else _auto_span(cfg)
    sep_sq = cfg.min_center_separation ** 2
    centers: list = []
    attempts = 0
    limit = _CENTER_ATTEMPTS_PER_CLUSTER * cfg.clusters
    while len(centers) < cfg.clusters:
        if attempts >= limit:
            raise ConfigurationError(
                f"cannot place {cfg.clusters} centers with separation "
                f"{cfg.min_center_separation} in a span-{span:g} domain"
            )
        attempts += 1
        cand = tuple(rng.uniform(0.0, span) for _ in range(cfg.dim))
        if all(
            sum((a - b) ** 2 for a, b in zip(cand, c)) >= sep_sq for c in centers
        ):
            centers.append(cand)
    return centers


def generate_stream(cfg: SyntheticStreamConfig) -> Iterator[tuple]:
    """Yield ``(point, truth_label)`` pairs, reproducible from the seed.

    Truth labels are ``c0 .. c{clusters-1}`` and ``NOISE``. Center
    placement runs eagerly so an unsatisfiable separation fails here,
    not at first iteration.
    """
    rng = random.Random(cfg.seed)
    centers = _draw_centers(rng, cfg)
    pad = 3.0 * cfg.cluster_sd
    lo = [min(c[i] for c in centers) - pad for i in range(cfg.dim)]
    hi = [max(c[i] for c in centers) + pad for i in range(cfg.dim)]
    labels = [f"c{j}" for j in range(cfg.clusters)]

    def emit() -> Iterator[tuple]:
        for _ in range(cfg.total_instances):
            if rng.random() < cfg.noise_fraction:
                point = tuple(rng.uniform(lo[i], hi[i]) for i in range(cfg.dim))
                yield point, NOISE_LABEL
            else:
                j = rng.randrange(cfg.clusters)
                center = centers[j]
                point = tuple(
                    rng.gauss(center[i], cfg.cluster_sd) for i in range(cfg.dim)
                )
                yield point, labels[j]

    return emit()


def purity(assignments: Iterable[tuple]) -> float | None:
    """Average dominant-truth fraction over predicted clusters.

    Instances predicted OUTLIER are left out; if nothing remains there
    is no defined value and the result is None. Invariant under any
    relabeling of the predicted clusters.
    """
    groups: dict = {}
    for predicted, truth in assignments:
        if predicted == OUTLIER:
            continue
        counter = groups.get(predicted)
        if counter is None:
            counter = groups[predicted] = Counter()
        counter[truth] += 1
    if not groups:
        return None
    return sum(
        max(counter.values()) / sum(counter.values()) for counter in groups.values()
    ) / len(groups)


@dataclass
class EvalWindow:
    """Prediction/truth pairs collected over one evaluation horizon."""

    horizon: int
    assignments: list = field(default_factory=list)

    def purity(self) -> float | None:
        return purity(self.assignments)


@dataclass(frozen=True)
class WindowMetrics:
    """Per-window evaluation record."""

    window: int
    size: int
    purity: float | None
    clusters_dynamic: int
    clusters_stable: int
    dense_events: int
    outlier_fraction: float
    rejected: int


def evaluate_over_horizons(
    model: BloomStreamModel,
    stream: Iterable[tuple],
    horizon: int,
    sweep: bool = True,
) -> list:
    """Prequential evaluation: ingest each instance, classify it at its
    arrival time, and emit one metrics record per ``horizon`` instances
    (the tail becomes a partial window). The expiry sweep runs between
    windows when ``sweep`` is set."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    metrics: list = []
    window = EvalWindow(horizon)
    size = 0
    rejected = 0
    outliers = 0
    dense_mark = model.dense_events

    def flush() -> None:
        nonlocal window, size, rejected, outliers, dense_mark
        live = model.registry.live_counts(model.clock)
        metrics.append(
            WindowMetrics(
                window=len(metrics),
                size=size,
                purity=window.purity(),
                clusters_dynamic=live[DYNAMIC],
                clusters_stable=live[STABLE],
                dense_events=model.dense_events - dense_mark,
                outlier_fraction=outliers / size,
                rejected=rejected,
            )
        )
        window = EvalWindow(horizon)
        size = 0
        rejected = 0
        outliers = 0
        dense_mark = model.dense_events

    for point, truth in stream:
        outcome = model.ingest(point)
        size += 1
        if not outcome.accepted:
            rejected += 1
        else:
            predicted = model.classify(point)
            if predicted == OUTLIER:
                outliers += 1
            window.assignments.append((predicted, truth))
        if size == horizon:
            flush()
            if sweep:
                model.sweep_expired()
    if size:
        flush()
    return metrics
