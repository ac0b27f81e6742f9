"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field

from ..engine import OUTLIER

OUTLIER_LABEL = OUTLIER  # labels are ints; -1 is the reserved outlier value


class ParamsRequest(BaseModel):
    capacity: int = Field(ge=1, description="elements one cluster filter is sized for")
    target_fp: float = Field(gt=0.0, lt=1.0, description="requested false-positive rate")
    decay_rate: float = Field(default=0.001, gt=0.0, lt=1.0)
    density_threshold: float = Field(default=3.0, gt=0.0)
    dim: int = Field(default=2, ge=1)


class ParamsReport(BaseModel):
    capacity: int
    target_fp: float
    hash_count: int
    partition_size: int
    table_bits: int
    table_bytes: int
    predicted_fp: float
    predicted_fp_asymptotic: float
    error_margin: float
    failure_prob: float
    base_hash_count: int
    fragment_capacity: int
    suggested_capacity: int


class GenerateRequest(BaseModel):
    dim: int = Field(default=2, ge=1)
    clusters: int = Field(default=5, ge=1)
    noise_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    min_center_separation: float = Field(default=4.0, ge=0.0)
    cluster_sd: float = Field(default=1.0, gt=0.0)
    total_instances: int = Field(default=10000, ge=1)
    seed: int = 0
    domain_span: Optional[float] = Field(default=None, gt=0.0)


class SessionCreateRequest(BaseModel):
    dim: int = Field(ge=1)
    resolution: float = Field(gt=0.0)
    capacity: Optional[int] = Field(default=None, ge=1)
    capacity_fraction: Optional[float] = Field(
        default=None,
        gt=0.0,
        le=1.0,
        description="size the filter as this fraction of the worst-case fragment load",
    )
    target_fp: float = Field(default=0.01, gt=0.0, lt=1.0)
    decay_rate: float = Field(default=0.001, gt=0.0, lt=1.0)
    density_threshold: float = Field(default=3.0, gt=0.0)
    origin: Optional[List[float]] = None
    seed: int = 0


class SessionInfo(BaseModel):
    session_id: str
    dim: int
    resolution: float
    capacity: int
    target_fp: float
    hash_count: int
    partition_size: int
    table_bits: int
    decay_rate: float
    density_threshold: float
    seed: int


class IngestRequest(BaseModel):
    points: List[List[float]] = Field(min_length=1)
    timestamps: Optional[List[float]] = None


class IngestOutcomeModel(BaseModel):
    accepted: bool
    density: float
    dense: bool
    cluster_event: Optional[str] = None
    label: Optional[int] = None


class IngestResponse(BaseModel):
    outcomes: List[IngestOutcomeModel]
    accepted: int
    rejected: int


class ClassifyRequest(BaseModel):
    points: List[List[float]] = Field(min_length=1)
    at: Optional[float] = None


class ClassifyResponse(BaseModel):
    labels: List[int]  # OUTLIER is -1


class WindowRequest(BaseModel):
    points: List[List[float]] = Field(min_length=1)
    truths: Optional[List[str]] = None
    timestamps: Optional[List[float]] = None
    sweep: bool = True


class WindowMetricsModel(BaseModel):
    window: int
    size: int
    purity: Optional[float] = None
    clusters_dynamic: int
    clusters_stable: int
    dense_events: int
    outlier_fraction: float
    rejected: int


class WindowResponse(BaseModel):
    labels: List[Optional[int]]  # None marks a rejected instance
    metrics: WindowMetricsModel


class StatsResponse(BaseModel):
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


class SweepResponse(BaseModel):
    removed: int


class HealthResponse(BaseModel):
    status: str
    version: str
