"""HTTP service exposing the clustering engine.

Sessions hold long-lived models; clients stream instance batches into a
session and read labels, window metrics, and model statistics back.
Parameter derivation and synthetic stream generation are stateless
helpers on the side.
"""

from __future__ import annotations

import io

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse

from .. import __version__
from ..bench import (
    EvalWindow,
    SyntheticStreamConfig,
    WindowMetrics,
    generate_stream,
)
from ..clustermodel import DYNAMIC, STABLE
from ..engine import OUTLIER, BloomStreamModel
from ..errors import ConfigurationError
from ..params import (
    base_hash_count,
    fragment_capacity,
    make_params,
    predicted_fp,
    predicted_fp_asymptotic,
    suggested_capacity,
)
from . import schemas
from .sessions import Session, SessionStore


def create_app() -> FastAPI:
    app = FastAPI(
        title="bloomstream",
        version=__version__,
        description="Single-pass probabilistic stream clustering service",
    )
    store = SessionStore()
    app.state.sessions = store

    @app.exception_handler(ConfigurationError)
    async def _configuration_error(request: Request, exc: ConfigurationError):
        return PlainTextResponse(str(exc), status_code=400)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return PlainTextResponse(str(exc), status_code=400)

    def _session(session_id: str) -> Session:
        session = store.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/params", response_model=schemas.ParamsReport)
    def derive_params(request: schemas.ParamsRequest):
        params = make_params(
            request.capacity,
            request.target_fp,
            decay_rate=request.decay_rate,
            density_threshold=request.density_threshold,
            dim=request.dim,
        )
        if params.error_margin < 1.0 and params.failure_prob < 1.0:
            base_count = base_hash_count(params.error_margin, params.failure_prob)
        else:
            # margin above 1 makes the guarantee vacuous; the floor of
            # two base hashes is all the construction ever needs
            base_count = 2
        return schemas.ParamsReport(
            capacity=params.capacity,
            target_fp=params.target_fp,
            hash_count=params.hash_count,
            partition_size=params.partition_size,
            table_bits=params.table_bits,
            table_bytes=params.table_bytes,
            predicted_fp=predicted_fp(params.table_bits, params.hash_count, params.capacity),
            predicted_fp_asymptotic=predicted_fp_asymptotic(
                params.table_bits, params.hash_count, params.capacity
            ),
            error_margin=params.error_margin,
            failure_prob=params.failure_prob,
            base_hash_count=base_count,
            fragment_capacity=fragment_capacity(
                params.decay_rate, params.density_threshold, params.dim
            ),
            suggested_capacity=suggested_capacity(
                params.decay_rate, params.density_threshold, params.dim
            ),
        )

    @app.post("/streams/generate")
    def generate(request: schemas.GenerateRequest) -> PlainTextResponse:
        cfg = SyntheticStreamConfig(
            dim=request.dim,
            clusters=request.clusters,
            noise_fraction=request.noise_fraction,
            min_center_separation=request.min_center_separation,
            cluster_sd=request.cluster_sd,
            total_instances=request.total_instances,
            seed=request.seed,
            domain_span=request.domain_span,
        )
        out = io.StringIO()
        out.write(",".join(f"f{i + 1}" for i in range(cfg.dim)) + ",label\n")
        for point, truth in generate_stream(cfg):
            out.write(",".join(repr(v) for v in point) + f",{truth}\n")
        return PlainTextResponse(out.getvalue(), media_type="text/csv")

    @app.post("/sessions", response_model=schemas.SessionInfo, status_code=201)
    def create_session(request: schemas.SessionCreateRequest):
        capacity = request.capacity
        if capacity is None:
            fraction = request.capacity_fraction or 0.125
            capacity = suggested_capacity(
                request.decay_rate, request.density_threshold, request.dim, fraction
            )
        params = make_params(
            capacity,
            request.target_fp,
            decay_rate=request.decay_rate,
            density_threshold=request.density_threshold,
            dim=request.dim,
            resolution=request.resolution,
            origin=request.origin,
        )
        session = store.create(BloomStreamModel(params, seed=request.seed), request.seed)
        return _session_info(session)

    def _session_info(session: Session) -> schemas.SessionInfo:
        params = session.model.params
        return schemas.SessionInfo(
            session_id=session.session_id,
            dim=params.dim,
            resolution=params.resolution,
            capacity=params.capacity,
            target_fp=params.target_fp,
            hash_count=params.hash_count,
            partition_size=params.partition_size,
            table_bits=params.table_bits,
            decay_rate=params.decay_rate,
            density_threshold=params.density_threshold,
            seed=session.seed,
        )

    @app.get("/sessions")
    def list_sessions() -> list:
        return store.ids()

    @app.get("/sessions/{session_id}", response_model=schemas.SessionInfo)
    def session_info(session_id: str):
        return _session_info(_session(session_id))

    @app.delete("/sessions/{session_id}", status_code=204)
    def drop_session(session_id: str):
        if not store.drop(session_id):
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    @app.post("/sessions/{session_id}/ingest", response_model=schemas.IngestResponse)
    def ingest(session_id: str, request: schemas.IngestRequest):
        session = _session(session_id)
        timestamps = _check_timestamps(request.timestamps, len(request.points))
        outcomes = []
        accepted = 0
        with session.lock:
            for i, point in enumerate(request.points):
                outcome = session.model.ingest(
                    point, t=None if timestamps is None else timestamps[i]
                )
                accepted += outcome.accepted
                outcomes.append(
                    schemas.IngestOutcomeModel(
                        accepted=outcome.accepted,
                        density=outcome.density,
                        dense=outcome.dense,
                        cluster_event=outcome.cluster_event,
                        label=outcome.label,
                    )
                )
        return schemas.IngestResponse(
            outcomes=outcomes, accepted=accepted, rejected=len(outcomes) - accepted
        )

    @app.post("/sessions/{session_id}/classify", response_model=schemas.ClassifyResponse)
    def classify(session_id: str, request: schemas.ClassifyRequest):
        session = _session(session_id)
        with session.lock:
            labels = [session.model.classify(p, t=request.at) for p in request.points]
        return schemas.ClassifyResponse(labels=labels)

    @app.post("/sessions/{session_id}/window", response_model=schemas.WindowResponse)
    def run_window(session_id: str, request: schemas.WindowRequest):
        """Prequential step over one window: ingest each instance, classify
        it at its arrival time, and report window metrics."""
        session = _session(session_id)
        truths = request.truths
        if truths is not None and len(truths) != len(request.points):
            raise ConfigurationError("truths length must match points length")
        timestamps = _check_timestamps(request.timestamps, len(request.points))
        model = session.model
        labels: list = []
        window = EvalWindow(len(request.points))
        rejected = 0
        outliers = 0
        with session.lock:
            dense_mark = model.dense_events
            for i, point in enumerate(request.points):
                outcome = model.ingest(
                    point, t=None if timestamps is None else timestamps[i]
                )
                if not outcome.accepted:
                    rejected += 1
                    labels.append(None)
                    continue
                predicted = model.classify(point)
                labels.append(predicted)
                if predicted == OUTLIER:
                    outliers += 1
                if truths is not None:
                    window.assignments.append((predicted, truths[i]))
            live = model.registry.live_counts(model.clock)
            metrics = WindowMetrics(
                window=session.windows_served,
                size=len(request.points),
                purity=window.purity() if truths is not None else None,
                clusters_dynamic=live[DYNAMIC],
                clusters_stable=live[STABLE],
                dense_events=model.dense_events - dense_mark,
                outlier_fraction=outliers / len(request.points),
                rejected=rejected,
            )
            session.windows_served += 1
            if request.sweep:
                model.sweep_expired()
        return schemas.WindowResponse(
            labels=labels, metrics=schemas.WindowMetricsModel(**metrics.__dict__)
        )

    @app.get("/sessions/{session_id}/stats", response_model=schemas.StatsResponse)
    def stats(session_id: str):
        session = _session(session_id)
        with session.lock:
            snapshot = session.model.snapshot_stats()
        return schemas.StatsResponse(**snapshot.__dict__)

    @app.post("/sessions/{session_id}/sweep", response_model=schemas.SweepResponse)
    def sweep(session_id: str):
        session = _session(session_id)
        with session.lock:
            removed = session.model.sweep_expired()
        return schemas.SweepResponse(removed=removed)

    return app


def _check_timestamps(timestamps, expected: int):
    if timestamps is not None and len(timestamps) != expected:
        raise ConfigurationError("timestamps length must match points length")
    return timestamps


app = create_app()
