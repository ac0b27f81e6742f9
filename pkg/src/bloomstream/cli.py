"""Command-line client for the clustering service.

Every subcommand speaks the HTTP API. By default an in-process service
instance backs the client so nothing needs to be running; pass
``--server`` to point the same commands at a live deployment, or use
``serve`` to start one.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 configuration
error.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import math
import sys
from dataclasses import dataclass

import httpx

from . import __version__

OUTLIER_TOKEN = "OUTLIER"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CONFIG = 3

_DEFAULT_LABEL_COL = "label"
_DEFAULT_TIME_COL = "t"


class _UsageError(Exception):
    pass


class _ServiceError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(f"service returned {status}: {detail}")
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); usage errors are 1
        raise _UsageError(message)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise _UsageError(message)


def _make_client(server: str | None) -> httpx.AsyncClient:
    if server:
        return httpx.AsyncClient(base_url=server.rstrip("/"), timeout=300.0)
    from .service.app import create_app

    return httpx.AsyncClient(
        transport=httpx.ASGITransport(app=create_app()),
        base_url="http://bloomstream.local",
        timeout=300.0,
    )


def _checked(response: httpx.Response) -> httpx.Response:
    if response.status_code >= 400:
        raise _ServiceError(response.status_code, response.text.strip())
    return response


# ---------------------------------------------------------------- params


async def _cmd_params(args) -> int:
    _require(args.capacity >= 1, "--capacity must be >= 1")
    _require(0.0 < args.fp < 1.0, "--fp must lie in (0, 1)")
    _require(0.0 < args.decay_rate < 1.0, "--decay-rate must lie in (0, 1)")
    _require(args.density_threshold > 0.0, "--density-threshold must be positive")
    _require(args.dim >= 1, "--dim must be >= 1")
    async with _make_client(args.server) as client:
        response = _checked(
            await client.post(
                "/params",
                json={
                    "capacity": args.capacity,
                    "target_fp": args.fp,
                    "decay_rate": args.decay_rate,
                    "density_threshold": args.density_threshold,
                    "dim": args.dim,
                },
            )
        )
    report = response.json()
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return EXIT_OK
    kb = report["table_bits"] / 8.0 / 1024.0
    print(f"hash functions (k):     {report['hash_count']}")
    print(f"partition size (p):     {report['partition_size']}")
    print(f"table bits (m):         {report['table_bits']} ({kb:.2f} KB)")
    print(f"memory bytes:           {report['table_bytes']}")
    print(f"predicted fp:           {report['predicted_fp']:.6f}")
    print(f"error margin:           {report['error_margin']:.3e}")
    print(f"failure probability:    {report['failure_prob']:.3e}")
    print(f"base hash count:        {report['base_hash_count']}")
    print(f"fragment capacity:      {report['fragment_capacity']}")
    print(f"suggested capacity:     {report['suggested_capacity']}")
    return EXIT_OK


# ------------------------------------------------------------------- gen


async def _cmd_gen(args) -> int:
    _require(args.dim >= 1, "--dim must be >= 1")
    _require(args.clusters >= 1, "--clusters must be >= 1")
    _require(0.0 <= args.noise < 1.0, "--noise must lie in [0, 1)")
    _require(args.separation >= 0.0, "--separation must be >= 0")
    _require(args.sd > 0.0, "--sd must be positive")
    _require(args.instances >= 1, "--instances must be >= 1")
    payload = {
        "dim": args.dim,
        "clusters": args.clusters,
        "noise_fraction": args.noise,
        "min_center_separation": args.separation,
        "cluster_sd": args.sd,
        "total_instances": args.instances,
        "seed": args.seed,
    }
    if args.domain_span is not None:
        _require(args.domain_span > 0.0, "--domain-span must be positive")
        payload["domain_span"] = args.domain_span
    async with _make_client(args.server) as client:
        response = _checked(await client.post("/streams/generate", json=payload))
    with open(args.out, "w", encoding="utf-8", newline="") as out:
        out.write(response.text)
    print(f"wrote {args.instances} instances to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------------- run


@dataclass
class RunConfig:
    """Validated column layout and model knobs for one run."""

    feature_cols: list
    label_col: int | None
    time_col: int | None
    dim: int
    horizon: int
    assignments_path: str
    metrics_path: str


@dataclass
class _Row:
    row_id: int
    point: list
    truth: str | None
    tstamp: float | None


class _StreamingMinMax:
    """Running per-feature min/max scaling into [0, 1].

    True stream extrema are unknowable upfront; values seen before the
    running extrema settle are scaled by the warm-up estimate, so this
    is an approximation of offline min-max normalization.
    """

    def __init__(self, dim: int):
        self.lo = [math.inf] * dim
        self.hi = [-math.inf] * dim

    def observe(self, point) -> None:
        for i, v in enumerate(point):
            if v < self.lo[i]:
                self.lo[i] = v
            if v > self.hi[i]:
                self.hi[i] = v

    def scale(self, point) -> list:
        scaled = []
        for i, v in enumerate(point):
            span = self.hi[i] - self.lo[i]
            scaled.append((v - self.lo[i]) / span if span > 0.0 else 0.0)
        return scaled


def _normalized(rows, dim: int, warmup: int):
    scaler = _StreamingMinMax(dim)
    buffered = []
    iterator = iter(rows)
    for row in iterator:
        buffered.append(row)
        scaler.observe(row.point)
        if len(buffered) >= warmup:
            break
    for row in buffered:
        row.point = scaler.scale(row.point)
        yield row
    for row in iterator:
        scaler.observe(row.point)
        row.point = scaler.scale(row.point)
        yield row


def _resolve_columns(args, first_row, header) -> RunConfig:
    ncols = len(header) if header is not None else len(first_row)

    def _index_of(spec: str, what: str) -> int:
        if header is not None:
            if spec in header:
                return header.index(spec)
            if spec.isdigit():
                return int(spec)
            raise _UsageError(f"{what} column {spec!r} not found in header {header}")
        try:
            return int(spec)
        except ValueError:
            raise _UsageError(f"{what} column must be an index when --no-header is set")

    label_col = None
    if args.label_col is not None:
        label_col = _index_of(args.label_col, "label")
    elif header is not None and _DEFAULT_LABEL_COL in header:
        label_col = header.index(_DEFAULT_LABEL_COL)

    time_col = None
    if args.time_col is not None:
        time_col = _index_of(args.time_col, "time")
    elif header is not None and _DEFAULT_TIME_COL in header:
        time_col = header.index(_DEFAULT_TIME_COL)

    if args.features:
        feature_cols = [_index_of(c.strip(), "feature") for c in args.features.split(",")]
    else:
        taken = {label_col, time_col}
        feature_cols = [i for i in range(ncols) if i not in taken]
    _require(feature_cols, "no feature columns left after excluding label/time")
    for col in feature_cols + [c for c in (label_col, time_col) if c is not None]:
        _require(0 <= col < ncols, f"column index {col} out of range for {ncols} columns")

    dim = len(feature_cols)
    if args.dim is not None:
        _require(
            args.dim == dim,
            f"--dim {args.dim} does not match the {dim} selected feature columns",
        )
    return RunConfig(
        feature_cols=feature_cols,
        label_col=label_col,
        time_col=time_col,
        dim=dim,
        horizon=args.horizon,
        assignments_path=args.assignments or f"{args.input}.assignments.csv",
        metrics_path=args.metrics or f"{args.input}.metrics.jsonl",
    )


def _parse_rows(reader, config: RunConfig, counters: dict):
    needed = max(
        config.feature_cols
        + [c for c in (config.label_col, config.time_col) if c is not None]
    )
    for row_id, row in enumerate(reader):
        counters["rows"] += 1
        if len(row) <= needed:
            counters["malformed"] += 1
            continue
        try:
            point = [float(row[c]) for c in config.feature_cols]
            tstamp = float(row[config.time_col]) if config.time_col is not None else None
        except ValueError:
            counters["malformed"] += 1
            continue
        truth = row[config.label_col] if config.label_col is not None else None
        yield _Row(row_id, point, truth, tstamp)


async def _cmd_run(args) -> int:
    _require(args.horizon >= 1, "--horizon must be >= 1")
    _require(0.0 < args.fp < 1.0, "--fp must lie in (0, 1)")
    _require(0.0 < args.decay_rate < 1.0, "--decay-rate must lie in (0, 1)")
    _require(args.density_threshold > 0.0, "--density-threshold must be positive")
    _require(args.resolution > 0.0, "--resolution must be positive")
    if args.capacity is not None:
        _require(args.capacity >= 1, "--capacity must be >= 1")
    if args.capacity_fraction is not None:
        _require(
            0.0 < args.capacity_fraction <= 1.0,
            "--capacity-fraction must lie in (0, 1]",
        )
    _require(args.normalize_warmup >= 1, "--normalize-warmup must be >= 1")

    infile = open(args.input, newline="", encoding="utf-8")
    with infile:
        reader = csv.reader(infile)
        header = None
        first_row = None
        if args.no_header:
            first_row = next(reader, None)
        else:
            header = next(reader, None)
        if header is None and first_row is None:
            print("empty input: 0 rows, 0 windows")
            return EXIT_OK

        config = _resolve_columns(args, first_row, header)
        origin = None
        if args.origin:
            try:
                origin = [float(v) for v in args.origin.split(",")]
            except ValueError:
                raise _UsageError("--origin must be a comma-separated float list")
            _require(len(origin) == config.dim, "--origin length must match dim")

        counters = {"rows": 0, "malformed": 0}
        rows = _parse_rows(_chain_first(first_row, reader), config, counters)
        if args.normalize:
            rows = _normalized(rows, config.dim, args.normalize_warmup)

        session_payload = {
            "dim": config.dim,
            "resolution": args.resolution,
            "target_fp": args.fp,
            "decay_rate": args.decay_rate,
            "density_threshold": args.density_threshold,
            "seed": args.seed,
        }
        if origin is not None:
            session_payload["origin"] = origin
        if args.capacity is not None:
            session_payload["capacity"] = args.capacity
        elif args.capacity_fraction is not None:
            session_payload["capacity_fraction"] = args.capacity_fraction

        async with _make_client(args.server) as client:
            session = _checked(
                await client.post("/sessions", json=session_payload)
            ).json()
            sid = session["session_id"]
            windows = 0
            rejected = 0
            assigned = 0
            try:
                with open(
                    config.assignments_path, "w", encoding="utf-8", newline=""
                ) as afile, open(
                    config.metrics_path, "w", encoding="utf-8", newline=""
                ) as mfile:
                    afile.write("row_id,predicted_label\n")
                    async for done in _windows(rows, config.horizon):
                        result = await _post_window(
                            client, sid, done, config, sweep=not args.no_sweep
                        )
                        windows += 1
                        rejected += result["metrics"]["rejected"]
                        assigned += _write_window(
                            afile, mfile, done, result, config
                        )
            finally:
                await client.delete(f"/sessions/{sid}")

    print(
        f"rows={counters['rows']} malformed={counters['malformed']} "
        f"rejected={rejected} windows={windows} assigned={assigned} "
        f"assignments={config.assignments_path} metrics={config.metrics_path}"
    )
    return EXIT_OK


def _chain_first(first_row, reader):
    if first_row is not None:
        yield first_row
    yield from reader


async def _windows(rows, horizon: int):
    """Yield full batches of ``horizon`` rows, then the partial tail."""
    batch: list = []
    for row in rows:
        batch.append(row)
        if len(batch) == horizon:
            yield batch
            batch = []
    if batch:
        yield batch


async def _post_window(client, sid: str, batch: list, config: RunConfig, sweep: bool):
    payload = {
        "points": [row.point for row in batch],
        "sweep": sweep,
    }
    if config.label_col is not None:
        payload["truths"] = [row.truth for row in batch]
    if config.time_col is not None:
        payload["timestamps"] = [row.tstamp for row in batch]
    else:
        payload["timestamps"] = [float(row.row_id + 1) for row in batch]
    return _checked(await client.post(f"/sessions/{sid}/window", json=payload)).json()


def _write_window(afile, mfile, batch: list, result: dict, config: RunConfig) -> int:
    assigned = 0
    for row, label in zip(batch, result["labels"]):
        if label is None:
            continue
        token = OUTLIER_TOKEN if label < 0 else str(label)
        afile.write(f"{row.row_id},{token}\n")
        assigned += 1
    record = dict(result["metrics"])
    if config.label_col is None:
        record.pop("purity", None)
    mfile.write(json.dumps(record, sort_keys=True) + "\n")
    return assigned


# ----------------------------------------------------------------- serve


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(
        "bloomstream.service.app:app",
        host=args.host,
        port=args.port,
        log_level="info",
    )
    return EXIT_OK


# ------------------------------------------------------------ entry point


def _build_parser() -> _Parser:
    parser = _Parser(prog="bloomstream", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="derive sketch geometry and guarantees")
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--fp", type=float, required=True)
    p.add_argument("--decay-rate", type=float, default=0.001)
    p.add_argument("--density-threshold", type=float, default=3.0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--server", default=None)

    g = sub.add_parser("gen", help="generate a synthetic benchmark stream CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--clusters", type=int, default=5)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--separation", type=float, default=4.0)
    g.add_argument("--sd", type=float, default=1.0)
    g.add_argument("--instances", type=int, default=10000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--domain-span", type=float, default=None)
    g.add_argument("--server", default=None)

    r = sub.add_parser("run", help="cluster a CSV stream and emit metrics")
    r.add_argument("--input", required=True)
    r.add_argument("--assignments", default=None,
                   help="output CSV (default: <input>.assignments.csv)")
    r.add_argument("--metrics", default=None,
                   help="output JSONL (default: <input>.metrics.jsonl)")
    r.add_argument("--features", default=None,
                   help="comma-separated feature column names (or indices with --no-header)")
    r.add_argument("--label-col", default=None,
                   help="ground-truth column (default: 'label' when present)")
    r.add_argument("--time-col", default=None,
                   help="timestamp column (default: 't' when present)")
    r.add_argument("--no-header", action="store_true")
    r.add_argument("--horizon", type=int, default=1000)
    r.add_argument("--dim", type=int, default=None,
                   help="expected dimensionality (checked against selected columns)")
    r.add_argument("--capacity", type=int, default=None)
    r.add_argument("--capacity-fraction", type=float, default=None)
    r.add_argument("--fp", type=float, default=0.01)
    r.add_argument("--decay-rate", type=float, default=0.001)
    r.add_argument("--density-threshold", type=float, default=3.0)
    r.add_argument("--resolution", type=float, default=1.0)
    r.add_argument("--origin", default=None, help="comma-separated grid origin")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--normalize", action="store_true",
                   help="streaming min-max scaling into [0, 1] (approximate)")
    r.add_argument("--normalize-warmup", type=int, default=100)
    r.add_argument("--no-sweep", action="store_true",
                   help="skip the expiry sweep between windows")
    r.add_argument("--server", default=None)

    s = sub.add_parser("serve", help="start the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)

    return parser


_COMMANDS = {
    "params": _cmd_params,
    "gen": _cmd_gen,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        return asyncio.run(_COMMANDS[args.command](args))
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if exc.status < 500 else EXIT_IO
    except (OSError, httpx.TransportError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
