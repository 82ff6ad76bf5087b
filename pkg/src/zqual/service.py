"""Interactive analysis backend: translates JSON queries into kernel
calls, caches payloads so identical queries are answered byte-for-byte
from memory, and runs compressor sweeps as polled background jobs."""

from __future__ import annotations

import json
import math
import os
import threading
import time
import uuid

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import Response

from . import checker, driver, spectral
from .datacore import AnalysisConfig, Dataset, DatasetDescriptor, ErrorBoundSpec, load_dataset
from .properties import (
    AnalysisError,
    analyze_properties,
    autocorrelation,
    basic_stats,
    block_entropy,
    distribution,
    entropy,
    pca_summary,
    power_spectrum,
)

ANALYSES = (
    "stats", "distribution", "entropy_map", "autocorrelation", "psd", "pca",
    "error_pdf", "distortion", "rate_distortion", "error_autocorrelation",
    "spectrum_diff", "derived_comparison", "speed",
)

# analyses that run compressor subprocesses and therefore go through jobs
JOB_ANALYSES = frozenset(ANALYSES[6:])

DEFAULT_CACHE_CAP = 1024


def sanitize(value):
    """JSON-safe copy: infinities become the string "inf"/"-inf"."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {k: sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    return value


def canonical_key(query: dict) -> str:
    """Canonical serialization: key order and whitespace normalized, list
    order preserved (bound order is semantic for curves)."""
    return json.dumps(query, sort_keys=True, separators=(",", ":"))


class PayloadCache:
    """In-memory cache of serialized payloads with atomic get-or-compute;
    oldest entries are evicted beyond the cap."""

    def __init__(self, cap: int = DEFAULT_CACHE_CAP):
        self.cap = cap
        self._entries: dict[str, str] = {}
        self._order: list[str] = []
        self._hits: dict[str, int] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}

    def get_or_compute(self, key: str, compute) -> tuple[str, bool]:
        """Returns (payload JSON string, was_cached). `compute` runs at most
        once per key even under concurrent identical queries."""
        with self._lock:
            if key in self._entries:
                self._hits[key] = self._hits.get(key, 0) + 1
                return self._entries[key], True
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            with self._lock:
                if key in self._entries:
                    self._hits[key] = self._hits.get(key, 0) + 1
                    return self._entries[key], True
            payload = compute()
            with self._lock:
                self._entries[key] = payload
                self._order.append(key)
                while len(self._order) > self.cap:
                    oldest = self._order.pop(0)
                    self._entries.pop(oldest, None)
                    self._hits.pop(oldest, None)
            return payload, False

    def peek(self, key: str) -> str | None:
        with self._lock:
            if key in self._entries:
                self._hits[key] = self._hits.get(key, 0) + 1
                return self._entries[key]
            return None


class QueryError(ValueError):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


class AnalysisService:
    def __init__(self, config: AnalysisConfig, cache_cap: int = DEFAULT_CACHE_CAP):
        self.config = config
        self.cache = PayloadCache(cache_cap)
        self.jobs: dict[str, dict] = {}
        self._jobs_lock = threading.Lock()
        self._datasets: dict[str, Dataset] = {}
        self._stores: dict[str, driver.ResultStore] = {}
        self._run_lock = threading.Lock()  # serializes compressor subprocesses

    # -- catalog ---------------------------------------------------------
    def catalog(self) -> dict:
        from .cli import resolve_compressors

        return {
            "datasets": [
                {"id": d.id, "dims": list(d.dims), "precision": d.precision,
                 "variable": d.variable_name}
                for d in self.config.datasets
            ],
            "compressors": [c.id for c in resolve_compressors(self.config)],
            "analyses": list(ANALYSES),
        }

    # -- query validation ------------------------------------------------
    def normalize_query(self, body: dict) -> dict:
        if not isinstance(body, dict):
            raise QueryError("query must be a JSON object")
        analysis = body.get("analysis")
        if analysis not in ANALYSES:
            raise QueryError(f"unknown analysis {analysis!r}")
        dataset_id = body.get("dataset_id")
        if not isinstance(dataset_id, str):
            raise QueryError("dataset_id must be a string")
        try:
            self.config.dataset(dataset_id)
        except KeyError:
            raise QueryError(f"unknown dataset {dataset_id!r}", status=404) from None
        compressor_ids = body.get("compressor_ids", [])
        if not isinstance(compressor_ids, list):
            raise QueryError("compressor_ids must be a list")
        from .cli import find_compressor
        for cid in compressor_ids:
            try:
                find_compressor(self.config, cid)
            except KeyError:
                raise QueryError(f"unknown compressor {cid!r}", status=404) from None
        bounds = []
        for item in body.get("bound_sweep", []):
            try:
                bounds.append({"kind": item["kind"],
                               "magnitude": float(item["magnitude"])})
                ErrorBoundSpec(item["kind"], float(item["magnitude"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise QueryError(f"invalid bound {item!r}: {exc}") from None
        params = body.get("params", {}) or {}
        if not isinstance(params, dict):
            raise QueryError("params must be an object")
        params = self._validate_params(analysis, params)
        if analysis in JOB_ANALYSES:
            if not compressor_ids:
                raise QueryError(f"analysis {analysis!r} requires compressor_ids")
            if not bounds:
                raise QueryError(f"analysis {analysis!r} requires bound_sweep")
        return {"dataset_id": dataset_id, "compressor_ids": compressor_ids,
                "bound_sweep": bounds, "analysis": analysis, "params": params}

    def _validate_params(self, analysis: str, params: dict) -> dict:
        out = {}
        if "bins" in params:
            bins = params["bins"]
            if not isinstance(bins, int) or bins < 2:
                raise QueryError("bins must be an integer >= 2")
            out["bins"] = bins
        if "max_lag" in params:
            lag = params["max_lag"]
            if not isinstance(lag, int) or lag < 1:
                raise QueryError("max_lag must be a positive integer")
            out["max_lag"] = lag
        if "block_dims" in params:
            block = params["block_dims"]
            if (not isinstance(block, list) or not block
                    or any(not isinstance(b, int) or b < 1 for b in block)):
                raise QueryError("block_dims must be a list of positive integers")
            out["block_dims"] = block
        if "eb_abs" in params:
            eb = params["eb_abs"]
            if not isinstance(eb, (int, float)) or eb <= 0:
                raise QueryError("eb_abs must be a positive number")
            out["eb_abs"] = float(eb)
        if "kind" in params:
            if params["kind"] not in checker.DERIVED_KINDS:
                raise QueryError(f"unknown derived-field kind {params['kind']!r}")
            out["kind"] = params["kind"]
        unknown = set(params) - {"bins", "max_lag", "block_dims", "eb_abs", "kind"}
        if unknown:
            raise QueryError(f"unknown params {sorted(unknown)}")
        return out

    # -- kernel dispatch ---------------------------------------------------
    def _dataset(self, dataset_id: str) -> Dataset:
        if dataset_id not in self._datasets:
            self._datasets[dataset_id] = load_dataset(self.config.dataset(dataset_id))
        return self._datasets[dataset_id]

    def _reports(self, query: dict):
        """Compression reports for every (compressor, bound) of the query,
        computed through the per-dataset result store."""
        from .cli import find_compressor

        dataset_id = query["dataset_id"]
        descriptor = self.config.dataset(dataset_id)
        orig = self._dataset(dataset_id)
        store = self._stores.setdefault(dataset_id, driver.ResultStore())
        workdir = os.path.join(self.config.output_dir, "work")
        out = []
        for cid in query["compressor_ids"]:
            spec = find_compressor(self.config, cid)
            for b in query["bound_sweep"]:
                bound = ErrorBoundSpec(b["kind"], b["magnitude"])
                try:
                    report = store.get(cid, bound)
                except driver.StoreError:
                    with self._run_lock:
                        run, recon = driver.run_compression(
                            spec, descriptor, bound, workdir, orig=orig)
                    report = driver.assess(
                        orig, recon, run, bins=self.config.histogram_bins,
                        max_lag=min(self.config.max_lag, orig.values.size - 1))
                    store.put(report)
                out.append(report)
        return out

    def compute_payload(self, query: dict) -> dict:
        analysis = query["analysis"]
        params = query["params"]
        data = self._dataset(query["dataset_id"])
        if analysis == "stats":
            s = basic_stats(data)
            return {"min": s.min, "max": s.max, "avg": s.avg, "range": s.range}
        if analysis == "distribution":
            h = distribution(data, params.get("bins", self.config.histogram_bins))
            return {"edges": h.edges.tolist(), "pdf": h.pdf.tolist(),
                    "cdf": h.cdf.tolist()}
        if analysis == "entropy_map":
            eb = params.get("eb_abs", self.config.entropy_eb_abs)
            block = params.get("block_dims", self.config.block_dims)
            if block is None:
                return {"eb_abs": eb, "entropy_bits": entropy(data, eb)}
            emap = block_entropy(data, eb, block)
            return {"eb_abs": eb, "block_dims": list(emap.block_dims),
                    "grid_shape": list(emap.grid_shape),
                    "values": emap.values.tolist()}
        if analysis == "autocorrelation":
            lag = min(params.get("max_lag", self.config.max_lag),
                      data.values.size - 1)
            ac = autocorrelation(data, lag)
            return {"lags": ac.lags.tolist(),
                    "coefficients": ac.coefficients.tolist()}
        if analysis == "psd":
            return {"power": power_spectrum(data).tolist()}
        if analysis == "pca":
            p = pca_summary(data)
            return {"singular_values": p.singular_values.tolist(),
                    "explained_variance_ratio": p.explained_variance_ratio.tolist(),
                    "degenerate": p.degenerate}
        return self._compression_payload(query, data)

    def _compression_payload(self, query: dict, data: Dataset) -> dict:
        analysis = query["analysis"]
        params = query["params"]
        reports = self._reports(query)
        if analysis == "rate_distortion":
            series = []
            for cid in query["compressor_ids"]:
                points = []
                for report in reports:
                    if report.run.compressor_id != cid:
                        continue
                    psnr = report.distortion.psnr
                    points.append({
                        "bit_rate": report.run.sizes.br,
                        "psnr": math.inf if psnr is None else psnr,
                        "bound_kind": report.run.bound.kind,
                        "bound_magnitude": report.run.bound.magnitude,
                    })
                points.sort(key=lambda p: p["bit_rate"])
                series.append({"compressor": cid, "points": points})
            return {"series": series}
        series = []
        for report in reports:
            entry = {"compressor": report.run.compressor_id,
                     "bound_kind": report.run.bound.kind,
                     "bound_magnitude": report.run.bound.magnitude}
            if analysis == "error_pdf":
                h = report.error_pdf
                entry.update(edges=h.edges.tolist(), pdf=h.pdf.tolist())
            elif analysis == "distortion":
                d = report.distortion
                entry.update(max_abs_err=d.max_abs_err, max_rel_err=d.max_rel_err,
                             rmse=d.rmse, nrmse=d.nrmse, psnr=d.psnr,
                             pearson=report.pearson, cr=report.run.sizes.cr,
                             br=report.run.sizes.br,
                             bound_satisfied=report.bound_check.satisfied)
            elif analysis == "error_autocorrelation":
                ac = report.error_autocorrelation
                if ac is None:
                    entry.update(lags=[], coefficients=[], undefined=True)
                else:
                    entry.update(lags=ac.lags.tolist(),
                                 coefficients=ac.coefficients.tolist())
            elif analysis == "spectrum_diff":
                recon = self._load_recon(data, report)
                diff = spectral.compare_spectra(data.values, recon.values)
                entry.update(bins=diff.bins.tolist(),
                             differences=diff.differences.tolist(),
                             excluded_bins=diff.excluded_bins.tolist())
            elif analysis == "derived_comparison":
                kind = params.get("kind", "laplacian")
                recon = self._load_recon(data, report)
                cmp = checker.compare_derived(data, recon, kind)
                entry.update(kind=kind, max_abs_err=cmp.stats.max_abs_err,
                             rmse=cmp.stats.rmse, nrmse=cmp.stats.nrmse,
                             psnr=cmp.stats.psnr)
            elif analysis == "speed":
                entry.update(comp_seconds=report.run.comp_seconds,
                             decomp_seconds=report.run.decomp_seconds,
                             throughput_comp=report.run.throughput_comp,
                             throughput_decomp=report.run.throughput_decomp)
            series.append(entry)
        return {"series": series}

    def _load_recon(self, orig: Dataset, report) -> Dataset:
        d = orig.descriptor
        return load_dataset(DatasetDescriptor(
            id=d.id + ".recon", path=report.run.recon_path, precision=d.precision,
            dims=d.dims, endianness=d.endianness,
            allow_nonfinite=d.allow_nonfinite))

    # -- jobs ---------------------------------------------------------------
    def submit(self, query: dict) -> dict:
        """Synchronous analyses answer immediately; compressor-backed ones
        return a job id unless already cached."""
        key = canonical_key(query)
        cached = self.cache.peek(key)
        if cached is not None:
            return {"kind": "payload", "payload": cached, "cached": True}
        if query["analysis"] in JOB_ANALYSES:
            return {"kind": "job", "job_id": self._start_job(key, query)}
        payload, was_cached = self.cache.get_or_compute(
            key, lambda: self._serialized(query))
        return {"kind": "payload", "payload": payload, "cached": was_cached}

    def _serialized(self, query: dict) -> str:
        return json.dumps(sanitize(self.compute_payload(query)),
                          sort_keys=True, allow_nan=False)

    def _start_job(self, key: str, query: dict) -> str:
        with self._jobs_lock:
            for job_id, job in self.jobs.items():
                if job["key"] == key and job["status"] in ("pending", "running"):
                    return job_id
            job_id = uuid.uuid4().hex
            self.jobs[job_id] = {"key": key, "status": "pending",
                                 "created_at": time.time(), "error": None}

        def work():
            self.jobs[job_id]["status"] = "running"
            try:
                payload, was_cached = self.cache.get_or_compute(
                    key, lambda: self._serialized(query))
                self.jobs[job_id]["payload"] = payload
                self.jobs[job_id]["cached"] = was_cached
                self.jobs[job_id]["status"] = "done"
            except Exception as exc:  # surfaced via job status
                self.jobs[job_id]["error"] = str(exc)
                self.jobs[job_id]["status"] = "error"

        threading.Thread(target=work, daemon=True).start()
        return job_id

    def job_status(self, job_id: str) -> dict:
        with self._jobs_lock:
            if job_id not in self.jobs:
                raise QueryError(f"unknown job {job_id!r}", status=404)
            return dict(self.jobs[job_id])


def _payload_response(payload_json: str, cached: bool) -> Response:
    # assembled by hand so the payload bytes on a hit match the miss exactly
    body = '{"cached":%s,"payload":%s}' % ("true" if cached else "false", payload_json)
    return Response(content=body, media_type="application/json")


def create_app(config: AnalysisConfig, frontend_dir: str | None = None,
               cache_cap: int = DEFAULT_CACHE_CAP) -> FastAPI:
    service = AnalysisService(config, cache_cap=cache_cap)
    app = FastAPI(title="zqual analysis service")
    app.state.service = service

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/catalog")
    def catalog():
        return service.catalog()

    @app.post("/api/analyze")
    async def analyze(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="invalid JSON body") from None
        try:
            query = service.normalize_query(body)
        except QueryError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from None
        try:
            result = service.submit(query)
        except (AnalysisError, driver.CompressorError, ValueError) as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from None
        if result["kind"] == "job":
            return {"job_id": result["job_id"]}
        return _payload_response(result["payload"], result["cached"])

    @app.get("/api/jobs/{job_id}")
    def job(job_id: str):
        try:
            status = service.job_status(job_id)
        except QueryError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from None
        if status["status"] == "done":
            body = '{"status":"done","cached":%s,"payload":%s}' % (
                "true" if status.get("cached") else "false", status["payload"])
            return Response(content=body, media_type="application/json")
        if status["status"] == "error":
            return {"status": "error", "detail": status["error"]}
        return {"status": status["status"]}

    if frontend_dir is None:
        frontend_dir = os.environ.get("ZQUAL_FRONTEND")
    if frontend_dir and os.path.isdir(frontend_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")
    return app
