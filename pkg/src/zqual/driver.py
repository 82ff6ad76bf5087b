"""Runs external compressor/decompressor executables from command
templates, times them, assembles full per-run compression reports, keys
them in a result store, and sweeps error bounds into rate-distortion
curves."""

from __future__ import annotations

import json
import math
import os
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .datacore import (
    CompressorSpec,
    Dataset,
    DatasetDescriptor,
    ErrorBoundSpec,
    load_dataset,
)
from . import checker
from .checker import BoundCheck, DistortionStats, SizeMetrics
from .properties import AnalysisError, AutocorrSeries, Histogram


class CompressorError(RuntimeError):
    """A child compressor process failed or produced bad output."""


class StoreError(KeyError):
    pass


@dataclass(frozen=True)
class CompressionRun:
    compressor_id: str
    bound: ErrorBoundSpec
    comp_bytes: int
    comp_seconds: float
    decomp_seconds: float
    recon_path: str
    sizes: SizeMetrics
    throughput_comp: float    # original bytes per second
    throughput_decomp: float


@dataclass(frozen=True)
class CompressionReport:
    dataset_id: str
    run: CompressionRun
    distortion: DistortionStats
    bound_check: BoundCheck
    pearson: float | None
    error_pdf: Histogram
    error_autocorrelation: AutocorrSeries | None


@dataclass(frozen=True)
class RateDistortionPoint:
    bit_rate: float
    psnr: float  # math.inf for lossless points
    bound: ErrorBoundSpec


@dataclass(frozen=True)
class RateDistortionCurve:
    compressor_id: str
    dataset_id: str
    points: tuple[RateDistortionPoint, ...]  # sorted by ascending bit rate
    failures: tuple[tuple[ErrorBoundSpec, str], ...] = ()

    @property
    def partial(self) -> bool:
        return bool(self.failures)


def store_key(compressor_id: str, bound: ErrorBoundSpec) -> tuple:
    return (compressor_id, bound.kind, bound.magnitude)


class ResultStore:
    """Keyed map (compressor id, bound kind, bound magnitude) -> report,
    optionally persisted one JSON file per key plus an index."""

    def __init__(self, directory: str | None = None):
        self._entries: dict[tuple, CompressionReport] = {}
        self.directory = directory

    def put(self, report: CompressionReport, overwrite: bool = False) -> tuple:
        key = store_key(report.run.compressor_id, report.run.bound)
        if key in self._entries and not overwrite:
            raise StoreError(f"duplicate key {key}")
        self._entries[key] = report
        if self.directory is not None:
            self._persist(key, report)
        return key

    def get(self, compressor_id: str, bound: ErrorBoundSpec) -> CompressionReport:
        key = store_key(compressor_id, bound)
        if key not in self._entries:
            raise StoreError(f"no entry for key {key}")
        return self._entries[key]

    def keys(self):
        return list(self._entries)

    def _persist(self, key, report):
        os.makedirs(self.directory, exist_ok=True)
        name = f"{key[0]}__{key[1]}__{key[2]:.17g}.json"
        path = os.path.join(self.directory, name)
        with open(path, "w") as fh:
            json.dump(report_payload(report), fh, indent=1, sort_keys=True)
        index = os.path.join(self.directory, "index.json")
        entries = []
        if os.path.exists(index):
            with open(index) as fh:
                entries = json.load(fh)
        entry = {"compressor": key[0], "bound_kind": key[1],
                 "bound_magnitude": key[2], "file": name}
        entries = [e for e in entries if e["file"] != name] + [entry]
        with open(index, "w") as fh:
            json.dump(sorted(entries, key=lambda e: e["file"]), fh, indent=1)


def _json_num(x):
    if x is None:
        return None
    if math.isinf(x):
        return "inf"
    return x


def report_payload(report: CompressionReport) -> dict:
    """JSON-safe dict form of a report (used by the store, tables, and the
    service). Infinities become the string "inf"."""
    run = report.run
    d = report.distortion
    payload = {
        "dataset_id": report.dataset_id,
        "compressor_id": run.compressor_id,
        "bound": {"kind": run.bound.kind, "magnitude": run.bound.magnitude},
        "sizes": {"orig_bytes": run.sizes.orig_bytes, "comp_bytes": run.sizes.comp_bytes,
                  "n": run.sizes.n, "cr": run.sizes.cr, "br": run.sizes.br},
        "timing": {"comp_seconds": run.comp_seconds, "decomp_seconds": run.decomp_seconds,
                   "throughput_comp": run.throughput_comp,
                   "throughput_decomp": run.throughput_decomp},
        "distortion": {"max_abs_err": d.max_abs_err, "max_rel_err": d.max_rel_err,
                       "rmse": d.rmse, "nrmse": d.nrmse, "psnr": _json_num(d.psnr)},
        "bound_check": {"max_abs": report.bound_check.max_abs,
                        "max_rel": report.bound_check.max_rel,
                        "satisfied": report.bound_check.satisfied},
        "pearson": report.pearson,
        "error_pdf": {"edges": report.error_pdf.edges.tolist(),
                      "pdf": report.error_pdf.pdf.tolist(),
                      "cdf": report.error_pdf.cdf.tolist()},
    }
    if report.error_autocorrelation is not None:
        payload["error_autocorrelation"] = {
            "lags": report.error_autocorrelation.lags.tolist(),
            "coefficients": report.error_autocorrelation.coefficients.tolist(),
        }
    else:
        payload["error_autocorrelation"] = None
    return payload


def _render_template(template: str, substitutions: dict) -> list[str]:
    # argument-vector split (no shell); quotes group words
    argv = []
    for token in shlex.split(template):
        try:
            argv.append(token.format(**substitutions))
        except KeyError as exc:
            raise CompressorError(f"unresolved placeholder {exc} in {template!r}") from exc
        except (IndexError, ValueError) as exc:
            raise CompressorError(f"malformed template token {token!r}: {exc}") from exc
    return argv


def _timed_child(argv: list[str], log_prefix: str, workdir: str) -> float:
    stdout_path = os.path.join(workdir, log_prefix + ".stdout")
    stderr_path = os.path.join(workdir, log_prefix + ".stderr")
    start = time.perf_counter()
    with open(stdout_path, "wb") as out, open(stderr_path, "wb") as err:
        try:
            proc = subprocess.run(argv, stdout=out, stderr=err, env=os.environ.copy())
        except OSError as exc:
            raise CompressorError(f"cannot launch {argv!r}: {exc}") from exc
    elapsed = time.perf_counter() - start
    if proc.returncode != 0:
        with open(stderr_path, "rb") as fh:
            stderr = fh.read().decode(errors="replace")
        raise CompressorError(
            f"{argv[0]} exited with status {proc.returncode}: {stderr.strip()}")
    return elapsed


def resolve_eb_abs(bound: ErrorBoundSpec, orig: Dataset) -> float:
    """Absolute form of a bound for templates that take {eb_abs}; relative
    bounds are scaled by the original's value range."""
    if bound.kind == "absolute":
        return bound.magnitude
    value_range = float(orig.values.max() - orig.values.min())
    return bound.magnitude * value_range


def run_compression(spec: CompressorSpec, descriptor: DatasetDescriptor,
                    bound: ErrorBoundSpec, workdir: str,
                    orig: Dataset | None = None) -> tuple[CompressionRun, Dataset]:
    """Compress then decompress as separate timed child processes; returns
    the run record and the loaded, size-verified reconstruction."""
    if bound.kind not in spec.supported_bound_kinds:
        raise CompressorError(
            f"compressor {spec.id!r} does not support {bound.kind} bounds")
    if orig is None:
        orig = load_dataset(descriptor)
    os.makedirs(workdir, exist_ok=True)
    tag = f"{spec.id}__{bound.kind}__{bound.magnitude:.17g}"
    comp_path = os.path.join(workdir, tag + ".z")
    recon_path = os.path.join(workdir, tag + ".recon")
    subs = {
        "input": descriptor.path,
        "output": comp_path,
        "eb_abs": f"{resolve_eb_abs(bound, orig):.17g}",
        "eb_rel": f"{bound.magnitude:.17g}" if bound.kind == "value_range_relative" else "",
        "precision": descriptor.precision,
    }
    dims = descriptor.dims
    for i in range(4):
        subs[f"dim{i + 1}"] = str(dims[i]) if i < len(dims) else "0"
    comp_seconds = _timed_child(_render_template(spec.compress_template, subs),
                                tag + ".compress", workdir)
    if not os.path.exists(comp_path):
        raise CompressorError(f"compressor {spec.id!r} produced no output at {comp_path}")
    comp_bytes = os.path.getsize(comp_path)

    subs = dict(subs, input=comp_path, output=recon_path)
    decomp_seconds = _timed_child(_render_template(spec.decompress_template, subs),
                                  tag + ".decompress", workdir)
    if not os.path.exists(recon_path):
        raise CompressorError(f"decompressor {spec.id!r} produced no output at {recon_path}")
    orig_bytes = descriptor.expected_file_bytes
    recon_bytes = os.path.getsize(recon_path)
    if recon_bytes != orig_bytes:
        raise CompressorError(
            f"reconstruction size {recon_bytes} != original size {orig_bytes}")
    recon = load_dataset(
        DatasetDescriptor(id=descriptor.id + ".recon", path=recon_path,
                          precision=descriptor.precision, dims=descriptor.dims,
                          endianness=descriptor.endianness,
                          variable_name=descriptor.variable_name,
                          allow_nonfinite=descriptor.allow_nonfinite))
    sizes = checker.size_metrics(orig_bytes, comp_bytes, descriptor.n_points,
                                 descriptor.precision)
    run = CompressionRun(
        compressor_id=spec.id, bound=bound, comp_bytes=comp_bytes,
        comp_seconds=comp_seconds, decomp_seconds=decomp_seconds,
        recon_path=recon_path, sizes=sizes,
        throughput_comp=orig_bytes / comp_seconds,
        throughput_decomp=orig_bytes / decomp_seconds)
    return run, recon


def assess(orig: Dataset, recon: Dataset, run: CompressionRun,
           bins: int = 1000, max_lag: int = 100) -> CompressionReport:
    """Full per-run report: distortion, bound check, Pearson, error PDF,
    and error autocorrelation (omitted when undefined, e.g. zero errors)."""
    errors = checker.pointwise_errors(orig, recon)
    distortion = checker.distortion_stats(orig, recon)
    bound_check = checker.check_bound(errors, run.bound)
    try:
        rho = checker.pearson(orig, recon)
    except AnalysisError:
        rho = None
    error_pdf = checker.error_distribution(errors, bins)
    try:
        lag_cap = min(max_lag, errors.abs_errors.size - 1)
        error_ac = checker.error_autocorrelation(errors, lag_cap) if lag_cap >= 1 else None
    except AnalysisError:
        error_ac = None
    return CompressionReport(dataset_id=orig.descriptor.id, run=run,
                             distortion=distortion, bound_check=bound_check,
                             pearson=rho, error_pdf=error_pdf,
                             error_autocorrelation=error_ac)


def sweep(spec: CompressorSpec, descriptor: DatasetDescriptor,
          bounds, workdir: str, store: ResultStore | None = None,
          bins: int = 1000, max_lag: int = 100) -> tuple[RateDistortionCurve, ResultStore]:
    """One compression run per bound; individual failures are recorded and
    the sweep continues (partial curves are flagged). Duplicate bounds are
    rejected by the store's key uniqueness."""
    bounds = list(bounds)
    if not bounds:
        raise ValueError("bound sweep is empty")
    if store is None:
        store = ResultStore()
    orig = load_dataset(descriptor)
    points = []
    failures = []
    for bound in bounds:
        key = store_key(spec.id, bound)
        if key in set(store.keys()):
            raise StoreError(f"duplicate key {key}")
        try:
            run, recon = run_compression(spec, descriptor, bound, workdir, orig=orig)
            report = assess(orig, recon, run, bins=bins, max_lag=max_lag)
        except CompressorError as exc:
            failures.append((bound, str(exc)))
            continue
        store.put(report)
        psnr = report.distortion.psnr
        points.append(RateDistortionPoint(
            bit_rate=run.sizes.br,
            psnr=math.inf if psnr is None else psnr,
            bound=bound))
    points.sort(key=lambda p: p.bit_rate)
    curve = RateDistortionCurve(compressor_id=spec.id, dataset_id=descriptor.id,
                                points=tuple(points), failures=tuple(failures))
    return curve, store


def builtin_compressor_specs() -> tuple[CompressorSpec, ...]:
    """Mock compressors (copy, truncate-k, uniform-noise) runnable without
    any external binaries; templates shell out to this interpreter."""
    py = sys.executable
    specs = [CompressorSpec(
        id="copy",
        compress_template=f'"{py}" -m zqual.mocks copy compress {{input}} {{output}}',
        decompress_template=f'"{py}" -m zqual.mocks copy decompress {{input}} {{output}}',
    )]
    for bits in (8, 16, 24):
        specs.append(CompressorSpec(
            id=f"truncate{bits}",
            compress_template=(f'"{py}" -m zqual.mocks truncate compress {{input}} {{output}}'
                               f' --bits {bits} --precision {{precision}}'),
            decompress_template=(f'"{py}" -m zqual.mocks truncate decompress {{input}} {{output}}'
                                 f' --bits {bits} --precision {{precision}}'),
        ))
    specs.append(CompressorSpec(
        id="noise",
        compress_template=f'"{py}" -m zqual.mocks noise compress {{input}} {{output}}',
        decompress_template=(f'"{py}" -m zqual.mocks noise decompress {{input}} {{output}}'
                             f' --eb-abs {{eb_abs}} --precision {{precision}}'),
    ))
    return tuple(specs)
