"""Command-line frontend: probe (dataset properties), check (compression
reports), sweep (rate-distortion curves), serve (interactive API). The CLI
adds no arithmetic of its own; every number in a bundle comes straight
from the library calls."""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__, driver
from .datacore import (
    AnalysisConfig,
    ConfigError,
    Dataset,
    DatasetDescriptor,
    ErrorBoundSpec,
    load_dataset,
    parse_config,
)
from .driver import CompressorError, ResultStore, StoreError, builtin_compressor_specs
from .properties import AnalysisError, analyze_properties
from .report import ReportBundle

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def resolve_compressors(config: AnalysisConfig):
    """Configured compressors, or the built-in mocks when none are
    configured. Built-ins are also reachable by id unless shadowed."""
    if config.compressors:
        return config.compressors
    return builtin_compressor_specs()


def find_compressor(config: AnalysisConfig, compressor_id: str):
    for spec in config.compressors:
        if spec.id == compressor_id:
            return spec
    for spec in builtin_compressor_specs():
        if spec.id == compressor_id:
            return spec
    raise KeyError(compressor_id)


def _load_config(args) -> AnalysisConfig:
    with open(args.config) as fh:
        config = parse_config(fh.read())
    overrides = {}
    if args.outdir:
        overrides["output_dir"] = args.outdir
    if getattr(args, "bins", None):
        overrides["histogram_bins"] = args.bins
    if getattr(args, "max_lag", None):
        overrides["max_lag"] = args.max_lag
    if getattr(args, "block", None):
        overrides["block_dims"] = tuple(int(p) for p in args.block.split("x"))
    if getattr(args, "bounds", None):
        kind = config.bound_sweep[0].kind if config.bound_sweep else "value_range_relative"
        overrides["bound_sweep"] = tuple(
            ErrorBoundSpec(kind, float(p)) for p in args.bounds.split(","))
    if not overrides:
        return config
    from dataclasses import replace
    return replace(config, **overrides)


def _workdir(config: AnalysisConfig) -> str:
    return os.environ.get("ZQUAL_WORKDIR", os.path.join(config.output_dir, "work"))


def cmd_probe(args) -> int:
    config = _load_config(args)
    bundle = ReportBundle(config.output_dir)
    for descriptor in config.datasets:
        data = load_dataset(descriptor)
        block = config.block_dims
        if block is not None and len(block) != len(descriptor.dims):
            block = None
        report = analyze_properties(
            data, bins=config.histogram_bins,
            max_lag=min(config.max_lag, data.values.size - 1),
            entropy_eb_abs=config.entropy_eb_abs, block_dims=block)
        bundle.add_property_report(report)
    bundle.finalize()
    print(f"wrote property bundle to {config.output_dir}")
    return EXIT_OK


def _check_pair(config: AnalysisConfig, dataset_id: str, recon_path: str,
                bundle: ReportBundle) -> None:
    descriptor = config.dataset(dataset_id)
    orig = load_dataset(descriptor)
    recon_desc = DatasetDescriptor(
        id=descriptor.id + ".recon", path=recon_path,
        precision=descriptor.precision, dims=descriptor.dims,
        endianness=descriptor.endianness,
        allow_nonfinite=descriptor.allow_nonfinite)
    recon = load_dataset(recon_desc)
    from . import checker
    errors = checker.pointwise_errors(orig, recon)
    stats = checker.distortion_stats(orig, recon)
    print(f"{dataset_id} vs {recon_path}:")
    print(f"  max_abs_err = {stats.max_abs_err:.17g}")
    print(f"  rmse = {stats.rmse:.17g}")
    psnr = "undefined" if stats.psnr is None else f"{stats.psnr:.17g}"
    print(f"  psnr = {psnr}")


def cmd_check(args) -> int:
    config = _load_config(args)
    bundle = ReportBundle(config.output_dir)
    if args.recon:
        if not args.dataset:
            print("check --recon requires --dataset", file=sys.stderr)
            return EXIT_USAGE
        _check_pair(config, args.dataset, args.recon, bundle)
        return EXIT_OK
    workdir = _workdir(config)
    for descriptor in config.datasets:
        orig = load_dataset(descriptor)
        for spec in resolve_compressors(config):
            for bound in config.bound_sweep:
                if bound.kind not in spec.supported_bound_kinds:
                    continue
                run, recon = driver.run_compression(spec, descriptor, bound,
                                                    workdir, orig=orig)
                report = driver.assess(orig, recon, run,
                                       bins=config.histogram_bins,
                                       max_lag=min(config.max_lag, orig.values.size - 1))
                bundle.add_compression_report(report)
    bundle.finalize()
    print(f"wrote compression reports to {config.output_dir}")
    return EXIT_OK


def run_sweeps(config: AnalysisConfig, store: ResultStore | None = None):
    """All (dataset, compressor) sweeps for a config; shared by the sweep
    subcommand and the service."""
    workdir = _workdir(config)
    if store is None:
        store = ResultStore()
    curves = []
    for descriptor in config.datasets:
        for spec in resolve_compressors(config):
            bounds = [b for b in config.bound_sweep
                      if b.kind in spec.supported_bound_kinds]
            if not bounds:
                continue
            curve, _ = driver.sweep(spec, descriptor, bounds, workdir,
                                    store=store, bins=config.histogram_bins,
                                    max_lag=min(config.max_lag, descriptor.n_points - 1))
            curves.append(curve)
    return curves, store


def cmd_sweep(args) -> int:
    config = _load_config(args)
    bundle = ReportBundle(config.output_dir)
    curves, store = run_sweeps(config)
    for curve in curves:
        bundle.add_curve(curve)
    reports_by_dataset: dict[str, set] = {}
    for curve in curves:
        for pt in curve.points:
            report = store.get(curve.compressor_id, pt.bound)
            bundle.add_compression_report(report)
    bundle.finalize()
    failures = [(c.compressor_id, b, msg) for c in curves for b, msg in c.failures]
    for comp, bound, msg in failures:
        print(f"warning: {comp} at {bound.kind}={bound.magnitude:g} failed: {msg}",
              file=sys.stderr)
    print(f"wrote rate-distortion bundle to {config.output_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    config = _load_config(args)
    from .service import create_app
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zqual")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("-c", "--config", required=True)
        p.add_argument("-o", "--outdir", default=None)
        p.add_argument("--bins", type=int, default=None)
        p.add_argument("--max-lag", dest="max_lag", type=int, default=None)
        p.add_argument("--block", default=None, metavar="d1xd2[...]")
        p.add_argument("--bounds", default=None, metavar="m1,m2,...")

    common(sub.add_parser("probe", help="profile configured datasets"))
    p_check = sub.add_parser("check", help="compression reports")
    common(p_check)
    p_check.add_argument("--dataset", default=None)
    p_check.add_argument("--recon", default=None,
                         help="compare this reconstruction file directly")
    common(sub.add_parser("sweep", help="rate-distortion sweeps"))
    p_serve = sub.add_parser("serve", help="start the analysis API")
    common(p_serve)
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    sub.add_parser("version", help="print version")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "version":
        print(f"zqual {__version__}")
        return EXIT_OK
    handler = {"probe": cmd_probe, "check": cmd_check,
               "sweep": cmd_sweep, "serve": cmd_serve}[args.command]
    try:
        return handler(args)
    except StoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AnalysisError, CompressorError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
