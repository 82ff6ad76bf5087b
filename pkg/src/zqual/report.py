"""Static output engine: comma-delimited tables, Gnuplot plot scripts, and
the bundle manifest. Tables use 17-significant-digit formatting so a
re-parse reproduces the values; timing fields are quarantined in their own
table so everything else stays byte-deterministic."""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .driver import CompressionReport, RateDistortionCurve, report_payload, store_key
from .properties import PropertyReport


def fmt(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def parse_cell(text: str):
    if text == "undefined":
        return None
    if text in ("true", "false"):
        return text == "true"
    if text == "inf":
        return math.inf
    if text == "-inf":
        return -math.inf
    try:
        return float(text)
    except ValueError:
        return text


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_table(path: str) -> tuple[list[str], list[list]]:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    header = lines[0].split(",")
    rows = [[parse_cell(cell) for cell in line.split(",")] for line in lines[1:]]
    return header, rows


class ReportBundle:
    """Accumulates tables under a root directory and finalizes with plot
    scripts plus a manifest enumerating every artifact."""

    def __init__(self, root: str):
        self.root = root
        self.artifacts: list[dict] = []  # {path, kind, source}
        self._curve_tables: dict[str, list[tuple[str, str]]] = {}  # dataset -> [(compressor, relpath)]
        self._pdf_tables: list[str] = []
        self._cr_rows: dict[str, list] = {}
        os.makedirs(root, exist_ok=True)

    def _add(self, relpath: str, kind: str, source: str,
             header: list[str], rows) -> str:
        write_table(os.path.join(self.root, relpath), header, rows)
        self.artifacts.append({"path": relpath, "kind": kind, "source": source})
        return relpath

    def add_property_report(self, report: PropertyReport) -> None:
        base = f"properties/{report.dataset_id}"
        src = report.dataset_id
        s = report.stats
        self._add(f"{base}/stats.csv", "stats", src,
                  ["min", "max", "avg", "range", "entropy_bits", "entropy_eb_abs"],
                  [[s.min, s.max, s.avg, s.range, report.entropy_bits,
                    report.entropy_eb_abs]])
        h = report.histogram
        rel = self._add(f"{base}/pdf.csv", "pdf", src, ["bin_lower", "pdf"],
                        zip(h.edges, h.pdf))
        self._pdf_tables.append(rel)
        self._add(f"{base}/cdf.csv", "cdf", src, ["bin_lower", "cdf"],
                  zip(h.edges, h.cdf))
        if report.entropy_map is not None:
            em = report.entropy_map
            self._add(f"{base}/entropy_map.csv", "entropy_map", src,
                      ["block", "entropy_bits"], enumerate(em.values))
        if report.autocorrelation is not None:
            ac = report.autocorrelation
            self._add(f"{base}/autocorrelation.csv", "autocorrelation", src,
                      ["lag", "coefficient"], zip(ac.lags, ac.coefficients))
        self._add(f"{base}/psd.csv", "psd", src, ["frequency_bin", "power"],
                  enumerate(report.psd))
        if report.pca is not None:
            self._add(f"{base}/pca.csv", "pca", src,
                      ["component", "singular_value", "explained_variance_ratio"],
                      [(i, sv, r) for i, (sv, r) in enumerate(
                          zip(report.pca.singular_values[:len(report.pca.explained_variance_ratio)],
                              report.pca.explained_variance_ratio))])
        if report.smoothness:
            self._add(f"{base}/smoothness.csv", "smoothness", src,
                      ["axis", "order", "mean_abs", "max_abs"],
                      [(sm.axis, sm.order, sm.mean_abs, sm.max_abs)
                       for sm in report.smoothness])

    def add_compression_report(self, report: CompressionReport) -> None:
        key = store_key(report.run.compressor_id, report.run.bound)
        tag = f"{key[0]}__{key[1]}__{key[2]:.17g}"
        base = f"compression/{report.dataset_id}/{tag}"
        src = f"{report.dataset_id}/{tag}"
        p = report_payload(report)
        self._add(f"{base}/metrics.csv", "metrics", src,
                  ["dataset", "compressor", "bound_kind", "bound_magnitude",
                   "orig_bytes", "comp_bytes", "n", "cr", "br",
                   "max_abs_err", "max_rel_err", "rmse", "nrmse", "psnr",
                   "pearson", "bound_satisfied"],
                  [[report.dataset_id, key[0], key[1], key[2],
                    p["sizes"]["orig_bytes"], p["sizes"]["comp_bytes"], p["sizes"]["n"],
                    p["sizes"]["cr"], p["sizes"]["br"],
                    p["distortion"]["max_abs_err"], p["distortion"]["max_rel_err"],
                    p["distortion"]["rmse"], p["distortion"]["nrmse"],
                    report.distortion.psnr, p["pearson"],
                    p["bound_check"]["satisfied"]]])
        h = report.error_pdf
        rel = self._add(f"{base}/error_pdf.csv", "error_pdf", src,
                        ["bin_lower", "pdf"], zip(h.edges, h.pdf))
        self._pdf_tables.append(rel)
        if report.error_autocorrelation is not None:
            ac = report.error_autocorrelation
            self._add(f"{base}/error_autocorrelation.csv", "error_autocorrelation",
                      src, ["lag", "coefficient"], zip(ac.lags, ac.coefficients))
        # timings quarantined: the only table allowed to differ across runs
        self._add(f"{base}/timings.csv", "timings", src,
                  ["comp_seconds", "decomp_seconds",
                   "throughput_comp", "throughput_decomp"],
                  [[report.run.comp_seconds, report.run.decomp_seconds,
                    report.run.throughput_comp, report.run.throughput_decomp]])
        self._cr_rows.setdefault(report.dataset_id, []).append(
            [key[0], key[1], key[2], p["sizes"]["cr"]])

    def add_curve(self, curve: RateDistortionCurve) -> None:
        relpath = f"curves/{curve.dataset_id}__{curve.compressor_id}.csv"
        self._add(relpath, "rate_distortion", f"{curve.dataset_id}/{curve.compressor_id}",
                  ["bit_rate", "psnr", "bound_kind", "bound_magnitude"],
                  [(pt.bit_rate, pt.psnr, pt.bound.kind, pt.bound.magnitude)
                   for pt in curve.points])
        self._curve_tables.setdefault(curve.dataset_id, []).append(
            (curve.compressor_id, relpath))

    def finalize(self) -> None:
        for dataset_id, rows in sorted(self._cr_rows.items()):
            self._add(f"compression/{dataset_id}/cr_summary.csv", "cr_summary",
                      dataset_id,
                      ["compressor", "bound_kind", "bound_magnitude", "cr"],
                      sorted(rows, key=lambda r: (r[0], r[1], r[2])))
        self._emit_plot_scripts()
        manifest = sorted(self.artifacts, key=lambda a: a["path"])
        _atomic_write(os.path.join(self.root, "manifest.json"),
                      json.dumps(manifest, indent=1, sort_keys=True) + "\n")

    # plot scripts: fillsteps for distributions, linespoints for
    # rate-distortion, histogram bars for CR comparisons, lines otherwise
    def _emit_plot_scripts(self) -> None:
        scripts: list[tuple[str, str]] = []
        for rel in self._pdf_tables:
            name = rel.replace("/", "__").removesuffix(".csv")
            scripts.append((f"plots/{name}.gp", _fillsteps_script(rel, name)))
        for dataset_id, series in sorted(self._curve_tables.items()):
            scripts.append((f"plots/rate_distortion__{dataset_id}.gp",
                            _linespoints_script(sorted(series), dataset_id)))
        for dataset_id in sorted(self._cr_rows):
            rel = f"compression/{dataset_id}/cr_summary.csv"
            scripts.append((f"plots/cr_comparison__{dataset_id}.gp",
                            _histogram_script(rel, dataset_id)))
        for art in list(self.artifacts):
            if art["kind"] in ("autocorrelation", "error_autocorrelation", "psd"):
                name = art["path"].replace("/", "__").removesuffix(".csv")
                scripts.append((f"plots/{name}.gp",
                                _lines_script(art["path"], name)))
        for relpath, text in scripts:
            _atomic_write(os.path.join(self.root, relpath), text)
            self.artifacts.append({"path": relpath, "kind": "plot_script",
                                   "source": relpath})


_COMMON = 'set datafile separator ","\nset key outside\nset grid\n'


def _fillsteps_script(table_rel: str, title: str) -> str:
    return (_COMMON
            + f'set title "{title}"\nset style fill solid 0.4\n'
            + f'plot "../{table_rel}" skip 1 using 1:2 with fillsteps title "pdf"\n')


def _linespoints_script(series: list[tuple[str, str]], dataset_id: str) -> str:
    plots = ", \\\n     ".join(
        f'"../{rel}" skip 1 using 1:2 with linespoints title "{comp}"'
        for comp, rel in series)
    return (_COMMON
            + f'set title "rate-distortion: {dataset_id}"\n'
            + 'set xlabel "bit rate (bits/value)"\nset ylabel "PSNR (dB)"\n'
            + "plot " + plots + "\n")


def _histogram_script(table_rel: str, dataset_id: str) -> str:
    return (_COMMON
            + f'set title "compression ratio: {dataset_id}"\n'
            + "set style data histograms\nset style fill solid 0.6\n"
            + f'plot "../{table_rel}" skip 1 using 4:xtic(1) title "CR"\n')


def _lines_script(table_rel: str, title: str) -> str:
    return (_COMMON
            + f'set title "{title}"\n'
            + f'plot "../{table_rel}" skip 1 using 1:2 with lines notitle\n')
