"""Dataset descriptors, raw-binary ingestion, and configuration parsing.

Input files are headerless contiguous IEEE-754 arrays; dimensions,
precision, and endianness always come from the descriptor and are never
sniffed from the file. Dimension order is row-major with the
slowest-varying dimension first, a single convention shared by the
stencil, blocking, and PCA code.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, replace

import numpy as np

PRECISIONS = ("single", "double")
ENDIANNESSES = ("little", "big")
BOUND_KINDS = ("absolute", "value_range_relative")

PRECISION_BYTES = {"single": 4, "double": 8}

TEMPLATE_PLACEHOLDERS = frozenset(
    {"input", "output", "eb_abs", "eb_rel", "dim1", "dim2", "dim3", "dim4", "precision"}
)


class ConfigError(ValueError):
    """Raised for malformed or invalid configuration documents."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class DatasetError(ValueError):
    """Raised for descriptor/file mismatches and bad dataset contents."""


def detect_host_endianness() -> str:
    return sys.byteorder  # "little" or "big"


@dataclass(frozen=True)
class DatasetDescriptor:
    id: str
    path: str
    precision: str
    dims: tuple[int, ...]
    endianness: str = "little"
    variable_name: str = ""
    allow_nonfinite: bool = False

    def __post_init__(self):
        if self.precision not in PRECISIONS:
            raise DatasetError(f"invalid precision {self.precision!r}")
        if self.endianness not in ENDIANNESSES:
            raise DatasetError(f"invalid endianness {self.endianness!r}")
        dims = tuple(int(d) for d in self.dims)
        if not 1 <= len(dims) <= 4:
            raise DatasetError(f"dims must have rank 1..4, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise DatasetError(f"dims must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_points(self) -> int:
        return math.prod(self.dims)

    @property
    def value_bytes(self) -> int:
        return PRECISION_BYTES[self.precision]

    @property
    def expected_file_bytes(self) -> int:
        return self.n_points * self.value_bytes

    @property
    def dtype(self) -> np.dtype:
        code = "f4" if self.precision == "single" else "f8"
        order = "<" if self.endianness == "little" else ">"
        return np.dtype(order + code)


@dataclass(frozen=True)
class Dataset:
    descriptor: DatasetDescriptor
    values: np.ndarray  # flat, native byte order, read-only

    def __post_init__(self):
        if self.values.ndim != 1 or len(self.values) != self.descriptor.n_points:
            raise DatasetError(
                f"values length {len(self.values)} != product(dims) {self.descriptor.n_points}"
            )
        self.values.flags.writeable = False

    @property
    def grid(self) -> np.ndarray:
        """Values reshaped to descriptor.dims (row-major view)."""
        return self.values.reshape(self.descriptor.dims)

    @property
    def finite_values(self) -> np.ndarray:
        """Values used for statistics; excludes non-finite points when the
        descriptor opted in to them."""
        if self.descriptor.allow_nonfinite:
            return self.values[np.isfinite(self.values)]
        return self.values


def load_dataset(descriptor: DatasetDescriptor) -> Dataset:
    """Decode the raw file named by the descriptor, byte-swapping to native
    order when needed. Rejects size mismatches and (by default) NaN/Inf."""
    try:
        raw = np.fromfile(descriptor.path, dtype=descriptor.dtype)
    except OSError as exc:
        raise DatasetError(f"cannot read {descriptor.path!r}: {exc}") from exc
    if raw.size != descriptor.n_points:
        raise DatasetError(
            f"file {descriptor.path!r} holds {raw.size} values, "
            f"descriptor dims {descriptor.dims} require {descriptor.n_points}"
        )
    values = np.ascontiguousarray(raw, dtype=raw.dtype.newbyteorder("="))
    if not descriptor.allow_nonfinite and not np.isfinite(values).all():
        raise DatasetError(f"non-finite values in {descriptor.path!r} (allow_nonfinite not set)")
    return Dataset(descriptor, values)


def write_raw(values: np.ndarray, path: str, precision: str, endianness: str = "little") -> None:
    """Serialize a flat array as a headerless IEEE-754 file (inverse of
    load_dataset for round-trip checks and mock compressors)."""
    code = "f4" if precision == "single" else "f8"
    order = "<" if endianness == "little" else ">"
    np.asarray(values).astype(order + code).tofile(path)


@dataclass(frozen=True)
class ErrorBoundSpec:
    kind: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in BOUND_KINDS:
            raise ValueError(f"invalid bound kind {self.kind!r}")
        if not self.magnitude > 0:
            raise ValueError(f"bound magnitude must be > 0, got {self.magnitude}")

    def key(self) -> str:
        return f"{self.kind}:{self.magnitude:.17g}"


def _check_template(template: str, which: str) -> None:
    used = set(re.findall(r"\{(\w+)\}", template))
    unknown = used - TEMPLATE_PLACEHOLDERS
    if unknown:
        raise ValueError(f"{which} template uses unknown placeholders {sorted(unknown)}")
    if "input" not in used or "output" not in used:
        raise ValueError(f"{which} template must contain {{input}} and {{output}}")


@dataclass(frozen=True)
class CompressorSpec:
    id: str
    compress_template: str
    decompress_template: str
    supported_bound_kinds: frozenset[str] = frozenset(BOUND_KINDS)

    def __post_init__(self):
        _check_template(self.compress_template, "compress")
        _check_template(self.decompress_template, "decompress")
        bad = set(self.supported_bound_kinds) - set(BOUND_KINDS)
        if bad:
            raise ValueError(f"unknown bound kinds {sorted(bad)}")
        object.__setattr__(self, "supported_bound_kinds", frozenset(self.supported_bound_kinds))


DEFAULT_BINS = 1000
DEFAULT_MAX_LAG = 100
DEFAULT_ENTROPY_EB_ABS = 1e-3
# Default value-range-relative sweep; overridable via the `bounds` key.
DEFAULT_BOUNDS = tuple(
    ErrorBoundSpec("value_range_relative", m) for m in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
)


@dataclass(frozen=True)
class AnalysisConfig:
    datasets: tuple[DatasetDescriptor, ...] = ()
    compressors: tuple[CompressorSpec, ...] = ()
    histogram_bins: int = DEFAULT_BINS
    block_dims: tuple[int, ...] | None = None
    max_lag: int = DEFAULT_MAX_LAG
    bound_sweep: tuple[ErrorBoundSpec, ...] = DEFAULT_BOUNDS
    entropy_eb_abs: float = DEFAULT_ENTROPY_EB_ABS
    output_dir: str = "zqual-out"

    def __post_init__(self):
        if self.histogram_bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.histogram_bins}")
        if self.max_lag < 1:
            raise ConfigError(f"max_lag must be >= 1, got {self.max_lag}")
        if not self.entropy_eb_abs > 0:
            raise ConfigError("entropy_eb_abs must be > 0")
        mags = [b.magnitude for b in self.bound_sweep]
        if len(mags) > 1:
            increasing = all(a < b for a, b in zip(mags, mags[1:]))
            decreasing = all(a > b for a, b in zip(mags, mags[1:]))
            if not (increasing or decreasing):
                raise ConfigError("bound sweep magnitudes must be strictly monotone")
        for d in self.datasets:
            if self.max_lag >= d.n_points:
                raise ConfigError(f"max_lag {self.max_lag} >= N for dataset {d.id!r}")

    def dataset(self, dataset_id: str) -> DatasetDescriptor:
        for d in self.datasets:
            if d.id == dataset_id:
                return d
        raise KeyError(dataset_id)

    def compressor(self, compressor_id: str) -> CompressorSpec:
        for c in self.compressors:
            if c.id == compressor_id:
                return c
        raise KeyError(compressor_id)


_GLOBAL_KEYS = {
    "output_dir", "bins", "max_lag", "block", "bounds", "bound_kind", "entropy_eb_abs",
}
_DATASET_KEYS = {"path", "precision", "dims", "endianness", "variable", "allow_nonfinite"}
_COMPRESSOR_KEYS = {"compress", "decompress", "bound_kinds"}

_SECTION_RE = re.compile(r"^\[(dataset|compressor):([^\]\s]+)\]$")


def _parse_bool(value: str, lineno: int) -> bool:
    if value in ("true", "false"):
        return value == "true"
    raise ConfigError(f"invalid boolean {value!r}", lineno)


def _parse_positive_int(value: str, key: str, lineno: int) -> int:
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}", lineno) from None
    if n <= 0:
        raise ConfigError(f"{key} must be positive, got {n}", lineno)
    return n


def _parse_dims(value: str, key: str, lineno: int) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in value.split("x"))
    except ValueError:
        raise ConfigError(f"{key} must look like d1[xd2[...]], got {value!r}", lineno) from None
    if any(d <= 0 for d in dims):
        raise ConfigError(f"{key} entries must be positive, got {value!r}", lineno)
    return dims


def parse_config(text: str) -> AnalysisConfig:
    """Parse a flat `key = value` document with `[dataset:<id>]` and
    `[compressor:<id>]` sections into a validated AnalysisConfig.

    Referenced file paths are recorded verbatim; existence is checked at
    load time, not here.
    """
    globals_: dict = {}
    datasets: list[DatasetDescriptor] = []
    compressors: list[CompressorSpec] = []
    section = None  # None | ("dataset"|"compressor", id, dict, lineno)

    def flush_section():
        nonlocal section
        if section is None:
            return
        kind, sec_id, kv, sec_line = section
        section = None
        if kind == "dataset":
            missing = {"path", "precision", "dims"} - kv.keys()
            if missing:
                raise ConfigError(
                    f"dataset {sec_id!r} missing keys {sorted(missing)}", sec_line)
            try:
                datasets.append(DatasetDescriptor(
                    id=sec_id,
                    path=kv["path"],
                    precision=kv["precision"],
                    dims=kv["dims"],
                    endianness=kv.get("endianness", "little"),
                    variable_name=kv.get("variable", sec_id),
                    allow_nonfinite=kv.get("allow_nonfinite", False),
                ))
            except DatasetError as exc:
                raise ConfigError(str(exc), sec_line) from exc
        else:
            missing = {"compress", "decompress"} - kv.keys()
            if missing:
                raise ConfigError(
                    f"compressor {sec_id!r} missing keys {sorted(missing)}", sec_line)
            try:
                compressors.append(CompressorSpec(
                    id=sec_id,
                    compress_template=kv["compress"],
                    decompress_template=kv["decompress"],
                    supported_bound_kinds=kv.get("bound_kinds", frozenset(BOUND_KINDS)),
                ))
            except ValueError as exc:
                raise ConfigError(str(exc), sec_line) from exc

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            flush_section()
            section = (m.group(1), m.group(2), {}, lineno)
            continue
        if line.startswith("["):
            raise ConfigError(f"malformed section header {line!r}", lineno, raw_line.index("[") + 1)
        if "=" not in line:
            raise ConfigError("expected `key = value`", lineno, 1)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if section is None:
            if key not in _GLOBAL_KEYS:
                raise ConfigError(f"unknown key {key!r}", lineno)
            if key == "bins":
                globals_["histogram_bins"] = _parse_positive_int(value, key, lineno)
                if globals_["histogram_bins"] < 2:
                    raise ConfigError("bins must be >= 2", lineno)
            elif key == "max_lag":
                globals_["max_lag"] = _parse_positive_int(value, key, lineno)
            elif key == "block":
                globals_["block_dims"] = _parse_dims(value, key, lineno)
            elif key == "bounds":
                try:
                    globals_["_bound_mags"] = [float(p) for p in value.split(",") if p.strip()]
                except ValueError:
                    raise ConfigError(f"bounds must be comma-separated numbers, got {value!r}",
                                      lineno) from None
                if any(m <= 0 for m in globals_["_bound_mags"]):
                    raise ConfigError("bound magnitudes must be positive", lineno)
            elif key == "bound_kind":
                if value not in BOUND_KINDS:
                    raise ConfigError(f"invalid enum token {value!r} for bound_kind", lineno)
                globals_["_bound_kind"] = value
            elif key == "entropy_eb_abs":
                try:
                    globals_["entropy_eb_abs"] = float(value)
                except ValueError:
                    raise ConfigError(f"entropy_eb_abs must be a number, got {value!r}",
                                      lineno) from None
                if globals_["entropy_eb_abs"] <= 0:
                    raise ConfigError("entropy_eb_abs must be positive", lineno)
            else:
                globals_["output_dir"] = value
        else:
            kind, sec_id, kv, sec_line = section
            allowed = _DATASET_KEYS if kind == "dataset" else _COMPRESSOR_KEYS
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{kind}:{sec_id}]", lineno)
            if key == "precision" and value not in PRECISIONS:
                raise ConfigError(f"invalid enum token {value!r} for precision", lineno)
            if key == "endianness" and value not in ENDIANNESSES:
                raise ConfigError(f"invalid enum token {value!r} for endianness", lineno)
            if key == "dims":
                kv[key] = _parse_dims(value, key, lineno)
            elif key == "allow_nonfinite":
                kv[key] = _parse_bool(value, lineno)
            elif key == "bound_kinds":
                kinds = frozenset(p.strip() for p in value.split(",") if p.strip())
                bad = kinds - set(BOUND_KINDS)
                if bad:
                    raise ConfigError(f"invalid enum token {sorted(bad)[0]!r} for bound_kinds",
                                      lineno)
                kv[key] = kinds
            else:
                kv[key] = value
    flush_section()

    kind = globals_.pop("_bound_kind", "value_range_relative")
    mags = globals_.pop("_bound_mags", None)
    if mags is not None:
        globals_["bound_sweep"] = tuple(ErrorBoundSpec(kind, m) for m in mags)
    return AnalysisConfig(
        datasets=tuple(datasets), compressors=tuple(compressors), **globals_)


def render_config(config: AnalysisConfig) -> str:
    """Emit the configuration document form of a config (inverse of
    parse_config up to defaults)."""
    lines = [
        f"output_dir = {config.output_dir}",
        f"bins = {config.histogram_bins}",
        f"max_lag = {config.max_lag}",
        f"entropy_eb_abs = {config.entropy_eb_abs:.17g}",
    ]
    if config.block_dims is not None:
        lines.append("block = " + "x".join(str(d) for d in config.block_dims))
    if config.bound_sweep:
        kinds = {b.kind for b in config.bound_sweep}
        if len(kinds) != 1:
            raise ValueError("render_config requires a single bound kind in the sweep")
        lines.append(f"bound_kind = {next(iter(kinds))}")
        lines.append("bounds = " + ",".join(f"{b.magnitude:.17g}" for b in config.bound_sweep))
    for d in config.datasets:
        lines += [
            "",
            f"[dataset:{d.id}]",
            f"path = {d.path}",
            f"precision = {d.precision}",
            "dims = " + "x".join(str(x) for x in d.dims),
            f"endianness = {d.endianness}",
            f"variable = {d.variable_name}",
            f"allow_nonfinite = {'true' if d.allow_nonfinite else 'false'}",
        ]
    for c in config.compressors:
        lines += [
            "",
            f"[compressor:{c.id}]",
            f"compress = {c.compress_template}",
            f"decompress = {c.decompress_template}",
            "bound_kinds = " + ",".join(sorted(c.supported_bound_kinds)),
        ]
    return "\n".join(lines) + "\n"
