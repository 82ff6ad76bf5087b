"""Built-in mock compressors, runnable as child processes so the driver's
external-executable path is exercised without SZ/ZFP installed.

Families:
  copy        lossless pass-through (cr = 1)
  truncate    keeps the top --bits of each IEEE word, stores bits/8 bytes
              per value (bit rate exactly --bits)
  noise       "decompression" perturbs each value by deterministic uniform
              noise bounded by --eb-abs; compression is a pass-through
"""

from __future__ import annotations

import argparse
import hashlib
import struct
import sys

import numpy as np

from .datacore import PRECISION_BYTES


def _word_dtype(precision: str) -> tuple[np.dtype, np.dtype]:
    if precision == "single":
        return np.dtype("<f4"), np.dtype(">u4")
    return np.dtype("<f8"), np.dtype(">u8")


def truncate_compress(data: bytes, precision: str, bits: int) -> bytes:
    vb = PRECISION_BYTES[precision]
    if bits % 8 != 0 or not 8 <= bits <= vb * 8:
        raise ValueError(f"bits must be a multiple of 8 in [8, {vb * 8}], got {bits}")
    fdt, wdt = _word_dtype(precision)
    values = np.frombuffer(data, dtype=fdt)
    words = values.view(fdt.str.replace("f", "u")).astype(wdt)
    # big-endian byte view puts the high-order (sign/exponent) bytes first
    return words.view(np.uint8).reshape(-1, vb)[:, : bits // 8].tobytes()


def truncate_decompress(data: bytes, precision: str, bits: int) -> bytes:
    vb = PRECISION_BYTES[precision]
    keep = bits // 8
    packed = np.frombuffer(data, dtype=np.uint8).reshape(-1, keep)
    full = np.zeros((packed.shape[0], vb), dtype=np.uint8)
    full[:, :keep] = packed
    fdt, wdt = _word_dtype(precision)
    words = full.reshape(-1).view(wdt)
    return words.astype(wdt.str.replace(">", "<")).view(fdt).astype(fdt).tobytes()


def truncate_error_bound(bits: int, precision: str, max_abs_value: float) -> float:
    """Worst-case absolute error of truncate_compress for values whose
    magnitude is at most max_abs_value (requires the full exponent field to
    survive, i.e. bits >= 16 for single, >= 24 for double)."""
    mant_kept = bits - (9 if precision == "single" else 12)
    if mant_kept < 0:
        raise ValueError("bits too small to preserve the exponent field")
    exp = int(np.ceil(np.log2(max_abs_value))) if max_abs_value > 0 else 0
    return 2.0 ** (exp - mant_kept)


def noise_decompress(data: bytes, precision: str, eb_abs: float) -> bytes:
    """Adds per-point uniform noise in [-eb_abs, eb_abs], seeded from the
    input bytes and the bound so repeated runs are identical. Points whose
    representable perturbed value would exceed the bound after rounding are
    left untouched."""
    fdt, _ = _word_dtype(precision)
    values = np.frombuffer(data, dtype=fdt).astype(np.float64)
    digest = hashlib.sha256(data + struct.pack("<d", eb_abs)).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    noise = rng.uniform(-eb_abs, eb_abs, size=values.size)
    perturbed = (values + noise).astype(fdt).astype(np.float64)
    over = np.abs(perturbed - values) > eb_abs
    perturbed[over] = values[over]
    return perturbed.astype(fdt).tobytes()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zqual.mocks")
    parser.add_argument("family", choices=["copy", "truncate", "noise"])
    parser.add_argument("op", choices=["compress", "decompress"])
    parser.add_argument("input")
    parser.add_argument("output")
    parser.add_argument("--bits", type=int, default=16)
    parser.add_argument("--eb-abs", type=float, default=1e-3)
    parser.add_argument("--precision", choices=["single", "double"], default="single")
    args = parser.parse_args(argv)

    with open(args.input, "rb") as fh:
        data = fh.read()
    if args.family == "copy":
        out = data
    elif args.family == "truncate":
        if args.op == "compress":
            out = truncate_compress(data, args.precision, args.bits)
        else:
            out = truncate_decompress(data, args.precision, args.bits)
    else:
        if args.op == "compress":
            out = data
        else:
            out = noise_decompress(data, args.precision, args.eb_abs)
    with open(args.output, "wb") as fh:
        fh.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
