"""zqual: data profiling and lossy-compression quality assessment for
scientific floating-point arrays."""

__version__ = "0.1.0"
