import numpy as np
import pytest

from zqual.datacore import Dataset, DatasetDescriptor


def mem_dataset(values, dims=None, precision="double", dataset_id="t",
                allow_nonfinite=False):
    """In-memory Dataset for tests that don't need a backing file."""
    dtype = np.float64 if precision == "double" else np.float32
    arr = np.asarray(values, dtype=dtype).ravel().copy()
    if dims is None:
        dims = (arr.size,)
    desc = DatasetDescriptor(id=dataset_id, path="<memory>", precision=precision,
                             dims=tuple(dims), allow_nonfinite=allow_nonfinite)
    return Dataset(desc, arr)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
