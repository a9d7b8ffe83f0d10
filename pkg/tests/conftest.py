import zlib

import pytest

from noisefold.sensing import rng_from_seed


@pytest.fixture
def rng():
    return rng_from_seed(12345)


def make_rng(*key):
    """Philox stream from a mixed text/int key (text hashed stably)."""
    parts = tuple(
        zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in key
    )
    return rng_from_seed(parts)
