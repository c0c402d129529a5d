from __future__ import annotations

import json
import struct

import numpy as np
import pytest

from focalfield.cache import (MAGIC, CacheFormatError, GridCache, default_cache_dir, dumps_grid,
                              loads_grid, read_grid, write_grid)
from focalfield.scattering import ExtinctionGrid


@pytest.fixture
def grid():
    rho = np.array([0.0, 1e-7, 3e-7])
    z = np.array([4.4e-3, 4.5e-3, 4.6e-3, 4.7e-3])
    eps = np.arange(12, dtype=float).reshape(3, 4) / 100
    return ExtinctionGrid(rho, z, eps, config_hash="abc", meta={"u": 0.29})


def test_round_trip_is_bit_exact(grid, tmp_path):
    write_grid(tmp_path / "g.extgrid", grid, key="k1")
    loaded, header = read_grid(tmp_path / "g.extgrid")
    assert np.array_equal(loaded.eps, grid.eps)
    assert np.array_equal(loaded.rho, grid.rho) and np.array_equal(loaded.z, grid.z)
    assert header["key"] == "k1" and header["config_hash"] == "abc"
    assert loaded.meta == {"u": 0.29}


def test_layout(grid):
    data = dumps_grid(grid, "k")
    assert data[:8] == MAGIC == b"EXTGRID1"
    (n,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + n])
    assert header["axes"]["rho"] == 3 and header["axes"]["z"] == 4
    payload = np.frombuffer(data[16 + n:], dtype="<f8")
    assert np.array_equal(payload[:3], grid.rho)
    assert np.array_equal(payload[7:].reshape(3, 4), grid.eps)


@pytest.mark.parametrize("mutate", [
    lambda d: b"EXTGRID0" + d[8:],
    lambda d: d[:-8],
    lambda d: d[:-1] + bytes([d[-1] ^ 0xFF]),
    lambda d: d[:20],
])
def test_corruption_detected(grid, mutate):
    with pytest.raises(CacheFormatError):
        loads_grid(mutate(dumps_grid(grid, "k")))


def test_cache_hit_miss_and_rebuild(grid, tmp_path):
    cache = GridCache(tmp_path)
    calls = []

    def builder():
        calls.append(1)
        return grid

    cache.get_or_build("key-a", builder)
    cache.get_or_build("key-a", builder)
    assert (cache.hits, cache.misses, len(calls)) == (1, 1, 1)
    path = cache.path_for("key-a")
    path.write_bytes(path.read_bytes()[:-3])
    cache.get_or_build("key-a", builder)
    assert cache.rebuilds == 1 and len(calls) == 2
    assert read_grid(path)[0].eps.shape == (3, 4)


def test_fingerprint_mismatch_rebuilds(grid, tmp_path):
    cache = GridCache(tmp_path)
    write_grid(cache.path_for("key-b"), grid, key="something-else")
    built = []
    cache.get_or_build("key-b", lambda: built.append(1) or grid)
    assert built and cache.rebuilds == 1
    assert read_grid(cache.path_for("key-b"))[1]["key"] == "key-b"


def test_disabled_cache_never_touches_disk(grid, tmp_path):
    cache = GridCache(tmp_path / "none", enabled=False)
    cache.get_or_build("k", lambda: grid)
    cache.get_or_build("k", lambda: grid)
    assert cache.misses == 2 and not (tmp_path / "none").exists()


def test_env_var_sets_directory(monkeypatch, tmp_path):
    monkeypatch.setenv("FOCALFIELD_CACHE", str(tmp_path / "c"))
    assert default_cache_dir() == tmp_path / "c"
    assert GridCache().directory == tmp_path / "c"
