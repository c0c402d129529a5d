"""On-disk cache of extinction grids.

File layout (all integers and floats little-endian)::

    bytes 0..7     magic b"EXTGRID1"
    bytes 8..15    uint64 length N of the JSON header
    N bytes        UTF-8 JSON header
    n_rho doubles  radial axis (m)
    n_z doubles    axial axis (m, absolute)
    n_rho*n_z      extinction matrix, row-major (rho outer)

The header carries ``version``, ``key`` (the cache fingerprint),
``config_hash``, ``axes`` (``{"rho": n_rho, "z": n_z}`` plus bounds),
``meta`` and ``payload_sha256`` over the three arrays.  A file whose magic,
checksum or fingerprint does not match is rebuilt.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .scattering import ExtinctionGrid

MAGIC = b"EXTGRID1"
VERSION = 1
ENV_VAR = "FOCALFIELD_CACHE"
_LE_F8 = np.dtype("<f8")

log = logging.getLogger(__name__)


class CacheFormatError(ValueError):
    """A cache file is truncated, corrupt or of an unknown format."""


def _payload(grid: ExtinctionGrid) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype=_LE_F8).tobytes()
                    for a in (grid.rho, grid.z, grid.eps))


def dumps_grid(grid: ExtinctionGrid, key: str = "") -> bytes:
    """Serialize ``grid`` to the cache container format."""
    payload = _payload(grid)
    header = {
        "version": VERSION,
        "key": key,
        "config_hash": grid.config_hash,
        "axes": {"rho": int(grid.rho.size), "z": int(grid.z.size),
                 "rho_range": [float(grid.rho[0]), float(grid.rho[-1])],
                 "z_range": [float(grid.z[0]), float(grid.z[-1])]},
        "dtype": "<f8",
        "meta": grid.meta,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(raw)) + raw + payload


def loads_grid(data: bytes) -> tuple[ExtinctionGrid, dict]:
    """Parse a cache container; returns the grid and its header."""
    if len(data) < 16 or data[:8] != MAGIC:
        raise CacheFormatError("bad magic")
    (n,) = struct.unpack("<Q", data[8:16])
    if 16 + n > len(data):
        raise CacheFormatError("truncated header")
    try:
        header = json.loads(data[16:16 + n].decode("utf-8"))
        n_rho, n_z = int(header["axes"]["rho"]), int(header["axes"]["z"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CacheFormatError(f"unreadable header: {exc}") from exc
    if header.get("version") != VERSION:
        raise CacheFormatError(f"unsupported version {header.get('version')}")
    payload = data[16 + n:]
    if len(payload) != 8 * (n_rho + n_z + n_rho * n_z):
        raise CacheFormatError("payload size does not match the axes")
    if hashlib.sha256(payload).hexdigest() != header.get("payload_sha256"):
        raise CacheFormatError("payload checksum mismatch")
    values = np.frombuffer(payload, dtype=_LE_F8).astype(float)
    rho = values[:n_rho]
    z = values[n_rho:n_rho + n_z]
    eps = values[n_rho + n_z:].reshape(n_rho, n_z)
    try:
        grid = ExtinctionGrid(rho, z, eps, config_hash=header.get("config_hash", ""),
                              meta=header.get("meta", {}))
    except ValueError as exc:
        raise CacheFormatError(f"invalid grid contents: {exc}") from exc
    return grid, header


def write_grid(path, grid: ExtinctionGrid, key: str = "") -> None:
    """Atomically write ``grid`` to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(dumps_grid(grid, key))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def read_grid(path) -> tuple[ExtinctionGrid, dict]:
    return loads_grid(Path(path).read_bytes())


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "focalfield"


class GridCache:
    """Directory of cached grids keyed by a fingerprint string.

    ``directory`` defaults to ``$FOCALFIELD_CACHE`` or the user cache
    directory.  With ``enabled=False`` every request builds and nothing is
    read or written.  ``hits``, ``misses`` and ``rebuilds`` count lookups.
    """

    def __init__(self, directory=None, enabled: bool = True):
        self.directory = Path(directory) if directory else default_cache_dir()
        self.enabled = enabled
        self.hits = 0
        self.misses = 0
        self.rebuilds = 0

    def path_for(self, key: str) -> Path:
        return self.directory / f"grid-{key[:24]}.extgrid"

    def load(self, key: str) -> ExtinctionGrid | None:
        """Return the cached grid for ``key`` or ``None``; bad files are reported."""
        path = self.path_for(key)
        if not self.enabled or not path.exists():
            return None
        try:
            grid, header = read_grid(path)
        except (OSError, CacheFormatError) as exc:
            log.warning("cache file %s is unusable (%s); rebuilding", path, exc)
            self.rebuilds += 1
            return None
        if header.get("key") != key:
            log.warning("cache file %s has fingerprint %s, expected %s; rebuilding",
                        path, str(header.get("key"))[:12], key[:12])
            self.rebuilds += 1
            return None
        return grid

    def get_or_build(self, key: str, builder) -> ExtinctionGrid:
        """Load the grid for ``key``, or call ``builder()`` and persist its result."""
        grid = self.load(key)
        if grid is not None:
            self.hits += 1
            return grid
        self.misses += 1
        grid = builder()
        if self.enabled:
            try:
                write_grid(self.path_for(key), grid, key)
            except OSError as exc:
                log.warning("could not write cache file %s: %s", self.path_for(key), exc)
        return grid
