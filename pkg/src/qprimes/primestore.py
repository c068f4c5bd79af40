"""Binary store for the ascending sequence of generator indices k.

Layout (little-endian)::

    offset  size  field
    0       4     magic  b"QP1\\n"
    4       4     version (u32, = 1)
    8       8     k_scan_limit (u64): largest k examined, prime or not
    16      8     count (u64): number of k records
    24      8*n   k records (u64), strictly ascending

The prime 2 = 1^2 + 1 has no k >= 1 and is never stored.  While a writer is
open the header carries count = 0, so an interrupted write reads back as
unfinalized rather than as a short valid store.
"""

from __future__ import annotations

import os
import random
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .qsieve import is_prime, iter_k_blocks, k_limit

MAGIC = b"QP1\n"
VERSION = 1
HEADER = struct.Struct("<4sIQQ")
RECORD = np.dtype("<u8")

PathLike = Union[str, os.PathLike]


class StoreError(Exception):
    pass


class StoreFormatError(StoreError):
    """Bad magic or unsupported version."""


class StoreCorruptionError(StoreError):
    def __init__(self, message: str, offset: Optional[int] = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class StoreHeader:
    magic: bytes
    version: int
    k_scan_limit: int
    count: int

    def pack(self) -> bytes:
        return HEADER.pack(self.magic, self.version, self.k_scan_limit, self.count)

    @classmethod
    def unpack(cls, raw: bytes) -> "StoreHeader":
        if len(raw) < HEADER.size:
            raise StoreFormatError("file shorter than the store header")
        magic, version, scan, count = HEADER.unpack(raw[: HEADER.size])
        if magic != MAGIC:
            raise StoreFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise StoreFormatError(f"unsupported store version {version}")
        return cls(magic, version, scan, count)


def _record_offset(i: int) -> int:
    return HEADER.size + 8 * i


class StoreWriter:
    """Single-writer append handle.  Use as a context manager or call :meth:`finalize`.

    With ``resume=True`` an existing valid store is reopened for appending; new
    records must exceed its k_scan_limit.
    """

    def __init__(self, path: PathLike, *, resume: bool = False):
        self.path = Path(path)
        self.count = 0
        self.k_scan_limit = 0
        self.last_k = 0
        if resume and self.path.exists():
            header = read_header(self.path)
            size = self.path.stat().st_size
            if size != _record_offset(header.count):
                raise StoreCorruptionError("cannot resume: payload does not match header count", size)
            self.count = header.count
            self.k_scan_limit = header.k_scan_limit
            if header.count:
                with open(self.path, "rb") as fh:
                    fh.seek(_record_offset(header.count - 1))
                    self.last_k = int.from_bytes(fh.read(8), "little")
            self._fh = open(self.path, "r+b")
            self._fh.seek(0)
            self._fh.write(StoreHeader(MAGIC, VERSION, self.k_scan_limit, 0).pack())
            self._fh.seek(0, os.SEEK_END)
        else:
            self._fh = open(self.path, "wb")
            self._fh.write(StoreHeader(MAGIC, VERSION, 0, 0).pack())

    def write_many(self, ks: Iterable[int]) -> None:
        arr = np.asarray(ks if isinstance(ks, np.ndarray) else list(ks), dtype=np.int64)
        if arr.size == 0:
            return
        if int(arr[0]) < 1:
            raise StoreCorruptionError("k must be >= 1 (the prime 2 is not stored)")
        if int(arr[0]) <= max(self.last_k, self.k_scan_limit) or np.any(np.diff(arr) <= 0):
            raise StoreCorruptionError("k records must be strictly ascending", _record_offset(self.count))
        self._fh.write(arr.astype(RECORD).tobytes())
        self.count += arr.size
        self.last_k = int(arr[-1])

    def write(self, k: int) -> None:
        self.write_many([k])

    def finalize(self, k_scan_limit: int) -> StoreHeader:
        if k_scan_limit < self.last_k:
            raise StoreCorruptionError("k_scan_limit below the largest stored k")
        header = StoreHeader(MAGIC, VERSION, int(k_scan_limit), self.count)
        self._fh.flush()
        self._fh.seek(0)
        self._fh.write(header.pack())
        self._fh.close()
        self.k_scan_limit = k_scan_limit
        return header

    def abort(self) -> None:
        self._fh.close()

    def __enter__(self) -> "StoreWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if not self._fh.closed:
            # an exception leaves the count = 0 sentinel in place
            self._fh.close()


def store_write(ks: Iterable[int], path: PathLike, k_scan_limit: Optional[int] = None) -> StoreHeader:
    """Write an ascending k stream to ``path``.  k_scan_limit defaults to the last k."""
    with StoreWriter(path) as writer:
        writer.write_many(ks)
        return writer.finalize(writer.last_k if k_scan_limit is None else k_scan_limit)


def read_header(path: PathLike) -> StoreHeader:
    with open(path, "rb") as fh:
        return StoreHeader.unpack(fh.read(HEADER.size))


def _checked_payload(path: PathLike) -> tuple[StoreHeader, np.ndarray]:
    raw = Path(path).read_bytes()
    header = StoreHeader.unpack(raw)
    payload = raw[HEADER.size :]
    if len(payload) % 8:
        raise StoreCorruptionError("payload is not a whole number of records", len(raw))
    n = len(payload) // 8
    if header.count == 0 and n:
        raise StoreCorruptionError("store was never finalized (count = 0 with records present)", 16)
    if n != header.count:
        raise StoreCorruptionError(f"header count {header.count} but {n} records present", 16)
    ks = np.frombuffer(payload, dtype=RECORD).astype(np.int64)
    if n:
        bad = np.flatnonzero(np.diff(ks) <= 0)
        if bad.size:
            raise StoreCorruptionError("k records not ascending", _record_offset(int(bad[0]) + 1))
        if ks[0] < 1:
            raise StoreCorruptionError("k = 0 record", HEADER.size)
        if int(ks[-1]) > header.k_scan_limit:
            raise StoreCorruptionError("record beyond k_scan_limit", _record_offset(n - 1))
    return header, ks


def store_read(path: PathLike) -> tuple[StoreHeader, Iterator[int]]:
    """Header plus a streaming iterator over the k records.

    Records are checked for ascending order as they are yielded; a count
    mismatch is reported up front.
    """
    header = read_header(path)
    size = Path(path).stat().st_size
    expected = _record_offset(header.count)
    if header.count == 0 and size > HEADER.size:
        raise StoreCorruptionError("store was never finalized (count = 0 with records present)", 16)
    if size != expected:
        raise StoreCorruptionError(f"header count {header.count} implies {expected} bytes, file has {size}", size)

    def records() -> Iterator[int]:
        prev = 0
        with open(path, "rb") as fh:
            fh.seek(HEADER.size)
            i = 0
            while True:
                chunk = fh.read(8 * 65536)
                if not chunk:
                    break
                for k in np.frombuffer(chunk, dtype=RECORD).tolist():
                    if k <= prev:
                        raise StoreCorruptionError("k records not ascending", _record_offset(i))
                    prev = k
                    i += 1
                    yield k

    return header, records()


def load_ks(path: PathLike) -> tuple[StoreHeader, np.ndarray]:
    """Whole-file read into an int64 array, fully validated."""
    return _checked_payload(path)


@dataclass
class VerifyReport:
    path: str
    count: int
    sampled: int
    failures: list[tuple[int, int]] = field(default_factory=list)  # (byte offset, k)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_store(path: PathLike, sample_rate: float, seed: int = 0) -> VerifyReport:
    """Re-test primality of 4k^2 + 1 on a deterministic pseudo-random sample of records."""
    if not 0.0 <= sample_rate <= 1.0:
        raise ValueError("sample_rate must lie in [0, 1]")
    header, ks = _checked_payload(path)
    n = ks.size
    if sample_rate == 0.0 or n == 0:
        return VerifyReport(str(path), header.count, 0)
    if sample_rate == 1.0:
        idx = range(n)
    else:
        m = max(1, round(n * sample_rate))
        idx = sorted(random.Random(seed).sample(range(n), m))
    report = VerifyReport(str(path), header.count, len(idx))
    for i in idx:
        k = int(ks[i])
        if not is_prime(4 * k * k + 1):
            report.failures.append((_record_offset(i), k))
    return report


@dataclass(frozen=True)
class KStream:
    """An ascending run of generator indices k complete up to k_scan_limit.

    Everything with 4k^2 + 1 <= x_covered is known; statistics refuse to look
    past it.
    """

    ks: np.ndarray
    k_scan_limit: int

    @property
    def x_covered(self) -> int:
        return 4 * (self.k_scan_limit + 1) ** 2

    def qs(self, include_two: bool = True) -> np.ndarray:
        """The primes as uint64; ``include_two`` prepends q = 2."""
        k = self.ks.astype(np.uint64)
        q = np.uint64(4) * k * k + np.uint64(1)
        if include_two:
            q = np.concatenate([np.array([2], dtype=np.uint64), q])
        return q

    def upto(self, x: int) -> np.ndarray:
        """The k with 4k^2 + 1 <= x."""
        self.require(x)
        return self.ks[: int(np.searchsorted(self.ks, k_limit(x), side="right"))]

    def require(self, x: int) -> None:
        if x > self.x_covered:
            raise ValueError(
                f"x = {x} exceeds the scanned range (complete up to {self.x_covered}); "
                "extend the store with `qp sieve`"
            )

    @classmethod
    def from_store(cls, path: PathLike) -> "KStream":
        header, ks = load_ks(path)
        return cls(ks, header.k_scan_limit)

    @classmethod
    def scan(cls, x_max: int, **kwargs) -> "KStream":
        """Enumerate directly, without a store."""
        top = k_limit(x_max)
        blocks = list(iter_k_blocks(1, top + 1, **kwargs))
        ks = np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)
        return cls(ks, top)


def build_store(
    x_max: int,
    path: PathLike,
    *,
    resume: bool = False,
    **kwargs,
) -> StoreHeader:
    """Sieve up to x_max straight into a store, appending after k_scan_limit when resuming."""
    top = k_limit(x_max)
    start = 1
    if resume and Path(path).exists():
        start = read_header(path).k_scan_limit + 1
    with StoreWriter(path, resume=resume) as writer:
        for block in iter_k_blocks(start, top + 1, **kwargs):
            writer.write_many(block)
        return writer.finalize(max(top, writer.k_scan_limit))
