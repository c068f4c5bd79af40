from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprimes.primestore import (
    HEADER,
    KStream,
    StoreCorruptionError,
    StoreFormatError,
    StoreWriter,
    build_store,
    load_ks,
    read_header,
    store_read,
    store_write,
    verify_store,
)

from conftest import brute_ks


def test_header_is_24_bytes():
    assert HEADER.size == 24


@given(st.lists(st.integers(1, 2**40), unique=True, max_size=200))
@settings(max_examples=50, deadline=None)
def test_round_trip(tmp_path_factory, ks):
    path = tmp_path_factory.mktemp("rt") / "s.bin"
    ks = sorted(ks)
    store_write(ks, path)
    header, it = store_read(path)
    assert list(it) == ks
    assert header.count == len(ks)
    assert load_ks(path)[1].tolist() == ks


def test_write_rejects_unsorted(tmp_path):
    with StoreWriter(tmp_path / "s.bin") as w:
        w.write_many([1, 2, 5])
        with pytest.raises(StoreCorruptionError):
            w.write(4)
        with pytest.raises(StoreCorruptionError):
            w.write_many([7, 6])


def test_interrupted_write_reads_as_unfinalized(tmp_path):
    path = tmp_path / "s.bin"
    w = StoreWriter(path)
    w.write_many([1, 2, 3])
    w.abort()
    with pytest.raises(StoreCorruptionError, match="never finalized"):
        load_ks(path)
    with pytest.raises(StoreCorruptionError):
        store_read(path)


def test_truncated_payload_detected(tmp_path):
    path = tmp_path / "s.bin"
    store_write([1, 2, 3], path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(StoreCorruptionError):
        load_ks(path)


def test_out_of_order_record_reports_offset(tmp_path):
    path = tmp_path / "s.bin"
    store_write([1, 2, 3, 5], path)
    raw = bytearray(path.read_bytes())
    raw[24 + 16 : 24 + 24] = (1).to_bytes(8, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(StoreCorruptionError) as info:
        load_ks(path)
    assert info.value.offset == 24 + 16


def test_bad_magic_and_version(tmp_path):
    path = tmp_path / "s.bin"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(StoreFormatError):
        read_header(path)
    store_write([1], path)
    raw = bytearray(path.read_bytes())
    raw[4] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(StoreFormatError):
        read_header(path)


def test_verify_store_flags_composites(tmp_path):
    path = tmp_path / "s.bin"
    store_write([1, 2, 3, 4, 5], path)  # 4*16+1 = 65 is composite
    rep = verify_store(path, 1.0)
    assert not rep.ok and rep.failures == [(24 + 3 * 8, 4)]
    assert verify_store(path, 0.0).sampled == 0


def test_verify_sampling_is_deterministic(tmp_path):
    path = tmp_path / "s.bin"
    build_store(10**8, path)
    a, b = verify_store(path, 0.1, seed=7), verify_store(path, 0.1, seed=7)
    assert a.sampled == b.sampled and a.ok and b.ok


def test_build_store_matches_brute_force(tmp_path):
    path = tmp_path / "s.bin"
    header = build_store(4 * 2000**2 + 1, path)
    assert header.k_scan_limit == 2000
    assert load_ks(path)[1].tolist() == brute_ks(2000).tolist()


def test_resume_extends_store(tmp_path):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    build_store(10**6, a)
    build_store(10**9, a, resume=True, segment_size=1000)
    build_store(10**9, b)
    assert a.read_bytes() == b.read_bytes()


def test_kstream_refuses_uncovered_range():
    s = KStream(brute_ks(100), 100)
    assert s.x_covered == 4 * 101**2
    s.upto(s.x_covered)
    with pytest.raises(ValueError, match="qp sieve"):
        s.upto(s.x_covered + 1)


def test_kstream_qs_include_two():
    s = KStream(np.array([1, 2, 3], dtype=np.int64), 3)
    assert s.qs().tolist() == [2, 5, 17, 37]
    assert s.qs(include_two=False).tolist() == [5, 17, 37]
