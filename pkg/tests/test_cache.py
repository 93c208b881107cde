"""Cache container: round trips, validation, corruption handling, size."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothcert.cache import (
    FORMAT_VERSION,
    CacheHeader,
    CacheRecord,
    input_digest,
    read_cache,
    write_cache,
)
from smoothcert.errors import CacheFormatError, CacheVersionError, ParameterError
from smoothcert.noise import GENERATOR_ID


def make_header(n=16, sigma=1.0, alpha=0.001):
    return CacheHeader(
        generator_id=GENERATOR_ID,
        sigma=sigma,
        alpha=alpha,
        n=n,
        classifier="threshold1d(t=0.0,above=1,dim=1)",
        created_at="2024-01-01T00:00:00Z",
    )


def make_record(input_id="input-000000", n=16, p_lower=0.9, seed=0):
    rng = np.random.default_rng(seed)
    return CacheRecord(
        input_id=input_id,
        input_digest=int(rng.integers(0, 2**63)),
        top_class=1,
        p_lower=p_lower,
        sigma=1.0,
        alpha=0.001,
        n=n,
        seeds=rng.integers(0, 2**64, n, dtype=np.uint64),
        predictions=rng.integers(0, 2, n, dtype=np.uint16),
        generator_id=GENERATOR_ID,
    )


def records_equal(a: CacheRecord, b: CacheRecord) -> bool:
    return (
        a.input_id == b.input_id
        and a.input_digest == b.input_digest
        and a.top_class == b.top_class
        and a.p_lower == b.p_lower
        and (a.sigma, a.alpha, a.n, a.generator_id) == (b.sigma, b.alpha, b.n, b.generator_id)
        and np.array_equal(a.seeds, b.seeds)
        and np.array_equal(a.predictions, b.predictions)
    )


def test_write_read_round_trip(tmp_path):
    path = str(tmp_path / "c.irsc")
    records = [make_record(f"input-{i:06d}", seed=i) for i in range(5)]
    write_cache(path, make_header(), records)
    header, got = read_cache(path)
    assert header.n == 16 and header.generator_id == GENERATOR_ID
    assert len(got) == 5
    assert all(records_equal(a, b) for a, b in zip(records, got))


def test_abstained_record_round_trip(tmp_path):
    path = str(tmp_path / "c.irsc")
    rec = CacheRecord.abstained("input-000000", 77, 1.0, 0.001, 16, GENERATOR_ID)
    write_cache(path, make_header(), [rec])
    _, got = read_cache(path)
    assert got[0].is_abstained and len(got[0].seeds) == 0


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 200),
    count=st.integers(1, 4),
    data=st.data(),
)
def test_round_trip_property(tmp_path_factory, n, count, data):
    path = str(tmp_path_factory.mktemp("cache") / "c.irsc")
    records = []
    for i in range(count):
        if data.draw(st.booleans()):
            records.append(
                CacheRecord.abstained(f"input-{i:06d}", i, 1.0, 0.001, n, GENERATOR_ID)
            )
        else:
            p = data.draw(st.floats(min_value=0.5, max_value=1.0, exclude_min=True))
            records.append(make_record(f"input-{i:06d}", n=n, p_lower=p, seed=i))
    write_cache(path, make_header(n=n), records)
    _, got = read_cache(path)
    assert all(records_equal(a, b) for a, b in zip(records, got))


def test_record_length_mismatch_rejected():
    with pytest.raises(ParameterError, match="length"):
        CacheRecord(
            input_id="input-000000",
            input_digest=0,
            top_class=0,
            p_lower=0.9,
            sigma=1.0,
            alpha=0.001,
            n=16,
            seeds=np.zeros(16, dtype=np.uint64),
            predictions=np.zeros(15, dtype=np.uint16),
            generator_id=GENERATOR_ID,
        )


def test_p_lower_domain_rejected():
    with pytest.raises(ParameterError, match="p_lower"):
        make_record(p_lower=0.4)


def test_duplicate_input_id_rejected(tmp_path):
    path = str(tmp_path / "c.irsc")
    with pytest.raises(ParameterError, match="duplicate"):
        write_cache(path, make_header(), [make_record(), make_record()])


def test_header_mismatch_rejected(tmp_path):
    path = str(tmp_path / "c.irsc")
    with pytest.raises(ParameterError, match="disagree"):
        write_cache(path, make_header(sigma=2.0), [make_record()])


def test_failed_validation_writes_nothing(tmp_path):
    path = str(tmp_path / "c.irsc")
    with pytest.raises(ParameterError):
        write_cache(path, make_header(), [make_record(), make_record()])
    assert not (tmp_path / "c.irsc").exists()
    assert list(tmp_path.iterdir()) == []  # no stray temp files either


def test_truncated_file(tmp_path):
    path = str(tmp_path / "c.irsc")
    write_cache(path, make_header(), [make_record()])
    raw = open(path, "rb").read()
    open(path, "wb").write(raw[:-7])
    with pytest.raises(CacheFormatError, match="truncated"):
        read_cache(path)


def test_trailing_garbage(tmp_path):
    path = str(tmp_path / "c.irsc")
    write_cache(path, make_header(), [make_record()])
    with open(path, "ab") as fh:
        fh.write(b"junk")
    with pytest.raises(CacheFormatError, match="trailing"):
        read_cache(path)


def test_bad_magic(tmp_path):
    path = str(tmp_path / "c.irsc")
    write_cache(path, make_header(), [make_record()])
    raw = bytearray(open(path, "rb").read())
    raw[:4] = b"NOPE"
    open(path, "wb").write(raw)
    with pytest.raises(CacheFormatError, match="magic"):
        read_cache(path)


def test_version_bump_rejected(tmp_path):
    path = str(tmp_path / "c.irsc")
    write_cache(path, make_header(), [make_record()])
    raw = bytearray(open(path, "rb").read())
    raw[4:6] = struct.pack("<H", FORMAT_VERSION + 1)
    open(path, "wb").write(raw)
    with pytest.raises(CacheVersionError):
        read_cache(path)


def test_record_size_is_linear_in_n(tmp_path):
    # serialized record cost stays within 16 bytes/sample plus a constant
    n = 10_000
    path = str(tmp_path / "c.irsc")
    write_cache(path, make_header(n=n), [make_record(n=n)])
    size = (tmp_path / "c.irsc").stat().st_size
    assert size <= 16 * n + 1024


def test_input_digest_is_content_hash():
    x = np.array([1.0, 2.0, 3.0])
    assert input_digest(x) == input_digest(x.copy())
    assert input_digest(x) != input_digest(np.array([1.0, 2.0, 3.000001]))
    assert 0 <= input_digest(x) < 2**64
