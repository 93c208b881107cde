"""Persistence of certification state for later incremental reuse.

Binary container: magic ``IRSC``, a u16 format version, a length-prefixed
JSON header, then per record a length-prefixed JSON metadata block followed
by the raw seed array (u64 little-endian) and prediction array (u16
little-endian). Raw arrays dominate the file, so a record costs about
10 bytes per sample plus a small metadata constant. Files are immutable
after the atomic write; readers never see partial state.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import CacheFormatError, CacheVersionError, ParameterError

MAGIC = b"IRSC"
FORMAT_VERSION = 1
DIGEST_ALGORITHM = "blake2b-64"

_EMPTY_U64 = np.empty(0, dtype=np.uint64)
_EMPTY_U16 = np.empty(0, dtype=np.uint16)


def input_digest(x: np.ndarray) -> int:
    """64-bit content hash of an input vector (guards cache/input pairing)."""
    data = np.ascontiguousarray(x, dtype="<f8").tobytes()
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class CacheRecord:
    input_id: str
    input_digest: int
    top_class: int
    p_lower: float | None  # None marks an abstained original certification
    sigma: float
    alpha: float
    n: int
    seeds: np.ndarray
    predictions: np.ndarray
    generator_id: str

    @property
    def is_abstained(self) -> bool:
        return self.p_lower is None

    def __post_init__(self):
        if self.is_abstained:
            if len(self.seeds) or len(self.predictions):
                raise ParameterError("abstained records carry no samples")
            return
        if not (0.5 < self.p_lower <= 1.0):
            raise ParameterError(f"certified p_lower must be in (1/2, 1], got {self.p_lower}")
        if len(self.seeds) != self.n or len(self.predictions) != self.n:
            raise ParameterError(
                f"record arrays must have length n={self.n}, got "
                f"{len(self.seeds)} seeds / {len(self.predictions)} predictions"
            )

    @classmethod
    def abstained(cls, input_id, input_digest, sigma, alpha, n, generator_id):
        return cls(
            input_id=input_id,
            input_digest=input_digest,
            top_class=-1,
            p_lower=None,
            sigma=sigma,
            alpha=alpha,
            n=n,
            seeds=_EMPTY_U64,
            predictions=_EMPTY_U16,
            generator_id=generator_id,
        )


@dataclass(frozen=True)
class CacheHeader:
    generator_id: str
    sigma: float
    alpha: float
    n: int
    classifier: str
    created_at: str
    format_version: int = FORMAT_VERSION
    digest_algorithm: str = DIGEST_ALGORITHM


def _validate(header: CacheHeader, records: list[CacheRecord]) -> None:
    seen: set[str] = set()
    for rec in records:
        if rec.input_id in seen:
            raise ParameterError(f"duplicate input_id {rec.input_id!r}")
        seen.add(rec.input_id)
        shared = (rec.sigma, rec.alpha, rec.n, rec.generator_id)
        expected = (header.sigma, header.alpha, header.n, header.generator_id)
        if shared != expected:
            raise ParameterError(
                f"record {rec.input_id!r} fields {shared} disagree with header {expected}"
            )


def _record_meta(rec: CacheRecord) -> dict:
    return {
        "input_id": rec.input_id,
        "input_digest": rec.input_digest,
        "top_class": rec.top_class,
        "p_lower": rec.p_lower,
        "abstained": rec.is_abstained,
    }


def write_cache(path: str, header: CacheHeader, records: list[CacheRecord]) -> None:
    """Validate, then atomically write (temp file + rename into place)."""
    _validate(header, records)
    header_doc = {
        "format_version": header.format_version,
        "generator_id": header.generator_id,
        "sigma": header.sigma,
        "alpha": header.alpha,
        "n": header.n,
        "classifier": header.classifier,
        "created_at": header.created_at,
        "digest_algorithm": header.digest_algorithm,
        "records": len(records),
    }
    header_bytes = json.dumps(header_doc, separators=(",", ":"), sort_keys=True).encode("utf-8")

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".cache-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<H", header.format_version))
            fh.write(struct.pack("<I", len(header_bytes)))
            fh.write(header_bytes)
            for rec in records:
                meta = json.dumps(
                    _record_meta(rec), separators=(",", ":"), sort_keys=True
                ).encode("utf-8")
                fh.write(struct.pack("<I", len(meta)))
                fh.write(meta)
                if not rec.is_abstained:
                    fh.write(np.ascontiguousarray(rec.seeds, dtype="<u8").tobytes())
                    fh.write(np.ascontiguousarray(rec.predictions, dtype="<u2").tobytes())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise CacheFormatError(f"truncated cache file while reading {what}")
    return data


def read_cache(path: str) -> tuple[CacheHeader, list[CacheRecord]]:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise CacheFormatError(f"{path}: not a certification cache (bad magic)")
        (version,) = struct.unpack("<H", _read_exact(fh, 2, "version"))
        if version != FORMAT_VERSION:
            raise CacheVersionError(
                f"{path}: format version {version}, this build reads {FORMAT_VERSION}"
            )
        (header_len,) = struct.unpack("<I", _read_exact(fh, 4, "header length"))
        try:
            doc = json.loads(_read_exact(fh, header_len, "header"))
            header = CacheHeader(
                generator_id=doc["generator_id"],
                sigma=doc["sigma"],
                alpha=doc["alpha"],
                n=doc["n"],
                classifier=doc["classifier"],
                created_at=doc["created_at"],
                format_version=doc["format_version"],
                digest_algorithm=doc["digest_algorithm"],
            )
            expected_records = int(doc["records"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CacheFormatError(f"{path}: bad header: {exc}") from exc

        records = []
        for _ in range(expected_records):
            (meta_len,) = struct.unpack("<I", _read_exact(fh, 4, "record metadata length"))
            try:
                meta = json.loads(_read_exact(fh, meta_len, "record metadata"))
            except json.JSONDecodeError as exc:
                raise CacheFormatError(f"{path}: bad record metadata: {exc}") from exc
            abstained = bool(meta.get("abstained"))
            if abstained:
                seeds, predictions = _EMPTY_U64, _EMPTY_U16
            else:
                seeds = np.frombuffer(
                    _read_exact(fh, 8 * header.n, "seed array"), dtype="<u8"
                ).astype(np.uint64)
                predictions = np.frombuffer(
                    _read_exact(fh, 2 * header.n, "prediction array"), dtype="<u2"
                ).astype(np.uint16)
            try:
                records.append(
                    CacheRecord(
                        input_id=meta["input_id"],
                        input_digest=int(meta["input_digest"]),
                        top_class=int(meta["top_class"]),
                        p_lower=meta["p_lower"],
                        sigma=header.sigma,
                        alpha=header.alpha,
                        n=header.n,
                        seeds=seeds,
                        predictions=predictions,
                        generator_id=header.generator_id,
                    )
                )
            except (KeyError, TypeError, ParameterError) as exc:
                raise CacheFormatError(f"{path}: inconsistent record: {exc}") from exc
        if fh.read(1):
            raise CacheFormatError(f"{path}: trailing bytes after final record")
    _validate(header, records)
    return header, records
