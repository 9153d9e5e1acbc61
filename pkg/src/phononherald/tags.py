"""Binary time-tag stream format (little-endian, magic "PTT1").

Header (32 bytes): magic 4s, version u16, reserved u16, config-hash u64
(FNV-1a of the canonical config JSON), trial count u64, record count u64.
Records (24 bytes each): trial_index u64, detector u8, pulse_label u8,
reserved u16 = 0, time_ps u64, pad u32 = 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"PTT1"
FORMAT_VERSION = 1
HEADER_STRUCT = struct.Struct("<4sHHQQQ")
RECORD_SIZE = 24

WRITE_PULSE = 0
READ_PULSE = 1

RECORD_DTYPE = np.dtype([
    ("trial_index", "<u8"),
    ("detector", "u1"),
    ("pulse_label", "u1"),
    ("reserved", "<u2"),
    ("time_ps", "<u8"),
    ("pad", "<u4"),
])

assert RECORD_DTYPE.itemsize == RECORD_SIZE


class TagFormatError(Exception):
    """Malformed tag-stream file; message carries the byte position."""


@dataclass
class TagStream:
    config_hash: int
    trial_count: int
    records: np.ndarray  # structured array with RECORD_DTYPE

    def __post_init__(self):
        self.records = np.asarray(self.records, dtype=RECORD_DTYPE)

    def __len__(self) -> int:
        return len(self.records)


def make_records(trial_index, detector, pulse_label, time_ps) -> np.ndarray:
    records = np.zeros(len(trial_index), dtype=RECORD_DTYPE)
    records["trial_index"] = trial_index
    records["detector"] = detector
    records["pulse_label"] = pulse_label
    records["time_ps"] = time_ps
    return records


def write_tagstream(stream: TagStream, path) -> None:
    header = HEADER_STRUCT.pack(MAGIC, FORMAT_VERSION, 0,
                                stream.config_hash & 0xFFFFFFFFFFFFFFFF,
                                stream.trial_count, len(stream.records))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(stream.records.tobytes())


def read_tagstream(path) -> TagStream:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER_STRUCT.size:
        raise TagFormatError(f"truncated header: {len(raw)} bytes at position 0")
    magic, version, _reserved, cfg_hash, trial_count, record_count = \
        HEADER_STRUCT.unpack_from(raw, 0)
    if magic != MAGIC:
        raise TagFormatError(f"bad magic {magic!r} at position 0")
    if version != FORMAT_VERSION:
        raise TagFormatError(f"unsupported format version {version}")
    body = raw[HEADER_STRUCT.size:]
    if len(body) % RECORD_SIZE:
        raise TagFormatError(
            f"truncated record at position {HEADER_STRUCT.size + len(body) - len(body) % RECORD_SIZE}")
    records = np.frombuffer(body, dtype=RECORD_DTYPE)
    if len(records) != record_count:
        raise TagFormatError(
            f"header promises {record_count} records, file holds {len(records)}")
    bad_det = records["detector"] > 1
    if bad_det.any():
        pos = HEADER_STRUCT.size + int(np.argmax(bad_det)) * RECORD_SIZE
        raise TagFormatError(f"invalid detector id at position {pos}")
    bad_label = records["pulse_label"] > 1
    if bad_label.any():
        pos = HEADER_STRUCT.size + int(np.argmax(bad_label)) * RECORD_SIZE
        raise TagFormatError(f"invalid pulse label at position {pos}")
    bad_trial = records["trial_index"] >= trial_count
    if bad_trial.any():
        pos = HEADER_STRUCT.size + int(np.argmax(bad_trial)) * RECORD_SIZE
        raise TagFormatError(f"trial index beyond header trial count at position {pos}")
    return TagStream(cfg_hash, trial_count, records.copy())
