"""Binary snapshots, trajectory and statistics CSV, and event logs.

Snapshot layout (little-endian): magic ``PWF1``, u32 version, u32 N, f64 L,
f64 t, u32 field count, then for each field a u32 name length and the ASCII
name, followed by the payload: one N x N float64 array per field, row-major.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"PWF1"
VERSION = 1
TRAJECTORY_HEADER = ("t", "x", "y", "vx", "vy", "in_contact", "cavity")


class SnapshotFormatError(ValueError):
    pass


@dataclass
class Snapshot:
    N: int
    L: float
    t: float
    fields: dict

    def __getitem__(self, name):
        return self.fields[name]


def header_size(names) -> int:
    return 4 + 4 + 4 + 8 + 8 + 4 + sum(4 + len(n.encode("ascii")) for n in names)


def encode_snapshot(fields: dict, L: float, t: float = 0.0) -> bytes:
    if not fields:
        raise SnapshotFormatError("a snapshot needs at least one field")
    arrays = {name: np.asarray(a, dtype="<f8") for name, a in fields.items()}
    shapes = {a.shape for a in arrays.values()}
    if len(shapes) != 1:
        raise SnapshotFormatError(f"fields have different shapes: {sorted(shapes)}")
    (shape,) = shapes
    if len(shape) != 2 or shape[0] != shape[1]:
        raise SnapshotFormatError(f"fields must be square 2-D arrays, got {shape}")
    N = shape[0]
    parts = [MAGIC, struct.pack("<IIddI", VERSION, N, float(L), float(t), len(arrays))]
    for name in arrays:
        raw = name.encode("ascii")
        parts.append(struct.pack("<I", len(raw)) + raw)
    for a in arrays.values():
        parts.append(np.ascontiguousarray(a).tobytes(order="C"))
    return b"".join(parts)


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < 4 or data[:4] != MAGIC:
        raise SnapshotFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    fixed = struct.calcsize("<IIddI")
    if len(data) < 4 + fixed:
        raise SnapshotFormatError("truncated header")
    version, N, L, t, count = struct.unpack_from("<IIddI", data, 4)
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    pos = 4 + fixed
    names = []
    for _ in range(count):
        if pos + 4 > len(data):
            raise SnapshotFormatError("truncated field table")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + n > len(data):
            raise SnapshotFormatError("truncated field name")
        try:
            names.append(data[pos:pos + n].decode("ascii"))
        except UnicodeDecodeError:
            raise SnapshotFormatError("field name is not ASCII") from None
        pos += n
    size = N * N * 8
    if len(data) != pos + count * size:
        raise SnapshotFormatError(f"payload has {len(data) - pos} bytes, expected {count * size}")
    fields = {}
    for name in names:
        fields[name] = np.frombuffer(data, dtype="<f8", count=N * N, offset=pos).reshape(N, N).astype(float)
        pos += size
    return Snapshot(N, L, t, fields)


def write_snapshot(path, fields: dict, L: float, t: float = 0.0) -> None:
    Path(path).write_bytes(encode_snapshot(fields, L, t))


def read_snapshot(path) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_trajectory(rows, path) -> None:
    last = -np.inf
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for row in rows:
            if len(row) != len(TRAJECTORY_HEADER):
                raise ValueError(f"trajectory row has {len(row)} columns, expected {len(TRAJECTORY_HEADER)}")
            if not row[0] >= last:
                raise ValueError(f"trajectory times must be non-decreasing (t={row[0]!r} after {last!r})")
            last = row[0]
            w.writerow([_cell(v) for v in row])


def read_trajectory(path) -> list[tuple]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or tuple(header) != TRAJECTORY_HEADER:
            raise ValueError(f"{path}: not a trajectory file (header {header!r})")
        return [
            (float(t), float(x), float(y), float(vx), float(vy), int(c), int(k))
            for t, x, y, vx, vy, c, k in r
        ]


def write_events(events, path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")


def read_events(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _cell(v) for v in row])
