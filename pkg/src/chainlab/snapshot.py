"""Versioned persistence of ring configurations.

Binary layout (little-endian), one record after another in a file:

    magic   6 bytes   b"RINGSN"
    version uint16    FORMAT_VERSION
    hlen    uint32    length of the header in bytes
    header  hlen      UTF-8 JSON: {"N", "t", "seed", "params", "meta"}
    eta     N * f8    site values in ring order

The CSV form holds one record: "# key=json" header lines, then x,eta rows.
Values are written with repr so a CSV round trip is exact.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .dynamics import RingState

MAGIC = b"RINGSN"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<6sHI")


def _header(state: RingState, seed, params) -> dict:
    if params is not None and hasattr(params, "as_dict"):
        params = params.as_dict()
    return {"N": state.N, "t": float(state.t), "seed": seed, "params": params, "meta": state.meta}


def encode(state: RingState, seed=None, params=None) -> bytes:
    head = json.dumps(_header(state, seed, params), sort_keys=True).encode()
    body = np.ascontiguousarray(state.eta, dtype="<f8").tobytes()
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(head)) + head + body


def write_snapshots(path, states, seed=None, params=None) -> None:
    with open(path, "wb") as fh:
        for s in states:
            fh.write(encode(s, seed, params))


def read_snapshots(path) -> list[tuple[RingState, dict]]:
    """All records in a binary file as (state, header) pairs."""
    out = []
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0
    while pos < len(data):
        if len(data) - pos < _PREFIX.size:
            raise ValueError("truncated snapshot record")
        magic, version, hlen = _PREFIX.unpack_from(data, pos)
        if magic != MAGIC:
            raise ValueError("not a ring snapshot file")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        pos += _PREFIX.size
        head = json.loads(data[pos:pos + hlen].decode())
        pos += hlen
        size = 8 * head["N"]
        if len(data) - pos < size:
            raise ValueError("truncated snapshot record")
        eta = np.frombuffer(data, dtype="<f8", count=head["N"], offset=pos).astype(float)
        pos += size
        out.append((RingState(eta, head["t"], head.get("meta") or {}), head))
    return out


def to_csv(state: RingState, path=None, seed=None, params=None) -> str:
    head = _header(state, seed, params)
    lines = [f"# schema=ring-snapshot/{FORMAT_VERSION}"]
    lines += [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in head.items()]
    lines.append("x,eta")
    lines += [f"{x},{v!r}" for x, v in enumerate(state.eta.tolist())]
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def from_csv(path) -> tuple[RingState, dict]:
    head, vals = {}, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                if k == "schema":
                    if v != f"ring-snapshot/{FORMAT_VERSION}":
                        raise ValueError(f"unsupported schema {v}")
                else:
                    head[k] = json.loads(v)
            elif line and line != "x,eta":
                vals.append(float(line.split(",")[1]))
    eta = np.array(vals)
    if head.get("N") != eta.size:
        raise ValueError("site count in header does not match the data")
    return RingState(eta, head["t"], head.get("meta") or {}), head
