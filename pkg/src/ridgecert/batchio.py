"""Reading and writing gradient batches.

Two formats are supported:

* CSV with header ``x_1..x_d,g_1..g_d,log_w`` and one sample per row;
* raw little-endian binary: a 16-byte header (magic ``RCGB``, u32 n, u32 d,
  u32 reserved = 0) followed by n rows of 2d+1 float64 values in the CSV
  column order.
"""
from __future__ import annotations

import csv
import os
import struct

import numpy as np

from .diagnostic import GradientBatch

MAGIC = b"RCGB"
_HEADER = struct.Struct("<4sIII")


class BatchFormatError(ValueError):
    """The batch file does not follow either supported format."""


def csv_header(d: int) -> list[str]:
    return [f"x_{i}" for i in range(1, d + 1)] + [f"g_{i}" for i in range(1, d + 1)] + ["log_w"]


def _to_batch(rows: np.ndarray, d: int) -> GradientBatch:
    try:
        return GradientBatch(rows[:, :d], rows[:, d : 2 * d], rows[:, 2 * d])
    except ValueError as exc:
        raise BatchFormatError(str(exc)) from exc


def write_batch_csv(batch: GradientBatch, path) -> None:
    rows = np.column_stack([batch.points, batch.grads, batch.log_weights])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(batch.dim))
        for row in rows:
            w.writerow(["%.17g" % v for v in row])


def write_batch_binary(batch: GradientBatch, path) -> None:
    rows = np.column_stack([batch.points, batch.grads, batch.log_weights]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, batch.n, batch.dim, 0))
        fh.write(rows.tobytes())


def read_batch_csv(path) -> GradientBatch:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise BatchFormatError("empty batch file") from None
        if len(header) < 3 or (len(header) - 1) % 2:
            raise BatchFormatError(f"header has {len(header)} columns, expected 2d+1")
        d = (len(header) - 1) // 2
        if header != csv_header(d):
            raise BatchFormatError("header must read x_1..x_d,g_1..g_d,log_w")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise BatchFormatError(f"line {lineno}: {len(rec)} fields, expected {len(header)}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                raise BatchFormatError(f"line {lineno}: non-numeric field") from None
    if not rows:
        raise BatchFormatError("batch file has no samples")
    return _to_batch(np.asarray(rows), d)


def read_batch_binary(path) -> GradientBatch:
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise BatchFormatError("truncated binary header")
        magic, n, d, _ = _HEADER.unpack(head)
        if magic != MAGIC:
            raise BatchFormatError("bad magic in binary batch")
        if n < 1 or d < 1:
            raise BatchFormatError("binary batch must have n >= 1 and d >= 1")
        expected = _HEADER.size + 8 * n * (2 * d + 1)
        if size != expected:
            raise BatchFormatError(f"binary batch is {size} bytes, expected {expected}")
        rows = np.frombuffer(fh.read(), dtype="<f8").reshape(n, 2 * d + 1)
    return _to_batch(rows.astype(float), d)


def read_batch(path) -> GradientBatch:
    """Read either format, detected from the leading magic bytes."""
    with open(path, "rb") as fh:
        start = fh.read(4)
    if start == MAGIC:
        return read_batch_binary(path)
    try:
        return read_batch_csv(path)
    except UnicodeDecodeError:
        raise BatchFormatError("file is neither CSV nor a binary batch") from None
