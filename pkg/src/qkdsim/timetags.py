"""On-board data-volume arithmetic and the binary time-tag record codec.

Each detector click needs log2(horizon / delta_t) timestamp bits plus two
polarization bits (basis, outcome). The codec serializes clicks into a
compact little-endian stream with either absolute or delta-compressed
timestamps.

File format (all little-endian):

    header, 16 bytes:
        magic   "NQTT"          4 bytes
        version u16             currently 1
        delta_t u64             quantization step in femtoseconds
        mode    u8              0 = absolute, 1 = relative
        pad     u8              zero

    absolute record, 8 bytes:  value = tick << 2 | basis << 1 | outcome
        tick is the 62-bit quantized timestamp (units of delta_t).
    relative record, 6 bytes:  value = delta << 2 | basis << 1 | outcome
        delta is the 46-bit tick difference to the previous event.

    In relative mode the first event is stored as one absolute record. A
    delta that does not fit 46 bits is written as an escape record (delta
    field all ones, basis/outcome zero) immediately followed by one absolute
    record carrying the event.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

MAGIC = b"NQTT"
VERSION = 1
MODE_ABSOLUTE = 0
MODE_RELATIVE = 1
HEADER_BYTES = 16
ABSOLUTE_RECORD_BYTES = 8
RELATIVE_RECORD_BYTES = 6
TICK_BITS = 62
DELTA_BITS = 46
ESCAPE_DELTA = (1 << DELTA_BITS) - 1
MAX_TICK = (1 << TICK_BITS) - 1
MAX_DELTA = ESCAPE_DELTA - 1

_MODE_NAMES = {"absolute": MODE_ABSOLUTE, "relative": MODE_RELATIVE}


class CodecError(ValueError):
    """Malformed stream or a value that does not fit the record format."""


@dataclass(frozen=True)
class BitsPerEvent:
    exact: float
    byte_aligned: int


@dataclass(frozen=True)
class PassVolume:
    per_experiment_bytes: float
    per_day_bytes: float


@dataclass(frozen=True)
class TimeTagRecord:
    """One decoded click: quantized timestamp plus polarization bits."""

    quantized_time: int
    basis_bit: int
    outcome_bit: int


@dataclass(frozen=True)
class DecodedStream:
    """Result of decode_stream: tick counts and the header fields."""

    ticks: np.ndarray
    basis: np.ndarray
    outcome: np.ndarray
    delta_t_s: float
    mode: str

    @property
    def times_s(self) -> np.ndarray:
        return self.ticks.astype(np.float64) * self.delta_t_s

    def records(self) -> Iterator[TimeTagRecord]:
        for i in range(self.ticks.size):
            yield TimeTagRecord(
                int(self.ticks[i]), int(self.basis[i]), int(self.outcome[i])
            )


def bits_per_event(horizon_s: float, delta_t_s: float) -> BitsPerEvent:
    """Bits needed to stamp one event uniquely over a horizon, plus the two
    polarization bits; also rounded up to whole bytes."""
    if not horizon_s >= delta_t_s > 0:
        raise ValueError(
            f"need horizon_s >= delta_t_s > 0, got {horizon_s}, {delta_t_s}"
        )
    exact = math.log2(horizon_s / delta_t_s) + 2.0
    return BitsPerEvent(exact=exact, byte_aligned=8 * math.ceil(exact / 8.0))


def stream_rate(event_rate_cps: float, bits_per_event_value: float) -> float:
    """Storage rate in bytes per second."""
    if event_rate_cps < 0 or bits_per_event_value < 0:
        raise ValueError("event rate and bits per event must be >= 0")
    return event_rate_cps * bits_per_event_value / 8.0


def pass_volume(
    duration_s: float, rate_bytes_s: float, passes_per_day: float
) -> PassVolume:
    """Bytes accumulated per experiment and per day."""
    if min(duration_s, rate_bytes_s, passes_per_day) < 0:
        raise ValueError("all arguments must be >= 0")
    per_experiment = duration_s * rate_bytes_s
    return PassVolume(
        per_experiment_bytes=per_experiment,
        per_day_bytes=per_experiment * passes_per_day,
    )


def housekeeping_volume(
    n_channels: int, bytes_per_value: int, sample_rate_hz: float, duration_s: float
) -> float:
    """Bytes of housekeeping telemetry over a duration."""
    if min(n_channels, bytes_per_value, sample_rate_hz, duration_s) < 0:
        raise ValueError("all arguments must be >= 0")
    return n_channels * bytes_per_value * sample_rate_hz * duration_s


def _pack_header(delta_t_s: float, mode: int) -> bytes:
    delta_fs = int(round(delta_t_s * 1e15))
    if delta_fs <= 0:
        raise CodecError(f"delta_t_s too small to express in femtoseconds: {delta_t_s}")
    return struct.pack("<4sHQBB", MAGIC, VERSION, delta_fs, mode, 0)


def _pack_words(values: np.ndarray, n_bytes: int) -> bytes:
    """Little-endian serialization of uint64 words truncated to n_bytes."""
    raw = values.astype("<u8").view(np.uint8).reshape(-1, 8)
    return raw[:, :n_bytes].tobytes()


def _absolute_words(ticks: np.ndarray, basis: np.ndarray, outcome: np.ndarray) -> np.ndarray:
    return (
        (ticks.astype(np.uint64) << np.uint64(2))
        | (basis.astype(np.uint64) << np.uint64(1))
        | outcome.astype(np.uint64)
    )


def encode_stream(
    times_s: np.ndarray,
    basis: np.ndarray,
    outcome: np.ndarray,
    delta_t_s: float,
    mode: str = "relative",
) -> bytes:
    """Serialize time-sorted events to the binary time-tag format.

    Timestamps are quantized to delta_t_s ticks; the quantized values
    round-trip exactly through decode_stream. Raises CodecError on unsorted
    input or a tick that exceeds the 62-bit timestamp field.
    """
    if mode not in _MODE_NAMES:
        raise ValueError(f"mode must be 'absolute' or 'relative', got {mode!r}")
    t = np.asarray(times_s, dtype=np.float64)
    b = np.asarray(basis, dtype=np.uint64) & np.uint64(1)
    o = np.asarray(outcome, dtype=np.uint64) & np.uint64(1)
    if not (t.size == b.size == o.size):
        raise ValueError("times, basis and outcome must have equal length")
    if t.size and (np.any(t < 0) or np.any(np.diff(t) < 0)):
        raise CodecError("events must be time-sorted and non-negative")
    header = _pack_header(delta_t_s, _MODE_NAMES[mode])
    if t.size == 0:
        return header
    ticks = np.rint(t / delta_t_s).astype(np.uint64)
    if int(ticks[-1]) > MAX_TICK:
        raise CodecError(
            f"tick {int(ticks[-1])} exceeds the {TICK_BITS}-bit timestamp field"
        )
    if mode == "absolute":
        return header + _pack_words(_absolute_words(ticks, b, o), ABSOLUTE_RECORD_BYTES)

    parts = [header, _pack_words(_absolute_words(ticks[:1], b[:1], o[:1]), ABSOLUTE_RECORD_BYTES)]
    deltas = np.diff(ticks)
    escapes = np.nonzero(deltas > MAX_DELTA)[0]  # indices into deltas; event = i+1
    seg_start = 1
    for e in escapes:
        event = int(e) + 1
        if event > seg_start:
            seg = slice(seg_start, event)
            words = (
                (deltas[seg_start - 1 : event - 1].astype(np.uint64) << np.uint64(2))
                | (b[seg] << np.uint64(1))
                | o[seg]
            )
            parts.append(_pack_words(words, RELATIVE_RECORD_BYTES))
        parts.append(
            _pack_words(
                np.array([ESCAPE_DELTA << 2], dtype=np.uint64), RELATIVE_RECORD_BYTES
            )
        )
        parts.append(
            _pack_words(
                _absolute_words(ticks[event : event + 1], b[event : event + 1], o[event : event + 1]),
                ABSOLUTE_RECORD_BYTES,
            )
        )
        seg_start = event + 1
    if seg_start < ticks.size:
        seg = slice(seg_start, ticks.size)
        words = (
            (deltas[seg_start - 1 :].astype(np.uint64) << np.uint64(2))
            | (b[seg] << np.uint64(1))
            | o[seg]
        )
        parts.append(_pack_words(words, RELATIVE_RECORD_BYTES))
    return b"".join(parts)


def _unpack_words(data: bytes, n_bytes: int) -> np.ndarray:
    raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, n_bytes)
    padded = np.zeros((raw.shape[0], 8), dtype=np.uint8)
    padded[:, :n_bytes] = raw
    return padded.view("<u8").ravel()


def decode_stream(data: bytes) -> DecodedStream:
    """Parse a binary time-tag stream back to ticks, basis and outcome."""
    if len(data) < HEADER_BYTES:
        raise CodecError(f"stream shorter than the {HEADER_BYTES}-byte header")
    magic, version, delta_fs, mode, _pad = struct.unpack(
        "<4sHQBB", data[:HEADER_BYTES]
    )
    if magic != MAGIC:
        raise CodecError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CodecError(f"unsupported version {version}")
    if mode not in (MODE_ABSOLUTE, MODE_RELATIVE):
        raise CodecError(f"unknown mode byte {mode}")
    delta_t_s = delta_fs * 1e-15
    body = data[HEADER_BYTES:]
    mode_name = "absolute" if mode == MODE_ABSOLUTE else "relative"
    empty = np.empty(0, dtype=np.uint64)
    if not body:
        return DecodedStream(empty, empty.astype(np.uint8), empty.astype(np.uint8), delta_t_s, mode_name)

    if mode == MODE_ABSOLUTE:
        if len(body) % ABSOLUTE_RECORD_BYTES:
            raise CodecError("absolute-mode body is not a whole number of records")
        words = _unpack_words(body, ABSOLUTE_RECORD_BYTES)
        return DecodedStream(
            ticks=words >> np.uint64(2),
            basis=((words >> np.uint64(1)) & np.uint64(1)).astype(np.uint8),
            outcome=(words & np.uint64(1)).astype(np.uint8),
            delta_t_s=delta_t_s,
            mode=mode_name,
        )

    if len(body) < ABSOLUTE_RECORD_BYTES:
        raise CodecError("relative-mode stream truncated before the first record")
    first = _unpack_words(body[:ABSOLUTE_RECORD_BYTES], ABSOLUTE_RECORD_BYTES)
    value_chunks = [first >> np.uint64(2)]
    basis_chunks = [(first >> np.uint64(1)) & np.uint64(1)]
    outcome_chunks = [first & np.uint64(1)]
    absolute_positions = [0]  # event indices whose stored value is an absolute tick
    n_events = 1
    pos = ABSOLUTE_RECORD_BYTES
    # Parse greedily: frame the remainder as 6-byte records until an escape
    # marker appears, then consume one 8-byte absolute record and re-frame.
    # Escapes are rare, so the stream usually parses in one vectorized pass.
    while pos < len(body):
        remaining = len(body) - pos
        n_full = remaining // RELATIVE_RECORD_BYTES
        if n_full == 0:
            raise CodecError(f"trailing {remaining} bytes are not a whole record")
        words = _unpack_words(
            body[pos : pos + n_full * RELATIVE_RECORD_BYTES], RELATIVE_RECORD_BYTES
        )
        deltas = words >> np.uint64(2)
        esc = np.nonzero(deltas == ESCAPE_DELTA)[0]
        stop = int(esc[0]) if esc.size else n_full
        if stop:
            value_chunks.append(deltas[:stop])
            basis_chunks.append((words[:stop] >> np.uint64(1)) & np.uint64(1))
            outcome_chunks.append(words[:stop] & np.uint64(1))
            n_events += stop
        pos += stop * RELATIVE_RECORD_BYTES
        if esc.size:
            pos += RELATIVE_RECORD_BYTES  # the escape marker itself
            if len(body) - pos < ABSOLUTE_RECORD_BYTES:
                raise CodecError("escape record truncated")
            word = _unpack_words(
                body[pos : pos + ABSOLUTE_RECORD_BYTES], ABSOLUTE_RECORD_BYTES
            )
            value_chunks.append(word >> np.uint64(2))
            basis_chunks.append((word >> np.uint64(1)) & np.uint64(1))
            outcome_chunks.append(word & np.uint64(1))
            absolute_positions.append(n_events)
            n_events += 1
            pos += ABSOLUTE_RECORD_BYTES

    values = np.concatenate(value_chunks)
    basis = np.concatenate(basis_chunks).astype(np.uint8)
    outcome = np.concatenate(outcome_chunks).astype(np.uint8)
    ticks = np.empty(values.size, dtype=np.uint64)
    boundaries = absolute_positions + [values.size]
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        # first value of a segment is the absolute base, the rest are deltas
        ticks[lo:hi] = np.cumsum(values[lo:hi], dtype=np.uint64)
    return DecodedStream(ticks, basis, outcome, delta_t_s, "relative")
