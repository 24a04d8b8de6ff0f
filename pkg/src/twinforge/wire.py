"""Telemetry wire format: sample type, topic scheme, line codec, trace replay.

One sample per UTF-8 line, LF-terminated files. The topic string is a naming
contract only; a real broker adapter can be layered on without touching
anything downstream.
"""
from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import InvalidAssetId, MalformedLine


class Channel(str, enum.Enum):
    accel_x = "accel_x"
    accel_y = "accel_y"
    accel_z = "accel_z"
    plc_state = "plc_state"


ACCEL_CHANNELS = (Channel.accel_x, Channel.accel_y, Channel.accel_z)


class Quality(str, enum.Enum):
    good = "good"
    suspect = "suspect"
    missing = "missing"


@dataclass(frozen=True)
class TelemetrySample:
    """One timestamped reading from one asset channel.

    ts is integer nanoseconds since epoch. For plc_state the value is the
    machine-state code 0..3 stored as a float.
    """

    asset_id: str
    channel: Channel
    ts: int
    value: float
    quality: Quality = Quality.good

    def validate(self) -> None:
        if not self.asset_id or "/" in self.asset_id:
            raise InvalidAssetId(f"bad asset id {self.asset_id!r}")
        if self.ts < 0:
            raise MalformedLine(f"negative ts {self.ts}")
        if not math.isfinite(self.value):
            raise MalformedLine(f"non-finite value {self.value!r}")
        if (
            self.channel is Channel.plc_state
            and self.quality is Quality.good
            and self.value not in (0.0, 1.0, 2.0, 3.0)
        ):
            raise MalformedLine(f"plc_state code out of range: {self.value!r}")


def topic_for(asset_id: str, channel: Channel) -> str:
    """Topic string "mf/<asset_id>/<channel>"."""
    if not asset_id or "/" in asset_id:
        raise InvalidAssetId(f"bad asset id {asset_id!r}")
    return f"mf/{asset_id}/{Channel(channel).value}"


def encode_sample(sample: TelemetrySample) -> str:
    """One JSON object per line, keys exactly asset/ch/ts/v/q.

    Integral values serialize as JSON integers so plc codes survive
    losslessly; everything else uses Python's shortest round-trip repr.
    """
    sample.validate()
    v: Union[int, float] = sample.value
    if float(v).is_integer():
        v = int(v)
    return json.dumps(
        {
            "asset": sample.asset_id,
            "ch": sample.channel.value,
            "ts": sample.ts,
            "v": v,
            "q": sample.quality.value,
        },
        separators=(",", ":"),
    )


_KEYS = {"asset", "ch", "ts", "v", "q"}


def decode_sample(line: str) -> TelemetrySample:
    """Inverse of encode_sample on its image; unknown/missing keys rejected."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict) or set(obj) != _KEYS:
        raise MalformedLine(f"wrong key set in {line!r}")
    asset, ch, ts, v, q = obj["asset"], obj["ch"], obj["ts"], obj["v"], obj["q"]
    if not isinstance(asset, str):
        raise MalformedLine("asset must be a string")
    try:
        channel = Channel(ch)
        quality = Quality(q)
    except ValueError as exc:
        raise MalformedLine(str(exc)) from exc
    if isinstance(ts, bool) or not isinstance(ts, int) or ts < 0:
        raise MalformedLine(f"bad ts {ts!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedLine(f"bad value {v!r}")
    sample = TelemetrySample(asset, channel, ts, float(v), quality)
    sample.validate()
    return sample


def replay_trace(path, speed: Union[float, str] = "max") -> Iterator[TelemetrySample]:
    """Yield samples from a trace file in file order.

    speed="max" replays without pacing (throughput measurement); a numeric
    speed sleeps out the recorded ts deltas divided by that multiplier.
    """
    pace = None if speed == "max" else float(speed)
    prev_ts = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                continue
            try:
                sample = decode_sample(stripped)
            except MalformedLine as exc:
                raise MalformedLine(f"line {lineno}: {exc}") from exc
            if pace is not None and prev_ts is not None and sample.ts > prev_ts:
                time.sleep((sample.ts - prev_ts) / 1e9 / pace)
            prev_ts = sample.ts
            yield sample


def write_trace(path, samples) -> int:
    """Write samples as an LF-terminated trace file. Returns the line count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(encode_sample(sample))
            fh.write("\n")
            n += 1
    return n
