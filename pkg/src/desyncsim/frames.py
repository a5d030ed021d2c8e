"""On-air frame layout and airtime accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

RADIO_HEADER_BYTES = 11  # CC2420 radio header
SENDER_ID_BYTES = 2
PHASE_ENTRY_BYTES = 4  # 2-byte neighbor id + 2-byte relative phase
DEFAULT_BITRATE = 250_000.0  # bits/s, CC2420 nominal


def frame_bytes(entries: int, entry_bytes: int = PHASE_ENTRY_BYTES) -> int:
    return RADIO_HEADER_BYTES + SENDER_ID_BYTES + entry_bytes * entries


def airtime(entries: int, bitrate: float = DEFAULT_BITRATE, entry_bytes: int = PHASE_ENTRY_BYTES) -> float:
    """Airtime in ms of a firing frame carrying ``entries`` neighbor entries."""
    if entries < 0:
        raise ValueError("entry count must be non-negative")
    return frame_bytes(entries, entry_bytes) * 8.0 / bitrate * 1000.0


@dataclass(eq=False)
class Frame:
    sender: int
    emit_time: float
    airtime: float
    payload: Optional[tuple[tuple[int, float], ...]]
    entries: int = 0
    lost: set = field(default_factory=set)  # receivers that were transmitting
    collided: set = field(default_factory=set)  # receivers where frames overlapped

    @property
    def end_time(self) -> float:
        return self.emit_time + self.airtime
