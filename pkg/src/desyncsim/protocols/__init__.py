"""Node logic for the three desynchronization protocols."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..frames import DEFAULT_BITRATE
from .core import NeighborRecord, NeighborTable, Node, Protocol, RelayPolicy, ViewEntry, wrap_phase, wrap_signed
from .extdesync import ExtDesync, ExtDesyncConfig
from .lightweight import Lightweight, LightweightConfig
from .mdwarf import ForceConfig, MDwarf

PROTOCOLS = ("mdwarf", "extdesync", "lightweight")


@dataclass(frozen=True)
class ProtocolSettings:
    mdwarf: ForceConfig = field(default_factory=ForceConfig)
    extdesync: ExtDesyncConfig = field(default_factory=ExtDesyncConfig)
    lightweight: LightweightConfig = field(default_factory=LightweightConfig)


def make_protocol(name: str, settings: ProtocolSettings | None = None, bitrate: float = DEFAULT_BITRATE) -> Protocol:
    settings = settings or ProtocolSettings()
    if name == "mdwarf":
        return MDwarf(settings.mdwarf)
    if name == "extdesync":
        return ExtDesync(settings.extdesync)
    if name == "lightweight":
        return Lightweight(settings.lightweight, bitrate)
    raise ValueError(f"unknown protocol {name!r}; expected one of {', '.join(PROTOCOLS)}")


__all__ = [
    "PROTOCOLS", "ProtocolSettings", "make_protocol", "Protocol", "Node", "NeighborTable",
    "NeighborRecord", "RelayPolicy", "ViewEntry", "wrap_phase", "wrap_signed",
    "MDwarf", "ForceConfig", "ExtDesync", "ExtDesyncConfig", "Lightweight", "LightweightConfig",
]
