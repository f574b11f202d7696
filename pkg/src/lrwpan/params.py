"""Protocol, traffic and timing constants for the O-QPSK 2.4 GHz PHY.

All durations are expressed in backoff time units of 20 symbols (320 us).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

SYMBOL_SECONDS = 16e-6
UNIT_BACKOFF_SYMBOLS = 20
UNIT_SECONDS = UNIT_BACKOFF_SYMBOLS * SYMBOL_SECONDS

# macAckWaitDuration = aUnitBackoffPeriod + aTurnaroundTime + phySHRDuration
#                      + ceil(6 * phySymbolsPerOctet)
ACK_WAIT_SYMBOLS = 20 + 12 + 10 + math.ceil(6 * 2)


class InvalidParams(ValueError):
    """Raised when a parameter set violates its invariants.

    ``field`` names the offending parameter so CLI error messages can
    point at the config entry.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ProtocolParams:
    mac_min_be: int = 3
    mac_max_be: int = 5
    mac_max_csma_backoffs: int = 4
    mac_max_frame_retries: int = 3
    packet_bytes: int = 127
    ack_bytes: int = 11
    ifs_symbols: int = 40
    t_ack_symbols: int = 12

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("mac_min_be", "mac_max_be", "mac_max_csma_backoffs",
                     "mac_max_frame_retries", "packet_bytes", "ack_bytes",
                     "ifs_symbols", "t_ack_symbols"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidParams(name, f"expected an integer, got {value!r}")
        if self.mac_min_be < 0:
            raise InvalidParams("mac_min_be", "must be >= 0")
        if self.mac_min_be > self.mac_max_be:
            raise InvalidParams(
                "mac_min_be",
                f"mac_min_be={self.mac_min_be} exceeds mac_max_be={self.mac_max_be}")
        if self.mac_max_csma_backoffs < 0:
            raise InvalidParams("mac_max_csma_backoffs", "must be >= 0")
        if self.mac_max_frame_retries < 0:
            raise InvalidParams("mac_max_frame_retries", "must be >= 0")
        if self.ack_bytes < 0:
            raise InvalidParams("ack_bytes", "must be >= 0")
        if self.packet_bytes < self.ack_bytes:
            raise InvalidParams(
                "packet_bytes",
                f"packet_bytes={self.packet_bytes} is shorter than ack_bytes={self.ack_bytes}")

    @property
    def backoff_stages_capped(self) -> int:
        """Stage index after which the window stops growing (macMaxBE - macMinBE)."""
        return self.mac_max_be - self.mac_min_be

    @property
    def w0(self) -> int:
        return 2 ** self.mac_min_be


def backoff_window(p: ProtocolParams, i: int) -> int:
    """Backoff window size W_i for backoff stage ``i``."""
    if i < 0 or i > p.mac_max_csma_backoffs:
        raise ValueError(
            f"backoff stage {i} outside [0, {p.mac_max_csma_backoffs}]")
    return p.w0 * 2 ** min(i, p.backoff_stages_capped)


@dataclass(frozen=True)
class TrafficParams:
    """Mean packet generation intervals in seconds.

    A disabled direction generates no traffic (rate 0); its interval is
    ignored.
    """
    interval_up: float = 1.0
    interval_down: float = 1.0
    up_enabled: bool = True
    down_enabled: bool = True

    def __post_init__(self):
        for name, enabled in (("interval_up", self.up_enabled),
                              ("interval_down", self.down_enabled)):
            value = getattr(self, name)
            if enabled and not (math.isfinite(value) and value > 0):
                raise InvalidParams(name, f"must be a positive finite duration, got {value!r}")


@dataclass(frozen=True)
class DerivedTiming:
    unit_seconds: float
    packet_units: float
    ack_units: float
    success_units: float
    fail_units: float
    ack_wait_symbols: int
    rate_up: float
    rate_down: float
    protocol: ProtocolParams = field(repr=False, default_factory=ProtocolParams)


def derive_timing(p: ProtocolParams, t: TrafficParams, node_count: int) -> DerivedTiming:
    """Turn byte counts and intervals into time-unit durations and rates.

    >>> tm = derive_timing(ProtocolParams(), TrafficParams(), 2)
    >>> round(tm.success_units, 12), round(tm.fail_units, 12)
    (16.4, 15.4)
    """
    p.validate()
    if node_count < 2:
        raise InvalidParams("node_count", f"need a gateway and at least one client, got {node_count}")
    # 8 bits/byte, 4 bits/symbol, 20 symbols per unit
    packet_units = p.packet_bytes * 8 / 4 / UNIT_BACKOFF_SYMBOLS
    ack_units = p.ack_bytes * 8 / 4 / UNIT_BACKOFF_SYMBOLS
    success_units = packet_units + ack_units + (p.ifs_symbols + p.t_ack_symbols) / UNIT_BACKOFF_SYMBOLS
    fail_units = packet_units + ACK_WAIT_SYMBOLS / UNIT_BACKOFF_SYMBOLS
    rate_up = UNIT_SECONDS / t.interval_up if t.up_enabled else 0.0
    rate_down = (node_count - 1) * UNIT_SECONDS / t.interval_down if t.down_enabled else 0.0
    return DerivedTiming(
        unit_seconds=UNIT_SECONDS,
        packet_units=packet_units,
        ack_units=ack_units,
        success_units=success_units,
        fail_units=fail_units,
        ack_wait_symbols=ACK_WAIT_SYMBOLS,
        rate_up=rate_up,
        rate_down=rate_down,
        protocol=p,
    )
