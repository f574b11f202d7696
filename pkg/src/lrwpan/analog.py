"""Breakpoint log-distance path loss and O-QPSK error rates (802.15.4 Annex E)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import comb

BREAKPOINT_M = 8.0

_BER_K = tuple(range(2, 17))
_BER_COEF = tuple((-1) ** k * comb(16, k, exact=True) for k in _BER_K)


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 0.0
    noise_power_dbm: float = -95.0
    disturb_threshold_dbm: float = -85.0

    def __post_init__(self):
        for name in ("tx_power_dbm", "noise_power_dbm", "disturb_threshold_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class LinkQuality:
    rx_power_dbm: float
    snr_linear: float
    ber: float


def path_loss_db(distance_m: float) -> float:
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m!r}")
    if distance_m > BREAKPOINT_M:
        return 58.5 + 33.0 * math.log10(distance_m / BREAKPOINT_M)
    return 40.2 + 20.0 * math.log10(distance_m)


def received_power(r: RadioParams, distance_m: float) -> float:
    return r.tx_power_dbm - path_loss_db(distance_m)


def snr_linear(r: RadioParams, distance_m: float) -> float:
    return 10.0 ** ((received_power(r, distance_m) - r.noise_power_dbm) / 10.0)


def bit_error_rate(snr: float) -> float:
    """O-QPSK bit error rate for a linear SNR, clamped to [0, 1]."""
    if snr < 0 or math.isnan(snr):
        raise ValueError(f"SNR must be non-negative, got {snr!r}")
    total = math.fsum(c * math.exp(20.0 * snr * (1.0 / k - 1.0))
                      for k, c in zip(_BER_K, _BER_COEF))
    return min(1.0, max(0.0, 8.0 / 15.0 / 16.0 * total))


def packet_error_rate(ber: float, nbytes: int) -> float:
    if not 0.0 <= ber <= 1.0:
        raise ValueError(f"BER must lie in [0, 1], got {ber!r}")
    if nbytes < 0:
        raise ValueError(f"byte count must be >= 0, got {nbytes!r}")
    # log1p keeps precision for the tiny BERs of short links
    if ber == 1.0:
        return 1.0 if nbytes > 0 else 0.0
    return -math.expm1(8 * nbytes * math.log1p(-ber))


def in_range(r: RadioParams, distance_m: float) -> bool:
    """True if a sender at this distance can disturb a reception."""
    return received_power(r, distance_m) > r.disturb_threshold_dbm


def link_quality(r: RadioParams, distance_m: float) -> LinkQuality:
    snr = snr_linear(r, distance_m)
    return LinkQuality(received_power(r, distance_m), snr, bit_error_rate(snr))
