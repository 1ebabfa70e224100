"""Free-space link budget."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import speed_of_light

# slack absorbing float rounding in the inclusive budget test
_BUDGET_TOL_DB = 1e-9


@dataclass(frozen=True)
class RadioParams:
    frequency_hz: float = 2.4e9
    tx_power_dbm: float = 20.0
    rx_sensitivity_dbm: float = -90.0

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ValueError("frequency must be positive")

    @property
    def margin_db(self) -> float:
        return self.tx_power_dbm - self.rx_sensitivity_dbm

    @property
    def max_range(self) -> float:
        """Distance at which free-space loss equals the link margin."""
        return speed_of_light / (4 * math.pi * self.frequency_hz) * 10 ** (self.margin_db / 20)


def fspl_db(distance, frequency_hz: float):
    """Free-space path loss ``20*log10(4*pi*d*f/c)`` with unit antenna gains."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    if frequency_hz <= 0:
        raise ValueError("frequency must be positive")
    out = 20.0 * np.log10(4 * math.pi * d * frequency_hz / speed_of_light)
    return float(out) if out.ndim == 0 else out


def link_ok(distance, radio: RadioParams):
    """True where received power is at or above the receiver sensitivity."""
    rx = radio.tx_power_dbm - fspl_db(distance, radio.frequency_hz)
    return rx >= radio.rx_sensitivity_dbm - _BUDGET_TOL_DB
