"""Fixed 802.11p OFDM numerology and modulation/coding parameters.

802.11p reuses the 802.11a OFDM PHY at half clock (10 MHz channel spacing),
so every OFDM symbol lasts 8 us including a 1.6 us cyclic prefix.  All tables
here are transcribed from IEEE Std 802.11-2012, Clause 18.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# OFDM numerology (Clause 18.3.2.4, scaled to 10 MHz channel spacing).
N_SUBCARRIERS = 64
N_CP = 16
SAMPLE_RATE = 10e6
T_SYM = (N_SUBCARRIERS + N_CP) / SAMPLE_RATE  # 8 us
SUBCARRIER_SPACING = SAMPLE_RATE / N_SUBCARRIERS  # 156.25 kHz

# Fixed field lengths in bits.
N_SERV = 16
N_MACH = 288
N_CRC = 32
N_MEM = 6  # convolutional encoder memory == TAIL length

# Subcarrier allocation: 52 occupied (-26..-1, 1..26), 4 of them pilots,
# DC and the band edges are null.
OCCUPIED_SUBCARRIERS = np.array(
    [k for k in range(-26, 27) if k != 0], dtype=np.int64
)
PILOT_SUBCARRIERS = np.array([-21, -7, 7, 21], dtype=np.int64)
DATA_SUBCARRIERS = np.array(
    [k for k in OCCUPIED_SUBCARRIERS if k not in (-21, -7, 7, 21)],
    dtype=np.int64,
)
assert DATA_SUBCARRIERS.size == 48

# Base pilot values on subcarriers (-21, -7, +7, +21) before the per-symbol
# polarity flip (Clause 18.3.5.10).
PILOT_BASE = np.array([1.0, 1.0, 1.0, -1.0])


def subcarrier_to_bin(k) -> np.ndarray:
    """Map signed subcarrier index to 64-point FFT bin (negative wraps)."""
    return np.asarray(k) % N_SUBCARRIERS


OCCUPIED_BINS = subcarrier_to_bin(OCCUPIED_SUBCARRIERS)
PILOT_BINS = subcarrier_to_bin(PILOT_SUBCARRIERS)
DATA_BINS = subcarrier_to_bin(DATA_SUBCARRIERS)

# Long-training frequency values on subcarriers -26..26 (Clause 18.3.3,
# Table 18-6, DC omitted here); two identical symbols open every frame.
LONG_TRAINING = np.array(
    # k = -26..-1
    [1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1,
     -1, 1, 1, 1, 1]
    # k = +1..+26
    + [1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1,
       -1, 1, -1, 1, 1, 1, 1],
    dtype=np.float64,
)
assert LONG_TRAINING.size == 52


def _polarity_sequence() -> np.ndarray:
    """127-element pilot polarity sequence p_0..p_126 (Clause 18.3.5.10).

    Generated by the scrambler LFSR (x^7 + x^4 + 1) seeded with all ones,
    mapping output 0 -> +1 and 1 -> -1.
    """
    reg = 0x7F
    out = np.empty(127, dtype=np.float64)
    for i in range(127):
        fb = ((reg >> 3) ^ (reg >> 6)) & 1
        out[i] = -1.0 if fb else 1.0
        reg = ((reg << 1) | fb) & 0x7F
    return out


PILOT_POLARITY = _polarity_sequence()


@dataclass(frozen=True)
class Mcs:
    """One modulation/coding scheme of the eight in Table 18-4.

    n_cbps/n_dbps are the coded/data bits per OFDM symbol; both follow from
    the 48 data subcarriers, bits per subcarrier, and the code rate.
    """

    index: int
    modulation: str  # BPSK | QPSK | QAM16 | QAM64
    code_rate: Fraction
    n_bpsc: int  # coded bits per subcarrier
    n_cbps: int = 0
    n_dbps: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_cbps", 48 * self.n_bpsc)
        n = self.n_cbps * self.code_rate
        assert n.denominator == 1
        object.__setattr__(self, "n_dbps", int(n))

    @property
    def rate_label(self) -> str:
        return f"{self.modulation} {self.code_rate}"


_MCS_ROWS = [
    ("BPSK", Fraction(1, 2), 1),
    ("BPSK", Fraction(3, 4), 1),
    ("QPSK", Fraction(1, 2), 2),
    ("QPSK", Fraction(3, 4), 2),
    ("QAM16", Fraction(1, 2), 4),
    ("QAM16", Fraction(3, 4), 4),
    ("QAM64", Fraction(2, 3), 6),
    ("QAM64", Fraction(3, 4), 6),
]

MCS_TABLE = tuple(Mcs(i, m, r, b) for i, (m, r, b) in enumerate(_MCS_ROWS))

# SIGNAL field RATE bits (R1..R4) per MCS index (Table 18-6).
SIGNAL_RATE_BITS = {
    0: (1, 1, 0, 1),
    1: (1, 1, 1, 1),
    2: (0, 1, 0, 1),
    3: (0, 1, 1, 1),
    4: (1, 0, 0, 1),
    5: (1, 0, 1, 1),
    6: (0, 0, 0, 1),
    7: (0, 0, 1, 1),
}

MAX_PSDU_OCTETS = 4095  # 12-bit SIGNAL LENGTH field


def mcs_table(index: int) -> Mcs:
    """Return the MCS parameter set for index 0..7."""
    if not 0 <= index <= 7:
        raise ValueError(f"MCS index must be in 0..7, got {index}")
    return MCS_TABLE[index]
