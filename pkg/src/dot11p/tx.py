"""802.11p transmit chain: scramble, encode, interleave, map, OFDM modulate.

The chain consumes the DATA unit produced by :mod:`dot11p.frames` and emits
the frequency-domain grid (and optionally 10 MHz time samples).  Training
insertion is invisible here: pseudo-training bits ride through the chain as
ordinary payload, which is the whole point of the scheme.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import frames
from .coding import conv_encode, puncture, scramble
from .frames import FrameLayout
from .params import (
    DATA_BINS,
    LONG_TRAINING,
    MAX_PSDU_OCTETS,
    Mcs,
    N_CP,
    N_MEM,
    N_SERV,
    N_SUBCARRIERS,
    OCCUPIED_BINS,
    PILOT_BASE,
    PILOT_BINS,
    PILOT_POLARITY,
    SIGNAL_RATE_BITS,
)

# ---------------------------------------------------------------------------
# Interleaver
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def interleaver_permutation(n_cbps: int, n_bpsc: int) -> np.ndarray:
    """perm[k] = output position of input bit k (Clause 18.3.5.7)."""
    s = max(n_bpsc // 2, 1)
    k = np.arange(n_cbps)
    i = (n_cbps // 16) * (k % 16) + k // 16
    j = s * (i // s) + (i + n_cbps - (16 * i) // n_cbps) % s
    perm = np.asarray(j)
    assert np.array_equal(np.sort(perm), k), "interleaver must be a bijection"
    return perm


def interleave(block: np.ndarray, mcs: Mcs) -> np.ndarray:
    block = np.asarray(block)
    if block.shape[-1] != mcs.n_cbps:
        raise ValueError(f"block must have {mcs.n_cbps} bits per symbol")
    perm = interleaver_permutation(mcs.n_cbps, mcs.n_bpsc)
    out = np.empty_like(block)
    out[..., perm] = block
    return out


def deinterleave(block: np.ndarray, mcs: Mcs) -> np.ndarray:
    block = np.asarray(block)
    if block.shape[-1] != mcs.n_cbps:
        raise ValueError(f"block must have {mcs.n_cbps} bits per symbol")
    perm = interleaver_permutation(mcs.n_cbps, mcs.n_bpsc)
    return block[..., perm]


# ---------------------------------------------------------------------------
# Constellation mapping (Gray, unit average energy)
# ---------------------------------------------------------------------------

_AXIS_16 = np.array([-3.0, -1.0, 3.0, 1.0]) / np.sqrt(10.0)
_AXIS_64 = np.array([-7.0, -5.0, -1.0, -3.0, 7.0, 5.0, 1.0, 3.0]) / np.sqrt(42.0)


def map_bits(bits: np.ndarray, modulation: str) -> np.ndarray:
    """Map a bit stream to complex constellation points."""
    bits = np.asarray(bits, dtype=np.int64)
    if modulation == "BPSK":
        return (2.0 * bits - 1.0).astype(np.complex128)
    if modulation == "QPSK":
        pairs = bits.reshape(-1, 2)
        return ((2.0 * pairs[:, 0] - 1.0) + 1j * (2.0 * pairs[:, 1] - 1.0)) / np.sqrt(2.0)
    if modulation == "QAM16":
        quads = bits.reshape(-1, 4)
        i = _AXIS_16[2 * quads[:, 0] + quads[:, 1]]
        q = _AXIS_16[2 * quads[:, 2] + quads[:, 3]]
        return i + 1j * q
    if modulation == "QAM64":
        hexts = bits.reshape(-1, 6)
        i = _AXIS_64[4 * hexts[:, 0] + 2 * hexts[:, 1] + hexts[:, 2]]
        q = _AXIS_64[4 * hexts[:, 3] + 2 * hexts[:, 4] + hexts[:, 5]]
        return i + 1j * q
    raise ValueError(f"unknown modulation {modulation!r}")


# ---------------------------------------------------------------------------
# SIGNAL symbol
# ---------------------------------------------------------------------------

def signal_field_bits(psdu_octets: int, mcs: Mcs, is_mf: bool = False) -> np.ndarray:
    """24-bit SIGNAL content: RATE, reserved (= MF flag), LENGTH, parity, tail."""
    if not 0 < psdu_octets <= MAX_PSDU_OCTETS:
        raise ValueError(f"PSDU length {psdu_octets} outside 1..{MAX_PSDU_OCTETS}")
    bits = np.zeros(24, dtype=np.uint8)
    bits[0:4] = SIGNAL_RATE_BITS[mcs.index]
    bits[4] = 1 if is_mf else 0
    for i in range(12):  # LENGTH, LSB first
        bits[5 + i] = (psdu_octets >> i) & 1
    bits[17] = bits[0:17].sum() % 2
    return bits


@lru_cache(maxsize=64)
def _signal_symbol_cached(psdu_octets: int, mcs_index: int, is_mf: bool) -> np.ndarray:
    from .params import mcs_table

    field = signal_field_bits(psdu_octets, mcs_table(mcs_index), is_mf)
    coded = conv_encode(field)
    return map_bits(interleave(coded, mcs_table(0)), "BPSK")


def build_signal_symbol(psdu_octets: int, mcs: Mcs, is_mf: bool = False) -> np.ndarray:
    """48 BPSK values: SIGNAL is rate-1/2 coded, interleaved, never scrambled."""
    return _signal_symbol_cached(psdu_octets, mcs.index, bool(is_mf)).copy()


# ---------------------------------------------------------------------------
# Grid assembly and OFDM modulation
# ---------------------------------------------------------------------------

@dataclass
class OfdmGrid:
    """Frequency-domain frame: values[m, fft_bin] plus position masks.

    Pilot cells are the two long-training rows and the four comb pilots of
    every later row; data cells are the 48 payload subcarriers of SIGNAL and
    the data rows.  Null subcarriers stay exactly zero.
    """

    values: np.ndarray
    pilot_mask: np.ndarray
    data_mask: np.ndarray

    @property
    def m_total(self) -> int:
        return self.values.shape[0]

    @property
    def occupied_mask(self) -> np.ndarray:
        return self.pilot_mask | self.data_mask


def pilot_values(symbol_index: int) -> np.ndarray:
    """Comb pilot values of one row; SIGNAL uses polarity p_0, data row j
    uses p_{1+j}, continuing across training rows."""
    return PILOT_BASE * PILOT_POLARITY[symbol_index % 127]


@lru_cache(maxsize=16)
def _grid_masks(m_total: int) -> tuple[np.ndarray, np.ndarray]:
    pilot_mask = np.zeros((m_total, N_SUBCARRIERS), dtype=bool)
    data_mask = np.zeros_like(pilot_mask)
    pilot_mask[0:2, OCCUPIED_BINS] = True
    pilot_mask[2:, PILOT_BINS] = True
    data_mask[2:, DATA_BINS] = True
    return pilot_mask, data_mask


def assemble_grid(data_symbols: np.ndarray, signal_symbol: np.ndarray, m_total: int) -> OfdmGrid:
    """Place LT, SIGNAL, comb pilots, and payload symbols on the grid."""
    n_data_rows = m_total - 3
    data_symbols = np.asarray(data_symbols, dtype=np.complex128)
    if data_symbols.size != 48 * n_data_rows:
        raise ValueError(
            f"expected {48 * n_data_rows} payload symbols, got {data_symbols.size}"
        )
    values = np.zeros((m_total, N_SUBCARRIERS), dtype=np.complex128)
    values[0:2, OCCUPIED_BINS] = LONG_TRAINING
    values[2, DATA_BINS] = signal_symbol
    values[3:, DATA_BINS] = data_symbols.reshape(n_data_rows, 48)
    polarity = PILOT_POLARITY[np.arange(m_total - 2) % 127]
    values[2:, PILOT_BINS] = polarity[:, None] * PILOT_BASE
    pilot_mask, data_mask = _grid_masks(m_total)
    return OfdmGrid(values, pilot_mask.copy(), data_mask.copy())


def ofdm_modulate(values: np.ndarray) -> np.ndarray:
    """Per-symbol 64-point IDFT plus 16-sample cyclic prefix."""
    time = np.fft.ifft(values, axis=-1, norm="ortho")
    return np.concatenate([time[..., -N_CP:], time], axis=-1)


def ofdm_demodulate(samples: np.ndarray) -> np.ndarray:
    """Drop the cyclic prefix and return to the frequency domain."""
    return np.fft.fft(samples[..., N_CP:], axis=-1, norm="ortho")


# ---------------------------------------------------------------------------
# Full frame encoder
# ---------------------------------------------------------------------------

@dataclass
class TxFrame:
    """One encoded frame with every intermediate the receiver tests need."""

    grid: OfdmGrid
    layout: FrameLayout
    seed: int
    fb: np.ndarray
    mfb: np.ndarray
    data_unit: np.ndarray  # before scrambling
    scrambled: np.ndarray  # encoder input (TAIL already zeroed)

    @property
    def psdu_octets(self) -> int:
        return self.layout.psdu_octets


def encode_frame(
    fb: np.ndarray,
    mcs: Mcs,
    seed: int,
    kind: str = "SF",
    m_p: int = 8,
    ptb: np.ndarray | None = None,
    mac_header: bytes = frames.DEFAULT_MAC_HEADER,
) -> TxFrame:
    """Run the full chain from frame body to frequency-domain grid."""
    fb = np.asarray(fb, dtype=np.uint8)
    if kind == "MF":
        if ptb is None:
            ptb = frames.default_ptb(mcs)
        mfb, layout = frames.insert_pseudo_training(fb, ptb, mcs, m_p)
    elif kind == "SF":
        mfb, layout = fb, frames.standard_layout(fb.size, mcs)
    else:
        raise ValueError(f"unknown frame kind {kind!r}")

    psdu = frames.build_psdu(mfb, mac_header)
    data_unit = frames.assemble_data_unit(psdu, mcs, layout.is_mf, m_p)
    scrambled = scramble(data_unit, seed)
    tail_at = N_SERV + psdu.size
    scrambled[tail_at : tail_at + N_MEM] = 0  # TAIL zeroed after scrambling

    coded = puncture(conv_encode(scrambled), mcs.code_rate)
    blocks = interleave(coded.reshape(-1, mcs.n_cbps), mcs)
    payload = map_bits(blocks.reshape(-1), mcs.modulation)

    signal = build_signal_symbol(layout.psdu_octets, mcs, layout.is_mf)
    grid = assemble_grid(payload, signal, layout.m_total)
    return TxFrame(grid, layout, seed, fb, mfb, data_unit, scrambled)


# ---------------------------------------------------------------------------
# Binary grid dump (cross-implementation diffing)
# ---------------------------------------------------------------------------

def dump_complex_array(path, values: np.ndarray) -> None:
    """Write a 2-D complex array: int32 (rows, cols) header, then row-major
    little-endian float64 (re, im) pairs."""
    values = np.asarray(values, dtype=np.complex128)
    if values.ndim != 2:
        raise ValueError("expected a 2-D array")
    inter = np.empty(values.shape + (2,), dtype="<f8")
    inter[..., 0] = values.real
    inter[..., 1] = values.imag
    with open(path, "wb") as f:
        f.write(struct.pack("<ii", *values.shape))
        f.write(inter.tobytes())


def load_complex_array(path) -> np.ndarray:
    with open(path, "rb") as f:
        rows, cols = struct.unpack("<ii", f.read(8))
        flat = np.frombuffer(f.read(), dtype="<f8").reshape(rows, cols, 2)
    return (flat[..., 0] + 1j * flat[..., 1]).astype(np.complex128)
