"""Frame-body framing above the PHY: MAC/PLCP fields and training insertion.

A standard frame (SF) wraps the LLC frame body (FB) with a fixed MAC header
and CRC-32, then SERVICE/TAIL/PAD.  A modified frame (MF) first splices a
known pseudo-training sequence (PTb) into the FB at positions chosen so that
every training portion lands on exactly one whole OFDM symbol after
scrambling, encoding and interleaving.  The insertion runs entirely above
the MAC layer, so legacy transmitters and receivers handle an MF as ordinary
payload.
"""
from __future__ import annotations

import binascii
import json
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .params import (
    MAX_PSDU_OCTETS,
    Mcs,
    N_CRC,
    N_MACH,
    N_MEM,
    N_SERV,
    T_SYM,
    mcs_table,
)
from .coding import scrambler_sequence


class FrameTooShortError(ValueError):
    """Frame body shorter than the minimum a modified frame can carry."""


# ---------------------------------------------------------------------------
# Bit helpers (module boundary convention: octets serialize MSB-first)
# ---------------------------------------------------------------------------

def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bits_to_bytes(bits: np.ndarray) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 8:
        raise ValueError("bit stream is not octet aligned")
    return np.packbits(bits).tobytes()


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in np.asarray(bits, dtype=np.uint8):
        out = (out << 1) | int(b)
    return out


# ---------------------------------------------------------------------------
# CRC-32 frame check sequence
# ---------------------------------------------------------------------------

def crc32(bits: np.ndarray) -> int:
    """CRC-32 over an octet-aligned bit stream (poly 0x04C11DB7, reflected
    I/O, init all-ones, final complement -- the 802.11 FCS)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 8:
        raise ValueError("CRC input must be octet aligned")
    return binascii.crc32(np.packbits(bits).tobytes()) & 0xFFFFFFFF


def crc32_bits(bits: np.ndarray) -> np.ndarray:
    """FCS as 32 bits ready to append: 4 octets little-endian, MSB-first."""
    value = crc32(bits)
    return bytes_to_bits(value.to_bytes(4, "little"))


def crc32_check(bits_with_fcs: np.ndarray) -> bool:
    bits = np.asarray(bits_with_fcs, dtype=np.uint8)
    if bits.size < N_CRC:
        return False
    body, fcs = bits[:-N_CRC], bits[-N_CRC:]
    return bool(np.array_equal(crc32_bits(body), fcs))


# ---------------------------------------------------------------------------
# Fixed field contents
# ---------------------------------------------------------------------------

# 36-octet MAC header (data frame to broadcast, LLC/SNAP prefix, spare
# zeros).  Only its length matters to the frame arithmetic; the bytes are a
# fixed documented constant so runs are reproducible.
DEFAULT_MAC_HEADER = bytes.fromhex(
    "0802" "0000" "ffffffffffff" "008042aabbcc" "008042ddeeff" "1000"
    "aaaa03000000" "88dc" "00000000"
)
assert len(DEFAULT_MAC_HEADER) * 8 == N_MACH


def default_ptb(mcs: Mcs) -> np.ndarray:
    """Default pseudo-training sequence: 6 zeros that steer the encoder into
    a state the receiver can compute, then a fixed pseudo-random pattern
    filling one OFDM symbol.

    Any fixed sequence works equally well for BPSK/QPSK; the pattern here is
    the all-ones-seeded scrambler output, chosen to avoid long runs.
    """
    return np.concatenate(
        [np.zeros(N_MEM, dtype=np.uint8), scrambler_sequence(127, mcs.n_dbps)]
    )


def service_bits(is_mf: bool = False, m_p: int = 0) -> np.ndarray:
    """16-bit SERVICE field before scrambling.

    Bits 0-6 are zero (they expose the scrambler seed on the air); bit 7
    flags a modified frame and bits 8-12 carry the training spacing minus
    one, using reserved bits.  Remaining bits stay zero.
    """
    bits = np.zeros(N_SERV, dtype=np.uint8)
    if is_mf:
        if not 1 <= m_p <= 32:
            raise ValueError("training spacing must be in 1..32")
        bits[7] = 1
        bits[8:13] = int_to_bits(m_p - 1, 5)
    return bits


def parse_service_bits(bits: np.ndarray) -> tuple[bool, int]:
    """Inverse of :func:`service_bits`; returns (is_mf, m_p)."""
    bits = np.asarray(bits, dtype=np.uint8)
    is_mf = bool(bits[7])
    m_p = bits_to_int(bits[8:13]) + 1 if is_mf else 0
    return is_mf, m_p


# ---------------------------------------------------------------------------
# PSDU / DATA-unit assembly
# ---------------------------------------------------------------------------

def build_psdu(fb: np.ndarray, mac_header: bytes = DEFAULT_MAC_HEADER) -> np.ndarray:
    """MAC header + frame body + CRC-32 over both."""
    fb = np.asarray(fb, dtype=np.uint8)
    if fb.size % 8:
        raise ValueError("frame body must be octet aligned")
    header = bytes_to_bits(mac_header)
    if header.size != N_MACH:
        raise ValueError(f"MAC header must be {N_MACH} bits")
    protected = np.concatenate([header, fb])
    return np.concatenate([protected, crc32_bits(protected)])


def assemble_data_unit(
    psdu: np.ndarray, mcs: Mcs, is_mf: bool = False, m_p: int = 0
) -> np.ndarray:
    """SERVICE + PSDU + TAIL + PAD, padded to whole OFDM symbols."""
    psdu = np.asarray(psdu, dtype=np.uint8)
    n_raw = N_SERV + psdu.size + N_MEM
    n_sym = ceil(n_raw / mcs.n_dbps)
    pad = n_sym * mcs.n_dbps - n_raw
    return np.concatenate(
        [
            service_bits(is_mf, m_p),
            psdu,
            np.zeros(N_MEM + pad, dtype=np.uint8),
        ]
    )


# ---------------------------------------------------------------------------
# Frame layout and training insertion
# ---------------------------------------------------------------------------

@dataclass
class FrameLayout:
    """Symbol-level map of one frame.

    ``block_ranges`` are (start, length) spans of frame-body data within the
    modified FB; they partition the original FB exactly.  ``ptb_offsets``
    locate each inserted PTb (termination bits first) in the modified FB.
    For a standard frame the modified FB is the FB itself.
    """

    kind: str  # "SF" | "MF"
    mcs_index: int
    n_fb: int
    m_p: int = 0
    m_s: int = 0
    m_a: int = 0
    q: int = 0
    a: int = 0
    n_s: int = 0
    n_p: int = 0
    n_a: int = 0
    n_e: int = 0
    pad_bits: int = 0
    n_mfb: int = 0
    block_ranges: list = field(default_factory=list)
    ptb_offsets: list = field(default_factory=list)

    @property
    def mcs(self) -> Mcs:
        return mcs_table(self.mcs_index)

    @property
    def is_mf(self) -> bool:
        return self.kind == "MF"

    @property
    def n_pt(self) -> int:
        return len(self.ptb_offsets)

    @property
    def psdu_octets(self) -> int:
        return (N_MACH + self.n_mfb + N_CRC) // 8

    @property
    def n_data_symbols(self) -> int:
        raw = N_SERV + 8 * self.psdu_octets + N_MEM
        return ceil(raw / self.mcs.n_dbps)

    @property
    def m_total(self) -> int:
        """OFDM symbols counting from the two long-training symbols."""
        return 3 + self.n_data_symbols

    @property
    def training_rows(self) -> list[int]:
        """Absolute grid rows occupied by the pseudo-training symbols."""
        n_dbps = self.mcs.n_dbps
        rows = []
        for off in self.ptb_offsets:
            bit = N_SERV + N_MACH + off + N_MEM  # first training bit
            assert bit % n_dbps == 0
            rows.append(3 + bit // n_dbps)
        return rows

    @property
    def m_e(self) -> int:
        """Data symbols after the final training symbol."""
        if not self.is_mf:
            return 0
        return self.m_total - 1 - self.training_rows[-1]

    def to_json(self) -> str:
        record = {
            k: getattr(self, k)
            for k in (
                "kind", "mcs_index", "n_fb", "m_p", "m_s", "m_a", "q", "a",
                "n_s", "n_p", "n_a", "n_e", "pad_bits", "n_mfb",
                "block_ranges", "ptb_offsets",
            )
        }
        record["m_total"] = self.m_total
        record["m_e"] = self.m_e
        record["training_rows"] = self.training_rows
        return json.dumps(record)


def standard_layout(n_fb: int, mcs: Mcs) -> FrameLayout:
    if n_fb % 8:
        raise ValueError("frame body must be octet aligned")
    return FrameLayout(
        kind="SF",
        mcs_index=mcs.index,
        n_fb=n_fb,
        n_mfb=n_fb,
        block_ranges=[(0, n_fb)],
    )


def _training_plan(n_fb: int, n_dbps: int, m_p: int) -> dict:
    """Pure arithmetic of the insertion procedure (no bit movement)."""
    if m_p < 1:
        raise ValueError("training spacing must be >= 1")
    m_s = max(ceil((N_SERV + N_MACH + N_MEM) / n_dbps) + 1, m_p)
    n_s = n_dbps * (m_s - 1) - N_SERV - N_MACH - N_MEM
    if n_fb < n_s:
        raise FrameTooShortError(
            f"frame body of {n_fb} bits cannot reach the first training "
            f"symbol (needs {n_s}); transmit a standard frame"
        )
    n_p = n_dbps * m_p - N_MEM
    q = (n_fb - n_s) // n_p
    rem = n_fb - n_s - q * n_p
    if rem > n_dbps:
        m_a = rem // n_dbps
        n_a = m_a * n_dbps - N_MEM
        a = 1
    else:
        m_a, n_a, a = 0, 0, 0
    n_e = n_fb - n_s - q * n_p - n_a
    return dict(m_s=m_s, n_s=n_s, n_p=n_p, q=q, m_a=m_a, n_a=n_a, a=a, n_e=n_e)


def insert_pseudo_training(
    fb: np.ndarray, ptb: np.ndarray, mcs: Mcs, m_p: int
) -> tuple[np.ndarray, FrameLayout]:
    """Splice the pseudo-training sequence into the frame body.

    The FB is cut into a leading block sized so the first training portion
    starts exactly on an OFDM symbol boundary (accounting for the SERVICE
    field and MAC header the lower layers will prepend), then periodic
    blocks every ``m_p`` symbols, an optional shorter block absorbing the
    remainder, and a trailing block.  One PTb goes between consecutive
    blocks; zeros pad the result to a whole number of octets.
    """
    fb = np.asarray(fb, dtype=np.uint8)
    ptb = np.asarray(ptb, dtype=np.uint8)
    if ptb.size != N_MEM + mcs.n_dbps:
        raise ValueError(
            f"training sequence must be {N_MEM + mcs.n_dbps} bits for this MCS"
        )
    plan = _training_plan(fb.size, mcs.n_dbps, m_p)

    pieces = []
    ptb_offsets = []
    block_ranges = []
    pos_fb = 0  # consumed FB bits
    pos_out = 0  # produced modified-FB bits

    def take(n: int) -> None:
        nonlocal pos_fb, pos_out
        if n:
            pieces.append(fb[pos_fb : pos_fb + n])
            block_ranges.append((pos_out, n))
            pos_fb += n
            pos_out += n

    def put_ptb() -> None:
        nonlocal pos_out
        pieces.append(ptb)
        ptb_offsets.append(pos_out)
        pos_out += ptb.size

    take(plan["n_s"])
    put_ptb()
    for _ in range(plan["q"]):
        take(plan["n_p"])
        put_ptb()
    if plan["a"]:
        take(plan["n_a"])
        put_ptb()
    take(plan["n_e"])
    assert pos_fb == fb.size

    pad = (-pos_out) % 8
    if pad:
        pieces.append(np.zeros(pad, dtype=np.uint8))
    mfb = np.concatenate(pieces)

    layout = FrameLayout(
        kind="MF",
        mcs_index=mcs.index,
        n_fb=fb.size,
        m_p=m_p,
        m_a=plan["m_a"],
        q=plan["q"],
        a=plan["a"],
        m_s=plan["m_s"],
        n_s=plan["n_s"],
        n_p=plan["n_p"],
        n_a=plan["n_a"],
        n_e=plan["n_e"],
        pad_bits=pad,
        n_mfb=mfb.size,
        block_ranges=block_ranges,
        ptb_offsets=ptb_offsets,
    )
    if layout.psdu_octets > MAX_PSDU_OCTETS:
        raise ValueError("modified frame exceeds the maximum PSDU length")
    return mfb, layout


def strip_pseudo_training(mfb: np.ndarray, layout: FrameLayout) -> np.ndarray:
    """Inverse of :func:`insert_pseudo_training` (drops PTbs and pad)."""
    mfb = np.asarray(mfb, dtype=np.uint8)
    if mfb.size != layout.n_mfb:
        raise ValueError(
            f"modified FB length {mfb.size} does not match layout {layout.n_mfb}"
        )
    return np.concatenate([mfb[s : s + n] for s, n in layout.block_ranges])


# ---------------------------------------------------------------------------
# Effective bit rate
# ---------------------------------------------------------------------------

def effective_bit_rate(n_fb: int, mcs: Mcs, kind: str = "SF", m_p: int = 8) -> float:
    """Payload bits per second of total air time.

    The constant 5 accounts for the short training, the two long-training
    symbols, and SIGNAL.  For an MF the (1+Q+A) inserted training sequences
    each add one symbol's worth of data bits plus the termination overhead.
    """
    n_sf = N_SERV + N_MACH + n_fb + N_CRC + N_MEM
    if kind == "SF":
        n_bits = n_sf
    elif kind == "MF":
        plan = _training_plan(n_fb, mcs.n_dbps, m_p)
        n_bits = n_sf + (1 + plan["q"] + plan["a"]) * (mcs.n_dbps + N_MEM)
    else:
        raise ValueError(f"unknown frame kind {kind!r}")
    return n_fb / ((5 + ceil(n_bits / mcs.n_dbps)) * T_SYM)
