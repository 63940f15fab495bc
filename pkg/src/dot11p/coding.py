"""Bit-level DSP: scrambler, convolutional code, puncturing, Viterbi.

The scrambler is the 127-periodic LFSR x^7 + x^4 + 1 (Clause 18.3.5.5); the
code is the industry-standard rate-1/2 constraint-length-7 code with
generators 133/171 octal (Clause 18.3.5.6).  The soft-input Viterbi decoder
supports known initial/terminal encoder states and per-step pinned input
bits, which is what block-bounded decoding between known training sequences
needs.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap if not (len(args) == 1 and callable(args[0])) else args[0]


CONSTRAINT_LENGTH = 7
N_STATES = 64
# Generator tap masks over the register (d_t, d_{t-1}, ..., d_{t-6}) with the
# newest bit at LSB: 133 octal -> 0b1101101, 171 octal -> 0b1001111.
_G0_MASK = 0b1101101
_G1_MASK = 0b1001111
_G0_TAPS = (0, 2, 3, 5, 6)
_G1_TAPS = (0, 1, 2, 3, 6)

PUNCTURE_PATTERNS = {
    # Keep-mask over one period of the mother stream (A1 B1 A2 B2 [A3 B3]).
    (1, 2): np.array([1, 1], dtype=bool),
    (2, 3): np.array([1, 1, 1, 0], dtype=bool),
    (3, 4): np.array([1, 1, 1, 0, 0, 1], dtype=bool),
}


def _rate_key(rate) -> tuple[int, int]:
    key = (rate.numerator, rate.denominator) if hasattr(rate, "numerator") else tuple(rate)
    if key not in PUNCTURE_PATTERNS:
        raise ValueError(f"unsupported code rate {rate!r}")
    return key


# ---------------------------------------------------------------------------
# Scrambler
# ---------------------------------------------------------------------------

def scrambler_sequence(seed: int, n: int) -> np.ndarray:
    """First ``n`` output bits of the LFSR x^7 + x^4 + 1 from a 7-bit seed.

    The register is represented as an int whose bit k-1 holds stage x_k; the
    output (and feedback) bit is x_4 xor x_7.  The sequence has period 127
    for any nonzero seed.
    """
    if not 1 <= seed <= 127:
        raise ValueError(f"scrambler seed must be in 1..127, got {seed}")
    period = np.empty(127, dtype=np.uint8)
    reg = seed
    for i in range(127):
        fb = ((reg >> 3) ^ (reg >> 6)) & 1
        period[i] = fb
        reg = ((reg << 1) | fb) & 0x7F
    reps = -(-n // 127)
    return np.tile(period, reps)[:n]


def scramble(bits: np.ndarray, seed: int) -> np.ndarray:
    """XOR a bit stream with the scrambler sequence; self-inverse."""
    bits = np.asarray(bits, dtype=np.uint8)
    return bits ^ scrambler_sequence(seed, bits.size)


def seed_from_output(first7) -> int:
    """Recover the scrambler seed from its first 7 output bits.

    After 7 shifts the register holds exactly the 7 outputs, so running the
    LFSR backwards 7 steps recovers the initial state.
    """
    out = np.asarray(first7, dtype=np.uint8)
    if out.size != 7:
        raise ValueError("need exactly 7 output bits")
    reg = 0
    for k in range(1, 8):  # stage x_k received output 8-k
        reg |= int(out[7 - k]) << (k - 1)
    for _ in range(7):
        reg = (reg >> 1) | ((((reg & 1) ^ ((reg >> 4) & 1)) & 1) << 6)
    if reg == 0:
        raise ValueError("recovered an all-zero scrambler state")
    return reg


# ---------------------------------------------------------------------------
# Convolutional encoder
# ---------------------------------------------------------------------------

def conv_encode(bits: np.ndarray, init_state: int = 0) -> np.ndarray:
    """Rate-1/2 mother-code output [A0, B0, A1, B1, ...].

    ``init_state`` holds the 6 most recent past inputs with the newest at
    bit 0; the frame chain always starts from the all-zero state.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    hist = np.array([(init_state >> j) & 1 for j in range(5, -1, -1)], dtype=np.uint8)
    ext = np.concatenate([hist, bits])
    n = bits.size
    out = np.zeros((n, 2), dtype=np.uint8)
    for k in _G0_TAPS:
        out[:, 0] ^= ext[6 - k : 6 - k + n]
    for k in _G1_TAPS:
        out[:, 1] ^= ext[6 - k : 6 - k + n]
    return out.reshape(-1)


def conv_encode_rows(blocks: np.ndarray) -> np.ndarray:
    """Encode each row of a 2-D bit array from the all-zero state.

    Returns [rows, 2 * n] mother bits.  Useful for regenerating many short
    known segments at once; outputs from step 6 onward are independent of
    the (unknown) state before the block.
    """
    blocks = np.asarray(blocks, dtype=np.uint8)
    rows, n = blocks.shape
    ext = np.concatenate([np.zeros((rows, 6), dtype=np.uint8), blocks], axis=1)
    out = np.zeros((rows, n, 2), dtype=np.uint8)
    for k in _G0_TAPS:
        out[:, :, 0] ^= ext[:, 6 - k : 6 - k + n]
    for k in _G1_TAPS:
        out[:, :, 1] ^= ext[:, 6 - k : 6 - k + n]
    return out.reshape(rows, 2 * n)


def encoder_state_after(bits: np.ndarray, init_state: int = 0) -> int:
    """Shift-register contents (newest input at bit 0) after feeding ``bits``."""
    bits = np.asarray(bits, dtype=np.uint8)
    state = init_state
    for b in bits[-6:]:
        state = ((state << 1) | int(b)) & 0x3F
    return state


def puncture(coded: np.ndarray, rate) -> np.ndarray:
    """Remove mother-stream bits (last axis) per the standard mask."""
    key = _rate_key(rate)
    coded = np.asarray(coded)
    n = coded.shape[-1]
    mask = PUNCTURE_PATTERNS[key]
    reps = -(-n // mask.size)
    keep = np.tile(mask, reps)[:n]
    return coded[..., keep]


def depuncture_positions(n_mother: int, rate) -> np.ndarray:
    """Boolean keep-mask of length ``n_mother`` (False = punctured away)."""
    key = _rate_key(rate)
    mask = PUNCTURE_PATTERNS[key]
    reps = -(-n_mother // mask.size)
    return np.tile(mask, reps)[:n_mother]


def depuncture_llrs(llrs: np.ndarray, rate, n_mother: int) -> np.ndarray:
    """Expand received LLRs to the mother stream, zeros at punctured slots."""
    keep = depuncture_positions(n_mother, rate)
    if llrs.size != int(keep.sum()):
        raise ValueError("LLR count does not match puncture mask")
    out = np.zeros(n_mother, dtype=np.float64)
    out[keep] = llrs
    return out


# ---------------------------------------------------------------------------
# Soft-input Viterbi decoder
# ---------------------------------------------------------------------------

def _branch_tables():
    """Per (new_state, predecessor_choice) mother-bit outputs.

    New state s' is reached from predecessors p0 = s' >> 1 and
    p1 = (s' >> 1) | 32 on input bit u = s' & 1.
    """
    out_a = np.zeros((N_STATES, 2), dtype=np.float64)
    out_b = np.zeros((N_STATES, 2), dtype=np.float64)
    for s in range(N_STATES):
        u = s & 1
        for c in (0, 1):
            pred = (s >> 1) | (c << 5)
            reg = ((pred << 1) | u) & 0x7F
            out_a[s, c] = bin(reg & _G0_MASK).count("1") & 1
            out_b[s, c] = bin(reg & _G1_MASK).count("1") & 1
    return out_a, out_b


_OUT_A, _OUT_B = _branch_tables()


@njit(cache=True)
def _viterbi_kernel(llrs, init_state, final_state, pinned, out_a, out_b):
    n = llrs.shape[0]
    big = 1e30
    metric = np.full(N_STATES, big)
    metric[init_state] = 0.0
    choice = np.zeros((n, N_STATES), dtype=np.uint8)
    new_metric = np.empty(N_STATES)
    for t in range(n):
        la = llrs[t, 0]
        lb = llrs[t, 1]
        pin = pinned[t]
        for s in range(N_STATES):
            u = s & 1
            if pin >= 0 and u != pin:
                new_metric[s] = big
                continue
            base = s >> 1
            m0 = metric[base] + out_a[s, 0] * la + out_b[s, 0] * lb
            m1 = metric[base | 32] + out_a[s, 1] * la + out_b[s, 1] * lb
            if m0 <= m1:  # ties resolve to the lower predecessor index
                new_metric[s] = m0
                choice[t, s] = 0
            else:
                new_metric[s] = m1
                choice[t, s] = 1
        metric[:] = new_metric
    if final_state >= 0:
        s = final_state
    else:
        s = 0
        best = metric[0]
        for k in range(1, N_STATES):
            if metric[k] < best:
                best = metric[k]
                s = k
    bits = np.empty(n, dtype=np.uint8)
    for t in range(n - 1, -1, -1):
        bits[t] = s & 1
        s = (s >> 1) | (np.uint8(choice[t, s]) << 5)
    return bits


def viterbi_decode(
    llrs: np.ndarray,
    init_state: int = 0,
    final_state: int | None = None,
    pinned: np.ndarray | None = None,
) -> np.ndarray:
    """Maximum-likelihood decode of a mother-rate LLR stream.

    ``llrs`` holds one value per mother-code bit (positive = bit 0 more
    likely, exactly 0 at punctured positions); the path metric minimized is
    the sum of LLRs over positions whose coded bit is 1.  ``final_state``
    constrains the terminal encoder state; ``pinned`` optionally fixes
    individual input bits (-1 = free, 0/1 = forced), which implements
    decoding up to and through known training bits.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.size % 2:
        raise ValueError("mother LLR stream length must be even")
    steps = llrs.reshape(-1, 2)
    n = steps.shape[0]
    if pinned is None:
        pin = np.full(n, -1, dtype=np.int8)
    else:
        pin = np.asarray(pinned, dtype=np.int8)
        if pin.size != n:
            raise ValueError("pinned mask length must equal the step count")
    fstate = -1 if final_state is None else int(final_state)
    return _viterbi_kernel(steps, int(init_state), fstate, pin, _OUT_A, _OUT_B)
