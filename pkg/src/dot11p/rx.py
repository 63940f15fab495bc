"""Noniterative receivers for standard and modified frames.

Five configurations share one pipeline (equalize, soft-demodulate,
deinterleave, Viterbi, descramble, CRC):

* ``ltls``    - hold the long-training LS estimate for the whole frame;
* ``sfmmse``  - LMMSE interpolation from long training plus comb pilots;
* ``mfmmse``  - LMMSE over all pilots including regenerated training rows,
                with block-bounded decoding between training sequences;
* ``mbmmse``  - the same pilots, but LMMSE solved per block of consecutive
                training symbols to keep the matrices small;
* ``perfect`` - genie channel knowledge, MMSE equalizer.

Frame length, MCS and the modified-frame flag are taken from the frame
layout (out-of-band SIGNAL); the noise variance is assumed known.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np
import scipy.linalg

from . import coding, frames, tx
from .channel import CorrelationModel
from .frames import FrameLayout
from .params import (
    DATA_BINS,
    DATA_SUBCARRIERS,
    LONG_TRAINING,
    Mcs,
    N_MACH,
    N_MEM,
    N_SERV,
    N_SUBCARRIERS,
    OCCUPIED_BINS,
    OCCUPIED_SUBCARRIERS,
    PILOT_BINS,
    PILOT_SUBCARRIERS,
)

RECEIVER_KINDS = ("ltls", "sfmmse", "mfmmse", "mbmmse", "perfect")


class ReceiverConfigError(ValueError):
    """Receiver kind incompatible with the frame being decoded."""


@dataclass(frozen=True)
class ReceiverConfig:
    kind: str
    traceback_depth: int = 96  # decode margin for the seed estimate, bits
    service_decode_symbols: int = 3
    signal_row_as_pilot: bool = False

    def __post_init__(self):
        if self.kind not in RECEIVER_KINDS:
            raise ReceiverConfigError(f"unknown receiver kind {self.kind!r}")

    @property
    def needs_training_rows(self) -> bool:
        return self.kind in ("mfmmse", "mbmmse")


@dataclass
class DecodeResult:
    fb: np.ndarray | None
    crc_ok: bool
    seed_estimate: int | None = None
    seed_decoded: int | None = None
    estimator_mse: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def csv_row(self) -> str:
        mse = "" if self.estimator_mse is None else f"{self.estimator_mse:.6e}"
        return (
            f"{int(self.crc_ok)},{self.seed_estimate or ''},"
            f"{self.seed_decoded or ''},{mse}"
        )


# ---------------------------------------------------------------------------
# Elementary estimators and the equalizer
# ---------------------------------------------------------------------------

def ls_lt_estimate(r_values: np.ndarray) -> np.ndarray:
    """Average the two long-training LS estimates; length-64 (FFT bins),
    zero on null subcarriers."""
    h = np.zeros(N_SUBCARRIERS, dtype=np.complex128)
    h[OCCUPIED_BINS] = 0.5 * (
        r_values[0, OCCUPIED_BINS] / LONG_TRAINING
        + r_values[1, OCCUPIED_BINS] / LONG_TRAINING
    )
    return h


def mmse_equalize(r, h, sigma2: float):
    """S_hat = R H* / (sigma^2 + |H|^2); zero where both H and sigma2 vanish."""
    r = np.asarray(r)
    h = np.asarray(h)
    denom = sigma2 + np.abs(h) ** 2
    out = np.zeros(np.broadcast_shapes(r.shape, h.shape), dtype=np.complex128)
    np.divide(r * np.conj(h), denom, out=out, where=denom > 0)
    return out


def soft_demod(s_eq, h_hat, sigma2: float, modulation: str) -> np.ndarray:
    """Max-log LLRs (positive = bit 0 more likely), CSI-weighted.

    Works on the equivalent matched-filter statistic z = R H* recovered
    from the MMSE equalizer output; Gray mapping makes I and Q separable.
    """
    s_eq = np.asarray(s_eq)
    h_hat = np.asarray(h_hat)
    z = s_eq * (sigma2 + np.abs(h_hat) ** 2)
    inv = 1.0 / sigma2 if sigma2 > 0 else 1e12  # noiseless: signs still exact
    if modulation == "BPSK":
        return (-4.0 * z.real * inv)[..., None]
    if modulation == "QPSK":
        scale = -2.0 * np.sqrt(2.0) * inv
        return np.stack([scale * z.real, scale * z.imag], axis=-1)
    raise ValueError(f"soft demodulation not supported for {modulation!r}")


# ---------------------------------------------------------------------------
# Scrambler seed estimation and training-row regeneration
# ---------------------------------------------------------------------------

def _mother_llrs(r_rows, h_rows, sigma2, mcs: Mcs) -> np.ndarray:
    """Equalize data cells of the given rows and return mother-rate LLRs."""
    s_eq = mmse_equalize(r_rows[:, DATA_BINS], h_rows[:, DATA_BINS], sigma2)
    llrs = soft_demod(s_eq, h_rows[:, DATA_BINS], sigma2, mcs.modulation)
    blocks = tx.deinterleave(llrs.reshape(-1, mcs.n_cbps), mcs)
    n_rows = r_rows.shape[0]
    return coding.depuncture_llrs(
        blocks.reshape(-1), mcs.code_rate, 2 * mcs.n_dbps * n_rows
    )


def estimate_scrambler_seed(
    r_values: np.ndarray,
    h_lt: np.ndarray,
    sigma2: float,
    mcs: Mcs,
    n_symbols: int = 3,
    min_margin_bits: int = 96,
) -> int:
    """Recover the scrambler seed from the first data symbols.

    Equalizes with the long-training estimate, decodes from the known
    all-zero initial state, and reads the first 7 decoded bits: the SERVICE
    field starts with 7 zeros, so in the still-scrambled domain these are
    the LFSR output, which inverts to its seed.  The window is widened until
    the decode margin beyond bit 7 is comfortable.
    """
    need = ceil((7 + min_margin_bits) / mcs.n_dbps)
    n_symbols = min(max(n_symbols, need), r_values.shape[0] - 3)
    rows = r_values[3 : 3 + n_symbols]
    llrs = _mother_llrs(rows, np.broadcast_to(h_lt, rows.shape), sigma2, mcs)
    bits = coding.viterbi_decode(llrs, init_state=0)
    return coding.seed_from_output(bits[:7])


def regenerate_training_rows(
    seed: int, ptb: np.ndarray, layout: FrameLayout
) -> np.ndarray:
    """Reproduce the transmitter's frequency-domain training rows.

    Replays scramble -> encode -> interleave -> map on the known training
    bits only.  The encoder state entering each training portion is the
    last six scrambled bits, i.e. the scrambled termination bits, so the
    result depends only on (seed, PTb, layout), never on payload.
    """
    mcs = layout.mcs
    ptb = np.asarray(ptb, dtype=np.uint8)
    n_dbps = mcs.n_dbps
    n_pt = layout.n_pt
    rows = np.zeros((n_pt, N_SUBCARRIERS), dtype=np.complex128)
    offsets = np.asarray(layout.ptb_offsets, dtype=np.int64)
    term_at = N_SERV + N_MACH + offsets
    stream = coding.scrambler_sequence(seed, int(term_at.max()) + ptb.size)
    scrambled = ptb[None, :] ^ stream[term_at[:, None] + np.arange(ptb.size)]
    # Encoding the six termination bits first reproduces the encoder state
    # they leave behind; their own outputs are discarded.
    coded = coding.conv_encode_rows(scrambled)[:, 2 * N_MEM :]
    punctured = coding.puncture(coded, mcs.code_rate)
    symbols = tx.map_bits(tx.interleave(punctured, mcs).reshape(-1), mcs.modulation)
    rows[:, DATA_BINS] = symbols.reshape(n_pt, 48)
    data_idx = (term_at + N_MEM) // n_dbps
    for i in range(n_pt):
        rows[i, PILOT_BINS] = tx.pilot_values(1 + int(data_idx[i]))
    return rows


# ---------------------------------------------------------------------------
# Pilot bookkeeping and LMMSE estimation
# ---------------------------------------------------------------------------

@dataclass
class PilotSet:
    """Pilot cells: grid positions, FFT bins, and their known values.

    Training-row data cells depend on the per-frame scrambler seed, so their
    values are patched in per frame via ``dynamic_rows``; everything else is
    fixed by the layout.
    """

    pos: np.ndarray  # [n, 2] (row, signed subcarrier)
    bins: np.ndarray  # [n]
    values: np.ndarray  # [n] complex; dynamic entries overwritten per frame
    dynamic_rows: list  # (slice into the arrays, index into training rows)

    @property
    def n(self) -> int:
        return self.pos.shape[0]

    def frame_values(self, training_rows: np.ndarray | None) -> np.ndarray:
        vals = self.values.copy()
        for sl, i in self.dynamic_rows:
            vals[sl] = training_rows[i, self.bins[sl]]
        return vals

    def ls_estimates(self, r_values, training_rows=None) -> np.ndarray:
        vals = self.frame_values(training_rows)
        return r_values[self.pos[:, 0], self.bins] / vals


def _occupied_positions(rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    m = np.repeat(rows, OCCUPIED_SUBCARRIERS.size)
    k = np.tile(OCCUPIED_SUBCARRIERS, rows.size)
    return np.column_stack([m, k])


def build_pilot_set(
    layout: FrameLayout,
    use_training_rows: bool,
    signal_row_as_pilot: bool = False,
    row_range: tuple[int, int] | None = None,
) -> PilotSet:
    """Collect pilot cells for rows in ``row_range`` (inclusive, default all)."""
    lo, hi = row_range if row_range else (0, layout.m_total - 1)
    training = set(layout.training_rows) if use_training_rows else set()
    pos, bins, vals = [], [], []
    dynamic = []

    def add(row, subcarriers, values):
        pos.append(np.column_stack([np.full(subcarriers.size, row), subcarriers]))
        bins.append(subcarriers % N_SUBCARRIERS)
        vals.append(np.asarray(values, dtype=np.complex128))

    for row in range(lo, hi + 1):
        if row < 2:
            add(row, OCCUPIED_SUBCARRIERS, LONG_TRAINING)
        elif row in training:
            start = sum(v.size for v in vals)
            add(row, OCCUPIED_SUBCARRIERS, np.ones(52))
            idx = layout.training_rows.index(row)
            dynamic.append((slice(start, start + 52), idx))
        elif row == 2 and signal_row_as_pilot:
            sym = tx.build_signal_symbol(layout.psdu_octets, layout.mcs, layout.is_mf)
            sub = np.concatenate([DATA_SUBCARRIERS, PILOT_SUBCARRIERS])
            val = np.concatenate([sym, tx.pilot_values(0)])
            order = np.argsort(sub)
            add(row, sub[order], val[order])
        else:
            add(row, PILOT_SUBCARRIERS, tx.pilot_values(row - 2))

    return PilotSet(
        pos=np.concatenate(pos),
        bins=np.concatenate(bins),
        values=np.concatenate(vals),
        dynamic_rows=dynamic,
    )


def _weights_and_posterior(
    corr: CorrelationModel,
    pilot_pos: np.ndarray,
    target_pos: np.ndarray,
    noise_diag: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Interpolation matrix plus the a-priori error variance per target.

    The posterior variance r_H(0) - diag(W C^H) quantifies how reliable the
    estimate at each cell will be; it depends only on geometry and noise
    levels, never on received data.
    """
    a = corr.cross(pilot_pos, pilot_pos)
    diag = np.asarray(noise_diag, dtype=np.float64)
    if diag.min() <= 0:
        diag = diag + 1e-12 * np.trace(a).real
    a[np.diag_indices_from(a)] += diag
    c = corr.cross(target_pos, pilot_pos)
    try:
        w = scipy.linalg.solve(a, c.conj().T, assume_a="pos").conj().T
    except scipy.linalg.LinAlgError:
        a[np.diag_indices_from(a)] += 1e-12 * np.trace(a).real
        w = scipy.linalg.solve(a, c.conj().T, assume_a="her").conj().T
    post = 1.0 - np.einsum("ij,ij->i", w, c.conj()).real
    return w, np.clip(post, 0.0, None)


def lmmse_weights(
    corr: CorrelationModel,
    pilot_pos: np.ndarray,
    target_pos: np.ndarray,
    sigma2: float,
    pilot_values: np.ndarray | None = None,
) -> np.ndarray:
    """W such that H_hat(targets) = W @ H_ls(pilots).

    Implements R_cross (R_pp + sigma^2 (P P^H)^-1)^-1 via a Hermitian solve;
    a tiny diagonal jitter regularizes the noiseless case.
    """
    if pilot_values is None:
        inv_p2 = np.ones(pilot_pos.shape[0])
    else:
        inv_p2 = 1.0 / np.abs(np.asarray(pilot_values)) ** 2
    w, _ = _weights_and_posterior(corr, pilot_pos, target_pos, sigma2 * inv_p2)
    return w


def lmmse_estimate(
    h_p: np.ndarray,
    pilot_pos: np.ndarray,
    target_pos: np.ndarray,
    corr: CorrelationModel,
    sigma2: float,
    pilot_values: np.ndarray | None = None,
) -> np.ndarray:
    """One-shot LMMSE interpolation of LS pilot estimates to target cells."""
    w = lmmse_weights(corr, pilot_pos, target_pos, sigma2, pilot_values)
    return w @ h_p


# ---------------------------------------------------------------------------
# Per-scenario receiver context (precomputed interpolation weights)
# ---------------------------------------------------------------------------

@dataclass
class _Block:
    pilots: PilotSet
    weights: np.ndarray
    target_rows: np.ndarray
    leading_row: int | None  # training row refined by the previous block


class ReceiverContext:
    """Everything about (receiver, layout, noise level, channel statistics)
    that does not change from frame to frame.

    """

    def __init__(
        self,
        cfg: ReceiverConfig,
        layout: FrameLayout,
        sigma2: float,
        corr: CorrelationModel | None,
    ):
        if cfg.needs_training_rows and not layout.is_mf:
            raise ReceiverConfigError(
                f"receiver {cfg.kind!r} requires a modified frame"
            )
        if layout.mcs.modulation not in ("BPSK", "QPSK"):
            raise ValueError("decoding supports BPSK and QPSK only")
        self.cfg = cfg
        self.layout = layout
        self.sigma2 = sigma2
        self.corr = corr
        self.data_rows = np.arange(3, layout.m_total)
        self.target_pos = _occupied_positions(self.data_rows)
        self.pilots: PilotSet | None = None
        self.weights: np.ndarray | None = None
        self.blocks: list[_Block] | None = None
        if cfg.kind in ("sfmmse", "mfmmse"):
            self.pilots = build_pilot_set(
                layout, cfg.kind == "mfmmse", cfg.signal_row_as_pilot
            )
            self.weights = lmmse_weights(
                corr, self.pilots.pos, self.target_pos, sigma2
            )
        elif cfg.kind == "mbmmse":
            self.blocks = self._build_blocks()

    def _build_blocks(self) -> list:
        layout, cfg = self.layout, self.cfg
        bounds = layout.training_rows
        blocks = []
        edges = [0] + bounds + ([layout.m_total - 1] if bounds[-1] < layout.m_total - 1 else [])
        for b in range(len(edges) - 1):
            lo, hi = edges[b], edges[b + 1]
            leading = lo if b > 0 else None
            pilots = build_pilot_set(
                layout,
                use_training_rows=True,
                signal_row_as_pilot=cfg.signal_row_as_pilot,
                row_range=(0 if b == 0 else lo, hi),
            )
            # the leading training row carries the previous block's refined
            # estimates; they keep the LS noise weighting (their errors are
            # correlated with this block's channel, so nominally "better"
            # weights would propagate errors down the frame)
            target_rows = np.arange(max(lo + 1, 3), hi + 1)
            weights = lmmse_weights(
                self.corr, pilots.pos, _occupied_positions(target_rows), self.sigma2
            )
            blocks.append(_Block(pilots, weights, target_rows, leading))
        return blocks

    # -- channel estimation ------------------------------------------------

    def estimate(
        self,
        r_values: np.ndarray,
        h_lt: np.ndarray,
        training_rows: np.ndarray | None,
        truth_h: np.ndarray | None,
    ) -> np.ndarray:
        """Channel estimates for all data rows, shaped [m_total, 64]."""
        kind = self.cfg.kind
        h_hat = np.zeros((self.layout.m_total, N_SUBCARRIERS), dtype=np.complex128)
        if kind == "perfect":
            if truth_h is None:
                raise ValueError("perfect-CSI receiver needs the true channel")
            h_hat[:] = truth_h
            return h_hat
        if kind == "ltls":
            h_hat[self.data_rows] = h_lt
            return h_hat
        if kind in ("sfmmse", "mfmmse"):
            h_p = self.pilots.ls_estimates(r_values, training_rows)
            est = self.weights @ h_p
            h_hat[self.data_rows[:, None], OCCUPIED_BINS[None, :]] = est.reshape(
                self.data_rows.size, 52
            )
            return h_hat
        # mbmmse: per-block solves with trailing-training hand-off
        carry = None  # refined estimates of the previous block's trailing row
        for blk in self.blocks:
            h_p = blk.pilots.ls_estimates(r_values, training_rows)
            if blk.leading_row is not None and carry is not None:
                lead = blk.pilots.pos[:, 0] == blk.leading_row
                h_p[lead] = carry
            est = (blk.weights @ h_p).reshape(blk.target_rows.size, 52)
            h_hat[blk.target_rows[:, None], OCCUPIED_BINS[None, :]] = est
            trailing = blk.target_rows[-1]
            carry = est[-1] if trailing in self.layout.training_rows else None
        return h_hat


# ---------------------------------------------------------------------------
# Frame decoding
# ---------------------------------------------------------------------------

def _decode_stream_whole(llrs: np.ndarray, n_info: int) -> np.ndarray:
    """Whole-frame Viterbi: known zero start, TAIL-terminated zero end."""
    return coding.viterbi_decode(llrs[: 2 * n_info], init_state=0, final_state=0)


def _decode_stream_blockwise(
    llrs: np.ndarray, layout: FrameLayout, seed: int, ptb: np.ndarray, n_info: int
) -> np.ndarray:
    """Viterbi per inter-training block with pinned boundary bits.

    The scrambled training bits are known given the seed: each segment is
    decoded from the known state left by the previous training portion and
    through the six known termination bits of the next one.  Known training
    spans are inserted verbatim, reconstructing the full scrambled stream.
    """
    mcs = layout.mcs
    stream = coding.scrambler_sequence(seed, n_info)
    out = np.zeros(n_info, dtype=np.uint8)
    term_starts = [N_SERV + N_MACH + off for off in layout.ptb_offsets]
    state = 0
    start = 0
    for t in term_starts:
        train_at = t + N_MEM
        scr_term = ptb[:N_MEM] ^ stream[t:train_at]
        scr_train = ptb[N_MEM:] ^ stream[train_at : train_at + mcs.n_dbps]
        stop = t + N_MEM  # decode through the known termination bits
        pinned = np.full(stop - start, -1, dtype=np.int8)
        pinned[-N_MEM:] = scr_term
        seg = coding.viterbi_decode(
            llrs[2 * start : 2 * stop],
            init_state=state,
            final_state=coding.encoder_state_after(scr_term),
            pinned=pinned,
        )
        out[start:stop] = seg
        out[train_at : train_at + mcs.n_dbps] = scr_train
        state = coding.encoder_state_after(scr_train)
        start = train_at + mcs.n_dbps
    out[start:] = coding.viterbi_decode(
        llrs[2 * start : 2 * n_info], init_state=state, final_state=0
    )
    return out


def decode_frame(
    r_values: np.ndarray,
    cfg: ReceiverConfig,
    layout: FrameLayout,
    sigma2: float,
    corr: CorrelationModel | None = None,
    truth_h: np.ndarray | None = None,
    context: ReceiverContext | None = None,
    ptb: np.ndarray | None = None,
) -> DecodeResult:
    """Decode one received frequency-domain frame.

    ``corr`` (channel correlation statistics) is required by the LMMSE
    receivers unless a prebuilt ``context`` is supplied.  A wrong scrambler
    seed or any decoding failure surfaces as a CRC failure, never an
    exception.
    """
    if context is None:
        context = ReceiverContext(cfg, layout, sigma2, corr)
    mcs = layout.mcs
    if ptb is None:
        ptb = frames.default_ptb(mcs)

    h_lt = ls_lt_estimate(r_values)

    seed_est = None
    training_rows = None
    if cfg.needs_training_rows:
        try:
            seed_est = estimate_scrambler_seed(
                r_values, h_lt, sigma2, mcs,
                cfg.service_decode_symbols, cfg.traceback_depth,
            )
            training_rows = regenerate_training_rows(seed_est, ptb, layout)
        except ValueError:
            return DecodeResult(fb=None, crc_ok=False, seed_estimate=None)

    h_hat = context.estimate(r_values, h_lt, training_rows, truth_h)

    mse = None
    if truth_h is not None:
        rows = context.data_rows
        diff = (h_hat - truth_h)[rows[:, None], OCCUPIED_BINS[None, :]]
        mse = float(np.mean(np.abs(diff) ** 2))

    data = r_values[3:]
    llrs = _mother_llrs(data, h_hat[3:], sigma2, mcs)

    n_info = N_SERV + 8 * layout.psdu_octets + N_MEM
    if cfg.needs_training_rows:
        scrambled = _decode_stream_blockwise(llrs, layout, seed_est, ptb, n_info)
    else:
        scrambled = _decode_stream_whole(llrs, n_info)

    try:
        seed_rx = coding.seed_from_output(scrambled[:7])
    except ValueError:
        return DecodeResult(None, False, seed_est, None, mse)
    descrambled = scrambled ^ coding.scrambler_sequence(seed_rx, n_info)
    psdu = descrambled[N_SERV : N_SERV + 8 * layout.psdu_octets]
    crc_ok = frames.crc32_check(psdu)

    fb = None
    if crc_ok:
        mfb = psdu[N_MACH : N_MACH + layout.n_mfb]
        fb = (
            frames.strip_pseudo_training(mfb, layout) if layout.is_mf else mfb
        )
    return DecodeResult(fb, crc_ok, seed_est, seed_rx, mse)
