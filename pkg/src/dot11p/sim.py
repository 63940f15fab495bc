"""Monte Carlo frame-error-rate harness.

Each trial draws an independent frame body, scrambler seed, channel
realization, and noise from a counter-based random stream keyed by
(master seed, sweep-point index, trial index), so results are bit-identical
no matter how trials are scheduled across workers.  A frame counts as an
error when the receiver-side CRC check fails.
"""
from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .channel import (
    CorrelationModel,
    DopplerSpec,
    apply_channel,
    esn0_to_sigma2,
    exp_pdp,
    gen_fading,
)
from .frames import FrameTooShortError, default_ptb, effective_bit_rate, standard_layout
from .params import mcs_table
from .rx import ReceiverConfig, ReceiverContext, decode_frame
from .tx import encode_frame

BATCH = 100  # stop-rule granularity; fixed so worker count cannot matter


@dataclass(frozen=True)
class SimConfig:
    """One sweep scenario; see the CLI for the matching flags."""

    mcs_index: int = 2
    nfb_bytes: int = 146
    frame_kind: str = "sf"  # 'sf' | 'mf'
    m_p: int = 8
    velocity_kmph: float = 100.0
    esn0_db: tuple = tuple(range(10, 31, 2))
    frames: int = 2000
    max_errors: int | None = 100
    receiver: str = "sfmmse"
    master_seed: int = 1
    workers: int = 1
    # channel model (defaults: 15-tap exponential PDP, 0-1.4 us)
    n_taps: int = 15
    tap_spacing_us: float = 0.1
    tau_rms_us: float = 0.4

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("need at least one frame per point")
        if not self.esn0_db:
            raise ValueError("Es/N0 list must not be empty")
        if self.frame_kind not in ("sf", "mf"):
            raise ValueError(f"unknown frame kind {self.frame_kind!r}")
        _build_layout(self)  # validates MCS index and MF length bounds


@dataclass
class SimResult:
    """One (scenario, Es/N0) record."""

    esn0_db: float
    frames_run: int
    frame_errors: int
    undetected_errors: int
    wall_time_s: float

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames_run

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.frame_errors, self.frames_run)


def wilson_interval(errors: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = errors / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _build_layout(cfg: SimConfig):
    mcs = mcs_table(cfg.mcs_index)
    fb = np.zeros(cfg.nfb_bytes * 8, dtype=np.uint8)
    if cfg.frame_kind == "mf":
        from .frames import insert_pseudo_training

        _, layout = insert_pseudo_training(fb, default_ptb(mcs), mcs, cfg.m_p)
    else:
        layout = standard_layout(fb.size, mcs)
    return layout


class PointContext:
    """Per-(config, Es/N0) state shared by every trial of a sweep point."""

    def __init__(self, cfg: SimConfig, esn0_db: float):
        self.cfg = cfg
        self.esn0_db = esn0_db
        self.mcs = mcs_table(cfg.mcs_index)
        self.layout = _build_layout(cfg)
        self.ptb = default_ptb(self.mcs)
        self.sigma2 = esn0_to_sigma2(esn0_db)
        self.pdp = exp_pdp(
            cfg.n_taps, cfg.tap_spacing_us * 1e-6, cfg.tau_rms_us * 1e-6
        )
        self.doppler = DopplerSpec.from_kmph(cfg.velocity_kmph)
        self.corr = CorrelationModel.build(self.pdp, self.doppler, self.layout.m_total)
        self.rx_cfg = ReceiverConfig(cfg.receiver)
        self.rx_ctx = ReceiverContext(self.rx_cfg, self.layout, self.sigma2, self.corr)

    def run_trial(self, point_index: int, trial_index: int) -> tuple[bool, bool]:
        """Returns (crc_failed, undetected_error) for one frame."""
        cfg = self.cfg
        rng = np.random.default_rng(
            [cfg.master_seed, point_index, trial_index]
        )
        fb = rng.integers(0, 2, self.layout.n_fb, dtype=np.uint8)
        seed = int(rng.integers(1, 128))
        frame = encode_frame(
            fb, self.mcs, seed, self.layout.kind, cfg.m_p, ptb=self.ptb
        )
        chan = gen_fading(
            self.pdp, self.doppler, self.layout.m_total, rng, self.sigma2
        )
        received = apply_channel(frame.grid.values, chan, rng)
        truth = chan.h_freq if self.rx_cfg.kind == "perfect" else None
        result = decode_frame(
            received, self.rx_cfg, self.layout, self.sigma2,
            context=self.rx_ctx, truth_h=truth, ptb=self.ptb,
        )
        if not result.crc_ok:
            return True, False
        return False, not np.array_equal(result.fb, fb)


# Interpolation weights can be tens of MB for long frames, so only a few
# recently used point contexts are kept alive.
_CONTEXT_CACHE: dict = {}
_CONTEXT_CACHE_MAX = 4


def _get_context(cfg: SimConfig, esn0_db: float) -> PointContext:
    key = (
        cfg.mcs_index, cfg.nfb_bytes, cfg.frame_kind, cfg.m_p,
        cfg.velocity_kmph, cfg.receiver, cfg.n_taps, cfg.tap_spacing_us,
        cfg.tau_rms_us, esn0_db,
    )
    ctx = _CONTEXT_CACHE.pop(key, None)
    if ctx is None:
        ctx = PointContext(cfg, esn0_db)
    _CONTEXT_CACHE[key] = ctx
    while len(_CONTEXT_CACHE) > _CONTEXT_CACHE_MAX:
        _CONTEXT_CACHE.pop(next(iter(_CONTEXT_CACHE)))
    return ctx


def _run_batch(cfg: SimConfig, esn0_db: float, point_index: int, lo: int, hi: int):
    ctx = _get_context(cfg, esn0_db)
    errors = undetected = 0
    for trial in range(lo, hi):
        err, undet = ctx.run_trial(point_index, trial)
        errors += err
        undetected += undet
    return errors, undetected


def run_point(cfg: SimConfig, esn0_db: float, point_index: int = 0) -> SimResult:
    """Simulate one Es/N0 point, honoring the stop-at-errors rule.

    Trials are consumed in fixed batches of :data:`BATCH`; the stop decision
    looks only at completed batches in index order, so results do not depend
    on the worker count.
    """
    start = time.perf_counter()
    batches = [
        (lo, min(lo + BATCH, cfg.frames)) for lo in range(0, cfg.frames, BATCH)
    ]
    errors = undetected = frames_run = 0

    def consume(result, hi_lo):
        nonlocal errors, undetected, frames_run
        errors += result[0]
        undetected += result[1]
        frames_run += hi_lo[1] - hi_lo[0]
        return cfg.max_errors is not None and errors >= cfg.max_errors

    if cfg.workers <= 1:
        for lo, hi in batches:
            if consume(_run_batch(cfg, esn0_db, point_index, lo, hi), (lo, hi)):
                break
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            pending = {}
            issued = 0
            stop = False
            while issued < len(batches) or pending:
                while (
                    not stop
                    and issued < len(batches)
                    and len(pending) < 2 * cfg.workers
                ):
                    lo, hi = batches[issued]
                    pending[issued] = (pool.submit(
                        _run_batch, cfg, esn0_db, point_index, lo, hi
                    ), (lo, hi))
                    issued += 1
                if not pending:
                    break
                next_idx = min(pending)
                fut, span = pending.pop(next_idx)
                if consume(fut.result(), span):
                    stop = True
                    for f, _ in pending.values():
                        f.cancel()
                    pending.clear()
    return SimResult(
        esn0_db=esn0_db,
        frames_run=frames_run,
        frame_errors=errors,
        undetected_errors=undetected,
        wall_time_s=time.perf_counter() - start,
    )


def run_sweep(cfg: SimConfig) -> tuple[list[SimResult], dict]:
    """One SimResult per Es/N0 point plus a reproducibility manifest."""
    results = [
        run_point(cfg, esn0, idx) for idx, esn0 in enumerate(cfg.esn0_db)
    ]
    manifest = {
        "package_version": __version__,
        "config": dataclasses.asdict(cfg),
        "rng": "numpy default_rng (PCG64) seeded by "
               "[master_seed, point_index, trial_index]",
        "stream_ids": [
            [cfg.master_seed, idx, "0..frames"] for idx in range(len(cfg.esn0_db))
        ],
        "layout": _build_layout(cfg).to_json(),
    }
    return results, manifest


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

CSV_HEADER = (
    "mcs,nfb_bytes,frame,mp,velocity_kmph,receiver,"
    "esn0_db,frames,errors,fer,ci_lo,ci_hi"
)


def emit_csv(cfg: SimConfig, results: list[SimResult], path) -> None:
    with open(path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for r in results:
            lo, hi = r.ci
            f.write(
                f"{cfg.mcs_index},{cfg.nfb_bytes},{cfg.frame_kind},{cfg.m_p},"
                f"{cfg.velocity_kmph},{cfg.receiver},{r.esn0_db},{r.frames_run},"
                f"{r.frame_errors},{r.fer:.6g},{lo:.6g},{hi:.6g}\n"
            )


def emit_manifest(manifest: dict, path) -> None:
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2)


def emit_bitrate_table(
    mcs_index: int, m_p_list, nfb_bytes_range, path
) -> None:
    """CSV of effective bit rates: standard frame and one modified-frame
    column per training spacing; blank when an MF cannot be formed."""
    mcs = mcs_table(mcs_index)
    cols = [f"r_mf_mbps_mp{m}" for m in m_p_list]
    with open(path, "w") as f:
        f.write("n_fb_bytes,r_sf_mbps," + ",".join(cols) + "\n")
        for nb in nfb_bytes_range:
            n_fb = 8 * nb
            row = [str(nb), f"{effective_bit_rate(n_fb, mcs, 'SF') / 1e6:.6f}"]
            for m_p in m_p_list:
                try:
                    rate = effective_bit_rate(n_fb, mcs, "MF", m_p)
                    row.append(f"{rate / 1e6:.6f}")
                except (FrameTooShortError, ValueError):
                    row.append("")
            f.write(",".join(row) + "\n")
