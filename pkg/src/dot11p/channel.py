"""Time-varying frequency-selective vehicular channel.

Tapped delay line with an exponentially decaying power delay profile and
independent Rayleigh tap processes whose temporal autocorrelation follows
the Jakes spectrum J0(2 pi f_d tau).  Taps are redrawn once per OFDM symbol
(block fading within a symbol) and applied multiplicatively in the
frequency domain, which is exact while the cyclic prefix exceeds the delay
span (1.6 us > 1.4 us here).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j0

from .params import N_SUBCARRIERS, SUBCARRIER_SPACING, T_SYM

SPEED_OF_LIGHT = 2.998e8  # m/s
CARRIER_FREQ = 5.9e9  # Hz


@dataclass(frozen=True)
class PowerDelayProfile:
    """Discrete PDP: tap delays and normalized average powers."""

    delays: np.ndarray  # seconds
    powers: np.ndarray  # sum to 1

    @property
    def n_taps(self) -> int:
        return self.delays.size


def exp_pdp(n_taps: int = 15, spacing: float = 0.1e-6, tau_rms: float = 0.4e-6) -> PowerDelayProfile:
    """Truncated, sampled exponential profile alpha_l ~ exp(-tau_l/tau_rms)."""
    if n_taps < 1 or spacing <= 0 or tau_rms <= 0:
        raise ValueError("n_taps >= 1 and positive spacing/tau_rms required")
    delays = np.arange(n_taps) * spacing
    powers = np.exp(-delays / tau_rms)
    powers = powers / powers.sum()
    return PowerDelayProfile(delays=delays, powers=powers)


def effective_rms_delay(pdp: PowerDelayProfile) -> float:
    """RMS delay spread of the truncated/sampled profile (not tau_rms)."""
    mean = float(np.sum(pdp.powers * pdp.delays))
    second = float(np.sum(pdp.powers * pdp.delays**2))
    return float(np.sqrt(second - mean**2))


@dataclass(frozen=True)
class DopplerSpec:
    """Maximum Doppler shift for a relative speed at the 5.9 GHz carrier."""

    speed: float  # m/s

    @property
    def f_d(self) -> float:
        return self.speed * CARRIER_FREQ / SPEED_OF_LIGHT

    @classmethod
    def from_kmph(cls, v_kmph: float) -> "DopplerSpec":
        return cls(speed=v_kmph / 3.6)


def jakes_rt(delta_m, doppler: DopplerSpec) -> np.ndarray:
    """Temporal channel correlation at a lag of ``delta_m`` OFDM symbols."""
    tau = np.asarray(delta_m, dtype=np.float64) * T_SYM
    return j0(2.0 * np.pi * doppler.f_d * tau)


def pdp_rf(delta_k, pdp: PowerDelayProfile) -> np.ndarray:
    """Frequency correlation at a spacing of ``delta_k`` subcarriers
    (Fourier transform of the discrete PDP)."""
    dk = np.atleast_1d(np.asarray(delta_k, dtype=np.float64))
    phase = -2j * np.pi * SUBCARRIER_SPACING * np.outer(dk, pdp.delays)
    out = (np.exp(phase) * pdp.powers).sum(axis=1)
    return out if np.ndim(delta_k) else out[0]


@dataclass(frozen=True)
class CorrelationModel:
    """Separable channel correlation r_H = r_t(dm) * r_f(dk), tabulated."""

    r_t: np.ndarray  # indexed by |dm|, length >= m_total
    r_f: np.ndarray  # indexed by dk + (len-1)//2, dk in [-52, 52]

    @classmethod
    def build(cls, pdp: PowerDelayProfile, doppler: DopplerSpec, max_dm: int) -> "CorrelationModel":
        r_t = jakes_rt(np.arange(max_dm + 1), doppler)
        dk = np.arange(-(N_SUBCARRIERS - 1), N_SUBCARRIERS)
        return cls(r_t=r_t, r_f=pdp_rf(dk, pdp))

    def cross(self, pos_a: np.ndarray, pos_b: np.ndarray) -> np.ndarray:
        """Correlation matrix between position lists of (row, subcarrier)."""
        dm = np.abs(pos_a[:, None, 0] - pos_b[None, :, 0])
        dk = pos_a[:, None, 1] - pos_b[None, :, 1] + (N_SUBCARRIERS - 1)
        return self.r_t[dm] * self.r_f[dk]


@dataclass
class ChannelRealization:
    """Per-symbol tap gains and the derived frequency response."""

    taps: np.ndarray  # [m_total, n_taps] complex
    h_freq: np.ndarray  # [m_total, 64] complex, FFT-bin order
    sigma2: float  # receiver-known noise variance per cell


def _sample_tap_delays(pdp: PowerDelayProfile) -> np.ndarray:
    samples = pdp.delays * 10e6  # delays in 100 ns ticks == sample periods
    if not np.allclose(samples, np.round(samples)):
        raise ValueError("tap delays must sit on the 10 MHz sample grid")
    return np.round(samples).astype(np.int64)


def freq_response(taps: np.ndarray, pdp: PowerDelayProfile) -> np.ndarray:
    """H[m, k] = sum_l h_l[m] exp(-j 2 pi k df tau_l) for all 64 FFT bins."""
    taps = np.atleast_2d(taps)
    impulse = np.zeros((taps.shape[0], N_SUBCARRIERS), dtype=np.complex128)
    impulse[:, _sample_tap_delays(pdp)] = taps
    return np.fft.fft(impulse, axis=-1)


def gen_fading(
    pdp: PowerDelayProfile,
    doppler: DopplerSpec,
    m_total: int,
    rng: np.random.Generator,
    sigma2: float = 0.0,
    n_sinusoids: int = 48,
) -> ChannelRealization:
    """Draw one frame of tap gains via a sum of random-phase sinusoids.

    Each tap is a sum of ``n_sinusoids`` unit phasors with uniform arrival
    angles and phases, scaled to power alpha_l.  The ensemble autocorrelation
    is then exactly alpha_l * J0(2 pi f_d tau) at every lag, and the
    marginals converge to complex Gaussian.  Sinusoid parameters are drawn
    before the time grid is applied, so a shorter frame simulated from the
    same stream sees the same channel process.
    """
    if m_total < 1:
        raise ValueError("need at least one OFDM symbol")
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(pdp.n_taps, n_sinusoids))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(pdp.n_taps, n_sinusoids))
    omega = 2.0 * np.pi * doppler.f_d * np.cos(angles)  # [taps, sin]
    # Advance each phasor one symbol per step instead of exponentiating the
    # full [time, taps, sin] grid; |step| = 1 so there is no drift to speak
    # of over a frame.
    step = np.exp(1j * omega * T_SYM)
    cur = np.exp(1j * phases)
    scale = np.sqrt(pdp.powers / n_sinusoids)
    taps = np.empty((m_total, pdp.n_taps), dtype=np.complex128)
    for m in range(m_total):
        taps[m] = cur.sum(axis=1)
        cur *= step
    taps *= scale
    return ChannelRealization(
        taps=taps, h_freq=freq_response(taps, pdp), sigma2=sigma2
    )


def apply_channel(
    values: np.ndarray, chan: ChannelRealization, rng: np.random.Generator
) -> np.ndarray:
    """R = H * S + W with i.i.d. complex Gaussian noise of variance sigma2
    on every cell (null cells included; the receiver never reads them)."""
    values = np.asarray(values)
    if values.shape != chan.h_freq.shape:
        raise ValueError("grid and channel dimensions do not match")
    noise = rng.standard_normal(values.shape) + 1j * rng.standard_normal(values.shape)
    noise *= np.sqrt(chan.sigma2 / 2.0)
    return chan.h_freq * values + noise


def esn0_to_sigma2(esn0_db: float, es: float = 1.0) -> float:
    """Noise variance for a target Es/N0 (N0 = sigma^2, Es defaults to the
    unit average cell energy of the normalized constellations)."""
    return es / 10.0 ** (esn0_db / 10.0)
